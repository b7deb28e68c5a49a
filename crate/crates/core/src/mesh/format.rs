//! FKMESH01: little-endian binary mesh file, plus an equivalent JSON
//! sidecar for browser clients.
//!
//! Layout: magic, origin (2 x f64), layer name (u32 length + UTF-8),
//! vertex count, triangle count and color-table length (u32 each), then
//! positions (3 x f32 per vertex), indices (3 x u32 per triangle),
//! triangle feature ids (u64 each) and color entries (u64 id + RGBA).

use serde::{Deserialize, Serialize};

use super::{Mesh, MeshError};
use crate::model::FeatureId;

pub const MESH_MAGIC: &[u8; 8] = b"FKMESH01";

pub fn export_mesh(mesh: &Mesh) -> Vec<u8> {
    let v = mesh.vertex_count();
    let t = mesh.triangle_count();
    let mut out =
        Vec::with_capacity(40 + mesh.layer.len() + 12 * v + 20 * t + 12 * mesh.colors.len());
    out.extend_from_slice(MESH_MAGIC);
    out.extend(mesh.origin.0.to_le_bytes());
    out.extend(mesh.origin.1.to_le_bytes());
    out.extend((mesh.layer.len() as u32).to_le_bytes());
    out.extend(mesh.layer.as_bytes());
    out.extend((v as u32).to_le_bytes());
    out.extend((t as u32).to_le_bytes());
    out.extend((mesh.colors.len() as u32).to_le_bytes());
    mesh.positions
        .iter()
        .for_each(|p| out.extend(p.to_le_bytes()));
    mesh.indices
        .iter()
        .for_each(|i| out.extend(i.to_le_bytes()));
    mesh.triangle_feature
        .iter()
        .for_each(|id| out.extend(id.0.to_le_bytes()));
    for (id, rgba) in &mesh.colors {
        out.extend(id.0.to_le_bytes());
        out.extend(rgba);
    }
    out
}

struct Cursor<'a> {
    data: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], MeshError> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| MeshError::Format(format!("truncated at byte {}", self.at)))?;
        let s = &self.data[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], MeshError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32, MeshError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn count(&mut self, per_item: usize) -> Result<usize, MeshError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(per_item) > self.data.len() {
            return Err(MeshError::Format(format!("count {n} exceeds file size")));
        }
        Ok(n)
    }
}

pub fn import_mesh(bytes: &[u8]) -> Result<Mesh, MeshError> {
    let mut c = Cursor { data: bytes, at: 0 };
    if c.take(8)? != MESH_MAGIC {
        return Err(MeshError::Format("bad magic".into()));
    }
    let origin = (
        f64::from_le_bytes(c.array()?),
        f64::from_le_bytes(c.array()?),
    );
    let name_len = c.count(1)?;
    let layer = String::from_utf8(c.take(name_len)?.to_vec())
        .map_err(|_| MeshError::Format("layer name is not UTF-8".into()))?;
    let v = c.count(12)?;
    let t = c.count(20)?;
    let l = c.count(12)?;
    let positions = (0..3 * v)
        .map(|_| c.array().map(f32::from_le_bytes))
        .collect::<Result<Vec<_>, _>>()?;
    let indices = (0..3 * t).map(|_| c.u32()).collect::<Result<Vec<_>, _>>()?;
    let triangle_feature = (0..t)
        .map(|_| c.array().map(|b| FeatureId(u64::from_le_bytes(b))))
        .collect::<Result<Vec<_>, _>>()?;
    let colors = (0..l)
        .map(|_| Ok((FeatureId(u64::from_le_bytes(c.array()?)), c.array()?)))
        .collect::<Result<Vec<_>, MeshError>>()?;
    if c.at != bytes.len() {
        return Err(MeshError::Format(format!(
            "{} trailing bytes",
            bytes.len() - c.at
        )));
    }
    if let Some(bad) = indices.iter().find(|&&i| i as usize >= v) {
        return Err(MeshError::Format(format!("index {bad} out of range")));
    }
    Ok(Mesh {
        layer,
        origin,
        positions,
        indices,
        triangle_feature,
        colors,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Sidecar {
    format: String,
    layer: String,
    origin: [f64; 2],
    positions: Vec<f32>,
    indices: Vec<u32>,
    triangle_feature: Vec<u64>,
    colors: Vec<SidecarColor>,
}

#[derive(Serialize, Deserialize)]
struct SidecarColor {
    id: u64,
    rgba: [u8; 4],
}

/// JSON document carrying the same arrays as [`export_mesh`].
pub fn mesh_sidecar(mesh: &Mesh) -> Vec<u8> {
    let doc = Sidecar {
        format: "FKMESH01".into(),
        layer: mesh.layer.clone(),
        origin: [mesh.origin.0, mesh.origin.1],
        positions: mesh.positions.clone(),
        indices: mesh.indices.clone(),
        triangle_feature: mesh.triangle_feature.iter().map(|id| id.0).collect(),
        colors: mesh
            .colors
            .iter()
            .map(|(id, rgba)| SidecarColor {
                id: id.0,
                rgba: *rgba,
            })
            .collect(),
    };
    serde_json::to_vec(&doc).expect("sidecar always serializes")
}

pub fn mesh_from_sidecar(bytes: &[u8]) -> Result<Mesh, MeshError> {
    let doc: Sidecar =
        serde_json::from_slice(bytes).map_err(|e| MeshError::Format(e.to_string()))?;
    if doc.format != "FKMESH01" {
        return Err(MeshError::Format(format!(
            "unknown format '{}'",
            doc.format
        )));
    }
    Ok(Mesh {
        layer: doc.layer,
        origin: (doc.origin[0], doc.origin[1]),
        positions: doc.positions,
        indices: doc.indices,
        triangle_feature: doc.triangle_feature.into_iter().map(FeatureId).collect(),
        colors: doc
            .colors
            .into_iter()
            .map(|c| (FeatureId(c.id), c.rgba))
            .collect(),
    })
}
