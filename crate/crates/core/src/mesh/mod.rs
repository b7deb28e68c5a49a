//! Triangle meshes with a per-triangle feature channel: polygon
//! triangulation, footprint extrusion, polyline stroking, thematic color
//! tables and the binary mesh file format.

mod format;
mod thematic;
mod triangulate;

use thiserror::Error;

use crate::exec::{self, ExecMode};
use crate::model::{
    bbox, get_number, FeatureCollection, FeatureId, GeometryKind, Polygon, Position, Shape,
};

pub use format::{export_mesh, import_mesh, mesh_from_sidecar, mesh_sidecar, MESH_MAGIC};
pub use thematic::{apply_thematic, ColorScale, ScaleKind, Thematic, NEUTRAL_COLOR};
pub use triangulate::{polygon_vertices, triangle_area, triangulate_polygon};

pub type Rgba = [u8; 4];

/// Triangles with area at or below this (scene units squared) are dropped.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("no ear found while triangulating ring {ring}")]
    TriangulationStall { ring: usize },
    #[error("extrusion height must be positive, got {0}")]
    NonPositiveHeight(f64),
    #[error("stroke width must be positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("polyline has fewer than two distinct points")]
    DegenerateLine,
    #[error("style does not fit {0} geometry")]
    StyleMismatch(GeometryKind),
    #[error("feature {id}: {source}")]
    Feature {
        id: FeatureId,
        source: Box<MeshError>,
    },
    #[error("malformed mesh file: {0}")]
    Format(String),
}

/// Geometry in world coordinates before it is placed into a layer mesh.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeshFragment {
    pub positions: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

impl MeshFragment {
    fn append(&mut self, other: MeshFragment) {
        let base = self.positions.len() as u32;
        self.positions.extend(other.positions);
        self.triangles
            .extend(other.triangles.into_iter().map(|t| t.map(|i| i + base)));
    }

    /// Sum of triangle areas in 3D.
    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                area3(
                    self.positions[t[0] as usize],
                    self.positions[t[1] as usize],
                    self.positions[t[2] as usize],
                )
            })
            .sum()
    }
}

fn area3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let n = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
}

/// Layer mesh in scene units: world meters minus `origin`, z up.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mesh {
    pub layer: String,
    pub origin: (f64, f64),
    /// x, y, z per vertex.
    pub positions: Vec<f32>,
    /// Three vertex indices per triangle.
    pub indices: Vec<u32>,
    pub triangle_feature: Vec<FeatureId>,
    /// Per-feature color table; empty when the mesh carries no colors.
    pub colors: Vec<(FeatureId, Rgba)>,
}

impl Mesh {
    pub fn vertex_count(&self) -> usize {
        self.positions.len() / 3
    }

    pub fn triangle_count(&self) -> usize {
        self.indices.len() / 3
    }

    pub fn vertex(&self, i: u32) -> [f32; 3] {
        let k = i as usize * 3;
        [
            self.positions[k],
            self.positions[k + 1],
            self.positions[k + 2],
        ]
    }

    /// Corners of triangle `t` in scene units.
    pub fn triangle(&self, t: usize) -> [[f32; 3]; 3] {
        [
            self.vertex(self.indices[3 * t]),
            self.vertex(self.indices[3 * t + 1]),
            self.vertex(self.indices[3 * t + 2]),
        ]
    }

    pub fn color_of(&self, id: FeatureId) -> Option<Rgba> {
        self.colors.iter().find(|c| c.0 == id).map(|c| c.1)
    }
}

/// Footprint prism: triangulated top at z = height and two triangles per
/// ring edge for the walls, facing outward. No bottom cap.
pub fn extrude_footprint(poly: &Polygon, height: f64) -> Result<MeshFragment, MeshError> {
    if !(height > 0.0 && height.is_finite()) {
        return Err(MeshError::NonPositiveHeight(height));
    }
    let mut frag = flat_polygon(poly, height)?;
    let vertices = polygon_vertices(poly);
    let normalized = poly.clone().normalized();
    let mut offset = 0usize;
    for ring in normalized.rings() {
        let n = ring.len().saturating_sub(1);
        for k in 0..n {
            let (a, b) = (vertices[offset + k], vertices[offset + (k + 1) % n]);
            let base = frag.positions.len() as u32;
            frag.positions.extend([
                [a.x, a.y, 0.0],
                [b.x, b.y, 0.0],
                [b.x, b.y, height],
                [a.x, a.y, height],
            ]);
            frag.triangles.push([base, base + 1, base + 2]);
            frag.triangles.push([base, base + 2, base + 3]);
        }
        offset += n;
    }
    Ok(frag)
}

/// Triangulated polygon at constant z.
pub fn flat_polygon(poly: &Polygon, z: f64) -> Result<MeshFragment, MeshError> {
    let tris = triangulate_polygon(poly)?;
    Ok(MeshFragment {
        positions: polygon_vertices(poly)
            .into_iter()
            .map(|p| [p.x, p.y, z])
            .collect(),
        triangles: tris.into_iter().map(|t| t.map(|i| i as u32)).collect(),
    })
}

/// Constant-width ribbon at z = 0. Interior vertices are offset along the
/// miter direction with the miter length capped at four half-widths.
pub fn stroke_polyline(line: &[Position], width: f64) -> Result<MeshFragment, MeshError> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(MeshError::NonPositiveWidth(width));
    }
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(line.len());
    for p in line {
        if pts.last() != Some(&(p.x, p.y)) {
            pts.push((p.x, p.y));
        }
    }
    if pts.len() < 2 {
        return Err(MeshError::DegenerateLine);
    }
    let hw = width / 2.0;
    let normals: Vec<(f64, f64)> = pts
        .windows(2)
        .map(|w| {
            let (dx, dy) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            let len = dx.hypot(dy);
            (-dy / len, dx / len)
        })
        .collect();
    let mut frag = MeshFragment::default();
    for (k, &(x, y)) in pts.iter().enumerate() {
        let (ox, oy) = if k == 0 || k == pts.len() - 1 {
            let n = normals[k.min(normals.len() - 1)];
            (n.0 * hw, n.1 * hw)
        } else {
            let (n0, n1) = (normals[k - 1], normals[k]);
            let (mx, my) = (n0.0 + n1.0, n0.1 + n1.1);
            let mlen = mx.hypot(my);
            if mlen < 1e-12 {
                (n1.0 * hw, n1.1 * hw)
            } else {
                let (mx, my) = (mx / mlen, my / mlen);
                let cos = mx * n1.0 + my * n1.1;
                let len = (hw / cos).min(4.0 * hw);
                (mx * len, my * len)
            }
        };
        frag.positions.push([x - ox, y - oy, 0.0]);
        frag.positions.push([x + ox, y + oy, 0.0]);
    }
    for k in 0..pts.len() as u32 - 1 {
        let (r0, l0, r1, l1) = (2 * k, 2 * k + 1, 2 * k + 2, 2 * k + 3);
        frag.triangles.push([r0, r1, l1]);
        frag.triangles.push([r0, l1, l0]);
    }
    Ok(frag)
}

/// Axis-aligned square marker centered on a point.
fn point_marker(p: &Position, size: f64) -> MeshFragment {
    let h = size / 2.0;
    MeshFragment {
        positions: vec![
            [p.x - h, p.y - h, 0.0],
            [p.x + h, p.y - h, 0.0],
            [p.x + h, p.y + h, 0.0],
            [p.x - h, p.y + h, 0.0],
        ],
        triangles: vec![[0, 1, 2], [0, 2, 3]],
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerStyle {
    /// Attribute holding the extrusion height; polygons only.
    pub extrude_by: Option<String>,
    /// Ribbon width for polylines; required when the layer has any.
    pub stroke_width: Option<f64>,
    pub base_color: Rgba,
    /// Side of the square marker drawn for points.
    pub point_size: f64,
}

impl Default for LayerStyle {
    fn default() -> Self {
        LayerStyle {
            extrude_by: None,
            stroke_width: None,
            base_color: [200, 200, 200, 255],
            point_size: 4.0,
        }
    }
}

fn feature_fragment(
    shape: &Shape,
    height: Option<f64>,
    style: &LayerStyle,
) -> Result<MeshFragment, MeshError> {
    let mut frag = MeshFragment::default();
    match shape {
        Shape::Polygon(_) | Shape::MultiPolygon(_) => {
            let polys: &[Polygon] = match shape {
                Shape::Polygon(p) => std::slice::from_ref(p),
                Shape::MultiPolygon(ps) => ps,
                _ => unreachable!(),
            };
            for p in polys {
                frag.append(match height {
                    Some(h) if h > 0.0 => extrude_footprint(p, h)?,
                    _ => flat_polygon(p, 0.0)?,
                });
            }
        }
        Shape::Polyline(line) => {
            let width = style
                .stroke_width
                .ok_or(MeshError::StyleMismatch(GeometryKind::Polyline))?;
            frag = stroke_polyline(line, width)?;
        }
        Shape::Point(p) => frag = point_marker(p, style.point_size),
        Shape::MultiPoint(ps) => ps
            .iter()
            .for_each(|p| frag.append(point_marker(p, style.point_size))),
    }
    Ok(frag)
}

/// [`build_layer_mesh_with`] in the default execution mode.
pub fn build_layer_mesh(
    collection: &FeatureCollection,
    style: &LayerStyle,
) -> Result<Mesh, MeshError> {
    build_layer_mesh_with(ExecMode::default(), collection, style)
}

/// One mesh for a whole collection, fragments concatenated in feature
/// order. Scene origin is the center of the collection's bounding box.
/// Polygons whose extrusion attribute is missing or not positive are drawn
/// flat.
pub fn build_layer_mesh_with(
    mode: ExecMode,
    collection: &FeatureCollection,
    style: &LayerStyle,
) -> Result<Mesh, MeshError> {
    if style.extrude_by.is_some() {
        if let Some(f) = collection
            .features()
            .iter()
            .find(|f| !f.geometry.is_areal())
        {
            return Err(MeshError::StyleMismatch(f.geometry.kind()));
        }
    }
    let origin = bbox(collection).map(|b| b.center()).unwrap_or((0.0, 0.0));
    let fragments = exec::map_slice(mode, collection.features(), |f| {
        let height = style
            .extrude_by
            .as_deref()
            .and_then(|path| get_number(&f.attributes, path));
        feature_fragment(&f.geometry.shape, height, style)
            .map_err(|e| match e {
                MeshError::StyleMismatch(_) => e,
                other => MeshError::Feature {
                    id: f.id,
                    source: Box::new(other),
                },
            })
            .map(|frag| place(frag, origin))
    });

    let mut mesh = Mesh {
        layer: collection.name().to_owned(),
        origin,
        ..Mesh::default()
    };
    for (f, placed) in collection.features().iter().zip(fragments) {
        let (positions, triangles) = placed?;
        let base = mesh.vertex_count() as u32;
        mesh.positions.extend(positions.iter().flatten());
        for t in triangles {
            mesh.indices.extend(t.map(|i| i + base));
            mesh.triangle_feature.push(f.id);
        }
        mesh.colors.push((f.id, style.base_color));
    }
    Ok(mesh)
}

/// Converts to f32 scene units and drops triangles that collapse there.
fn place(frag: MeshFragment, origin: (f64, f64)) -> (Vec<[f32; 3]>, Vec<[u32; 3]>) {
    let positions: Vec<[f32; 3]> = frag
        .positions
        .iter()
        .map(|p| {
            [
                (p[0] - origin.0) as f32,
                (p[1] - origin.1) as f32,
                p[2] as f32,
            ]
        })
        .collect();
    let widen = |p: [f32; 3]| p.map(f64::from);
    let triangles = frag
        .triangles
        .into_iter()
        .filter(|t| {
            area3(
                widen(positions[t[0] as usize]),
                widen(positions[t[1] as usize]),
                widen(positions[t[2] as usize]),
            ) > MIN_TRIANGLE_AREA
        })
        .collect();
    (positions, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attrs;
    use crate::model::{Crs, Geometry, RawFeature};

    fn unit_square(x: f64) -> Polygon {
        Polygon::from_xy(&[(x, 0.0), (x + 1.0, 0.0), (x + 1.0, 1.0), (x, 1.0)])
    }

    #[test]
    fn extrusion_counts() {
        assert_eq!(
            extrude_footprint(&unit_square(0.0), 10.0)
                .unwrap()
                .triangles
                .len(),
            10
        );
        let holed = Polygon::from_xy(&[(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)])
            .with_hole(&[(1.0, 1.0), (3.0, 1.0), (3.0, 3.0), (1.0, 3.0)]);
        assert_eq!(
            extrude_footprint(&holed, 3.0).unwrap().triangles.len(),
            8 + 2 * 8
        );
        assert_eq!(
            extrude_footprint(&unit_square(0.0), 0.0),
            Err(MeshError::NonPositiveHeight(0.0))
        );
    }

    #[test]
    fn walls_face_outward() {
        let frag = extrude_footprint(&unit_square(0.0), 1.0).unwrap();
        for t in &frag.triangles[2..] {
            let [a, b, c] = t.map(|i| frag.positions[i as usize]);
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2]];
            let mid = [
                (a[0] + b[0] + c[0]) / 3.0 - 0.5,
                (a[1] + b[1] + c[1]) / 3.0 - 0.5,
            ];
            assert!(n[0] * mid[0] + n[1] * mid[1] > 0.0);
        }
    }

    #[test]
    fn stroke_rectangle_and_corner() {
        let line = [Position::new(0.0, 0.0), Position::new(10.0, 0.0)];
        let frag = stroke_polyline(&line, 2.0).unwrap();
        assert!((frag.area() - 20.0).abs() < 1e-9);
        let corner = [
            Position::new(0.0, 0.0),
            Position::new(10.0, 0.0),
            Position::new(10.0, 10.0),
        ];
        let frag = stroke_polyline(&corner, 2.0).unwrap();
        assert_eq!(frag.triangles.len(), 4);
        assert!(frag.positions.iter().flatten().all(|v| v.is_finite()));
        let outline: Vec<(f64, f64)> = [0usize, 2, 4, 5, 3, 1]
            .iter()
            .map(|&i| (frag.positions[i][0], frag.positions[i][1]))
            .collect();
        assert!((frag.area() - Polygon::from_xy(&outline).area()).abs() < 1e-9);
        let dot = [Position::new(1.0, 1.0), Position::new(1.0, 1.0)];
        assert_eq!(stroke_polyline(&dot, 2.0), Err(MeshError::DegenerateLine));
    }

    #[test]
    fn layer_mesh_feature_channel() {
        let raw = vec![
            RawFeature::new(
                Geometry::polygon(Crs::Mercator, unit_square(0.0)),
                attrs! {},
            )
            .with_id(4u64),
            RawFeature::new(
                Geometry::polygon(Crs::Mercator, unit_square(3.0)),
                attrs! {},
            )
            .with_id(9u64),
        ];
        let c = FeatureCollection::new("blocks", Crs::Mercator, raw).unwrap();
        let mesh = build_layer_mesh(&c, &LayerStyle::default()).unwrap();
        assert_eq!(
            mesh.triangle_feature,
            vec![FeatureId(4), FeatureId(4), FeatureId(9), FeatureId(9)]
        );
        assert_eq!(mesh.origin, (2.0, 0.5));
        assert!(mesh
            .indices
            .iter()
            .all(|&i| (i as usize) < mesh.vertex_count()));

        let line = FeatureCollection::new(
            "roads",
            Crs::Mercator,
            vec![RawFeature::new(
                Geometry::polyline(Crs::Mercator, &[(0.0, 0.0), (5.0, 0.0)]),
                attrs! {},
            )],
        )
        .unwrap();
        let style = LayerStyle {
            extrude_by: Some("height".into()),
            stroke_width: Some(2.0),
            ..LayerStyle::default()
        };
        assert_eq!(
            build_layer_mesh(&line, &style),
            Err(MeshError::StyleMismatch(GeometryKind::Polyline))
        );
    }

    #[test]
    fn extruded_layer_counts() {
        let raw = vec![
            RawFeature::new(
                Geometry::polygon(Crs::Mercator, unit_square(0.0)),
                attrs! {"height" => 12.0},
            ),
            RawFeature::new(
                Geometry::polygon(Crs::Mercator, unit_square(5.0)),
                attrs! {},
            ),
        ];
        let c = FeatureCollection::new("b", Crs::Mercator, raw).unwrap();
        let style = LayerStyle {
            extrude_by: Some("height".into()),
            ..LayerStyle::default()
        };
        let mesh = build_layer_mesh(&c, &style).unwrap();
        let per = |id| {
            mesh.triangle_feature
                .iter()
                .filter(|&&f| f == FeatureId(id))
                .count()
        };
        assert_eq!((per(0), per(1)), (10, 2));
    }
}
