use thiserror::Error;

use crate::exec::{self, ExecMode};
use crate::mesh::{extrude_footprint, MeshError};
use crate::model::{
    get_number, AttributeValue, Attributes, Crs, Feature, FeatureCollection, FeatureId, ModelError,
    Polygon, Position, Shape,
};

/// Minimum ray parameter counted as a hit.
const T_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShadowError {
    #[error("building has no numeric height at '{0}'")]
    MissingHeight(String),
    #[error("building height must be positive, got {0}")]
    InvalidHeight(f64),
    #[error("no sun directions given")]
    EmptySunList,
    #[error("sun direction ({0}, {1}, {2}) is not a unit vector above the horizon")]
    InvalidSunDirection(f64, f64, f64),
    #[error("sample spacing must be positive, got {0}")]
    InvalidSpacing(f64),
    #[error("feature {0} is not a polyline")]
    NotPolyline(FeatureId),
    #[error("building is not a polygon")]
    NotPolygon,
    #[error("building is {building}, segments are {segments}")]
    CrsMismatch { segments: Crs, building: Crs },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Unit vector from the ground toward the sun.
#[derive(Clone, Debug, PartialEq)]
pub struct SunDirection {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub label: String,
}

impl SunDirection {
    /// Accepts a vector whose norm is 1 within 1e-9 and with dz > 0.
    pub fn new(dx: f64, dy: f64, dz: f64, label: impl Into<String>) -> Result<Self, ShadowError> {
        let norm = (dx * dx + dy * dy + dz * dz).sqrt();
        if !((norm - 1.0).abs() <= 1e-9 && dz > 0.0) {
            return Err(ShadowError::InvalidSunDirection(dx, dy, dz));
        }
        Ok(SunDirection {
            dx,
            dy,
            dz,
            label: label.into(),
        })
    }

    /// Scales any vector with dz > 0 to unit length.
    pub fn normalized(
        dx: f64,
        dy: f64,
        dz: f64,
        label: impl Into<String>,
    ) -> Result<Self, ShadowError> {
        let norm = (dx * dx + dy * dy + dz * dz).sqrt();
        if !(norm.is_finite() && dz > 0.0) {
            return Err(ShadowError::InvalidSunDirection(dx, dy, dz));
        }
        Ok(SunDirection {
            dx: dx / norm,
            dy: dy / norm,
            dz: dz / norm,
            label: label.into(),
        })
    }

    fn vector(&self) -> [f64; 3] {
        [self.dx, self.dy, self.dz]
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Möller–Trumbore: ray parameter of the hit, if any, with t > 1e-9.
/// Both triangle sides count.
pub fn ray_triangle(origin: [f64; 3], dir: [f64; 3], tri: [[f64; 3]; 3]) -> Option<f64> {
    let e1 = sub(tri[1], tri[0]);
    let e2 = sub(tri[2], tri[0]);
    let p = cross(dir, e2);
    let det = dot(e1, p);
    if det.abs() < 1e-15 {
        return None;
    }
    let inv = 1.0 / det;
    let s = sub(origin, tri[0]);
    let u = dot(s, p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = cross(s, e1);
    let v = dot(dir, q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = dot(e2, q) * inv;
    (t > T_EPSILON).then_some(t)
}

/// Points every `spacing` along the line by arc length, both ends included.
fn resample(line: &[Position], spacing: f64) -> Vec<(f64, f64)> {
    let mut out = vec![(line[0].x, line[0].y)];
    let mut carried = 0.0;
    for w in line.windows(2) {
        let len = w[0].distance(&w[1]);
        if len == 0.0 {
            continue;
        }
        let mut s = spacing - carried;
        while s < len {
            let f = s / len;
            out.push((
                w[0].x + (w[1].x - w[0].x) * f,
                w[0].y + (w[1].y - w[0].y) * f,
            ));
            s += spacing;
        }
        carried = len - (s - spacing);
    }
    let last = line[line.len() - 1];
    if out.last() != Some(&(last.x, last.y)) {
        out.push((last.x, last.y));
    }
    out
}

/// [`run_shadow_kernel_with`] in the default execution mode.
pub fn run_shadow_kernel(
    segments: &FeatureCollection,
    building: &Feature,
    height_path: &str,
    suns: &[SunDirection],
    spacing: f64,
) -> Result<FeatureCollection, ShadowError> {
    run_shadow_kernel_with(
        ExecMode::default(),
        segments,
        building,
        height_path,
        suns,
        spacing,
    )
}

/// Casts one ray per sample and sun against the extruded building and
/// writes `shadow.hours` and `shadow.fraction` on every segment. A segment
/// is shadowed under a sun when at least half its samples are.
pub fn run_shadow_kernel_with(
    mode: ExecMode,
    segments: &FeatureCollection,
    building: &Feature,
    height_path: &str,
    suns: &[SunDirection],
    spacing: f64,
) -> Result<FeatureCollection, ShadowError> {
    if suns.is_empty() {
        return Err(ShadowError::EmptySunList);
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(ShadowError::InvalidSpacing(spacing));
    }
    if let Some(s) = suns
        .iter()
        .find(|s| SunDirection::new(s.dx, s.dy, s.dz, "").is_err())
    {
        return Err(ShadowError::InvalidSunDirection(s.dx, s.dy, s.dz));
    }
    if building.geometry.crs != segments.crs() {
        return Err(ShadowError::CrsMismatch {
            segments: segments.crs(),
            building: building.geometry.crs,
        });
    }
    if !matches!(
        building.geometry.shape,
        Shape::Polygon(_) | Shape::MultiPolygon(_)
    ) {
        return Err(ShadowError::NotPolygon);
    }
    let height = get_number(&building.attributes, height_path)
        .ok_or_else(|| ShadowError::MissingHeight(height_path.into()))?;
    if !(height > 0.0 && height.is_finite()) {
        return Err(ShadowError::InvalidHeight(height));
    }
    if let Some(f) = segments
        .features()
        .iter()
        .find(|f| !matches!(f.geometry.shape, Shape::Polyline(_)))
    {
        return Err(ShadowError::NotPolyline(f.id));
    }

    let (ox, oy) = building
        .geometry
        .bbox()
        .expect("valid polygon has bounds")
        .center();
    let local = |p: &Position| Position::new(p.x - ox, p.y - oy);
    let mut triangles = Vec::new();
    for poly in building.geometry.polygons() {
        let shifted = Polygon::new(
            poly.exterior.iter().map(local).collect(),
            poly.holes
                .iter()
                .map(|h| h.iter().map(local).collect())
                .collect(),
        );
        let prism = extrude_footprint(&shifted, height)?;
        triangles.extend(
            prism
                .triangles
                .iter()
                .map(|t| t.map(|i| prism.positions[i as usize])),
        );
    }
    let dirs: Vec<[f64; 3]> = suns.iter().map(SunDirection::vector).collect();

    let rows = exec::map_slice(mode, segments.features(), |f| {
        let Shape::Polyline(line) = &f.geometry.shape else {
            unreachable!("checked above")
        };
        let samples: Vec<[f64; 3]> = resample(line, spacing)
            .into_iter()
            .map(|(x, y)| [x - ox, y - oy, 0.0])
            .collect();
        let hours = dirs
            .iter()
            .filter(|&&dir| {
                let hit = samples
                    .iter()
                    .filter(|&&o| triangles.iter().any(|&t| ray_triangle(o, dir, t).is_some()))
                    .count();
                2 * hit >= samples.len()
            })
            .count();
        let mut update = Attributes::new();
        update.insert("shadow.hours".into(), AttributeValue::Number(hours as f64));
        update.insert(
            "shadow.fraction".into(),
            AttributeValue::Number(hours as f64 / dirs.len() as f64),
        );
        Some(update)
    });
    Ok(segments.merge_rows(rows)?)
}
