use super::{Mesh, Rgba};
use crate::model::{get_number, FeatureCollection};

/// Color for features whose value is missing, null or not a number.
pub const NEUTRAL_COLOR: Rgba = [160, 160, 160, 255];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScaleKind {
    /// Domain (min, max).
    Sequential,
    /// Domain (min, mid, max); the midpoint maps to the middle of the stops.
    Diverging,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColorScale {
    kind: ScaleKind,
    domain: Vec<f64>,
    stops: Vec<Rgba>,
}

impl ColorScale {
    pub fn sequential(min: f64, max: f64, stops: Vec<Rgba>) -> Result<Self, String> {
        ColorScale::new(ScaleKind::Sequential, vec![min, max], stops)
    }

    pub fn diverging(min: f64, mid: f64, max: f64, stops: Vec<Rgba>) -> Result<Self, String> {
        ColorScale::new(ScaleKind::Diverging, vec![min, mid, max], stops)
    }

    pub fn new(kind: ScaleKind, domain: Vec<f64>, stops: Vec<Rgba>) -> Result<Self, String> {
        let want = match kind {
            ScaleKind::Sequential => 2,
            ScaleKind::Diverging => 3,
        };
        if domain.len() != want {
            return Err(format!("{kind:?} scale needs {want} domain values"));
        }
        if !domain.iter().all(|v| v.is_finite()) || domain.windows(2).any(|w| w[0] >= w[1]) {
            return Err("domain must be finite and strictly increasing".into());
        }
        if stops.len() < 2 {
            return Err("a color scale needs at least two stops".into());
        }
        Ok(ColorScale {
            kind,
            domain,
            stops,
        })
    }

    pub fn kind(&self) -> ScaleKind {
        self.kind
    }

    pub fn domain(&self) -> &[f64] {
        &self.domain
    }

    pub fn stops(&self) -> &[Rgba] {
        &self.stops
    }

    /// Position in [0, 1] along the stops, clamped.
    fn position(&self, v: f64) -> f64 {
        let d = &self.domain;
        let t = match self.kind {
            ScaleKind::Sequential => (v - d[0]) / (d[1] - d[0]),
            ScaleKind::Diverging if v < d[1] => 0.5 * (v - d[0]) / (d[1] - d[0]),
            ScaleKind::Diverging => 0.5 + 0.5 * (v - d[1]) / (d[2] - d[1]),
        };
        t.clamp(0.0, 1.0)
    }

    /// Piecewise-linear color at `v`, channels rounded half away from zero.
    pub fn color(&self, v: f64) -> Rgba {
        if v.is_nan() {
            return NEUTRAL_COLOR;
        }
        let s = self.position(v) * (self.stops.len() - 1) as f64;
        let i = (s.floor() as usize).min(self.stops.len() - 2);
        let f = s - i as f64;
        let (a, b) = (self.stops[i], self.stops[i + 1]);
        std::array::from_fn(|c| (a[c] as f64 + (b[c] as f64 - a[c] as f64) * f).round() as u8)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Thematic {
    pub mesh: Mesh,
    /// Features colored neutral because the value was missing.
    pub missing_values: usize,
}

/// Recolors every feature of the mesh from the value at `value_path`.
/// Geometry is untouched; features without a numeric value get
/// [`NEUTRAL_COLOR`].
pub fn apply_thematic(
    mesh: &Mesh,
    collection: &FeatureCollection,
    value_path: &str,
    scale: &ColorScale,
) -> Thematic {
    let mut present: Vec<_> = mesh.triangle_feature.clone();
    present.extend(mesh.colors.iter().map(|c| c.0));
    present.sort_unstable();
    present.dedup();
    let mut missing_values = 0;
    let colors = collection
        .features()
        .iter()
        .filter(|f| present.binary_search(&f.id).is_ok())
        .map(|f| {
            let color = match get_number(&f.attributes, value_path).filter(|v| !v.is_nan()) {
                Some(v) => scale.color(v),
                None => {
                    missing_values += 1;
                    NEUTRAL_COLOR
                }
            };
            (f.id, color)
        })
        .collect();
    Thematic {
        mesh: Mesh {
            colors,
            ..mesh.clone()
        },
        missing_values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attrs;
    use crate::mesh::{build_layer_mesh, LayerStyle};
    use crate::model::{Crs, FeatureId, Geometry, Polygon, RawFeature};

    const BLACK: Rgba = [0, 0, 0, 255];
    const WHITE: Rgba = [255, 255, 255, 255];

    #[test]
    fn sequential_midpoint_and_clamp() {
        let s = ColorScale::sequential(0.0, 10.0, vec![BLACK, WHITE]).unwrap();
        assert_eq!(s.color(5.0), [128, 128, 128, 255]);
        assert_eq!(s.color(25.0), WHITE);
        assert_eq!(s.color(-3.0), BLACK);
        assert!(ColorScale::sequential(1.0, 1.0, vec![BLACK, WHITE]).is_err());
        assert!(ColorScale::sequential(0.0, 1.0, vec![BLACK]).is_err());
    }

    #[test]
    fn diverging_uses_midpoint() {
        let blue = [0, 0, 255, 255];
        let red = [255, 0, 0, 255];
        let s = ColorScale::diverging(-1.0, 0.0, 4.0, vec![blue, WHITE, red]).unwrap();
        assert_eq!(s.color(0.0), WHITE);
        assert_eq!(s.color(-1.0), blue);
        assert_eq!(s.color(2.0), [255, 128, 128, 255]);
    }

    #[test]
    fn nested_path_and_missing() {
        let sq = |x: f64| {
            Geometry::polygon(
                Crs::Mercator,
                Polygon::from_xy(&[(x, 0.0), (x + 1.0, 0.0), (x + 1.0, 1.0)]),
            )
        };
        let c = FeatureCollection::new(
            "n",
            Crs::Mercator,
            vec![
                RawFeature::new(
                    sq(0.0),
                    attrs! {"sjoin" => attrs!{"count" => attrs!{"noise" => 10.0}}},
                ),
                RawFeature::new(sq(2.0), attrs! {}),
            ],
        )
        .unwrap();
        let mesh = build_layer_mesh(&c, &LayerStyle::default()).unwrap();
        let s = ColorScale::sequential(0.0, 10.0, vec![BLACK, WHITE]).unwrap();
        let out = apply_thematic(&mesh, &c, "sjoin.count.noise", &s);
        assert_eq!(out.mesh.color_of(FeatureId(0)), Some(WHITE));
        assert_eq!(out.mesh.color_of(FeatureId(1)), Some(NEUTRAL_COLOR));
        assert_eq!(out.missing_values, 1);
        assert_eq!(out.mesh.positions, mesh.positions);
    }
}
