//! Scaling benchmarks over synthetic fixtures: wall time per input size and
//! the fitted log-log slope of time against size.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use crate::attrs;
use crate::compute::{run_analytical_with, ComputeError, ComputeProgram};
use crate::exec::ExecMode;
use crate::ingest::{extract_layers, parse_overpass, IngestError, Layer, LayerConfig, LayerSet};
use crate::model::{BoundingBox, Crs, FeatureCollection, Geometry, Polygon, RawFeature};
use crate::spatial::{
    build_index, spatial_join_with, AggregateFn, AggregateSpec, JoinPredicate, SpatialError,
};

/// Synthetic study area in Mercator meters (about 10 km square).
pub const STUDY_AREA: BoundingBox = BoundingBox {
    min_x: -8_240_000.0,
    min_y: 4_950_000.0,
    max_x: -8_230_000.0,
    max_y: 4_960_000.0,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("need at least two distinct sizes to fit a slope")]
    TooFewSizes,
    #[error("sizes and repetitions must be positive")]
    ZeroSize,
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Compute(#[from] ComputeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// Overpass parse, layer extraction and index build.
    Load,
    /// Fixed 28-polygon grid joined against n uniform points.
    Join,
    /// `x * y` over n point features.
    Compute,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Load => "load",
            Scenario::Join => "join",
            Scenario::Compute => "compute",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "load" => Ok(Scenario::Load),
            "join" => Ok(Scenario::Join),
            "compute" => Ok(Scenario::Compute),
            other => Err(format!(
                "unknown scenario '{other}' (expected load, join or compute)"
            )),
        }
    }
}

/// `steps` sizes at equal increments up to `max`.
pub fn increments(max: usize, steps: usize) -> Vec<usize> {
    (1..=steps).map(|k| max * k / steps).collect()
}

/// `rows` x `cols` grid of square cells covering `area`, row-major ids.
pub fn polygon_grid(rows: usize, cols: usize, area: &BoundingBox) -> FeatureCollection {
    let (w, h) = (area.width() / cols as f64, area.height() / rows as f64);
    let features = (0..rows * cols)
        .map(|k| {
            let (r, c) = (k / cols, k % cols);
            let (x, y) = (area.min_x + c as f64 * w, area.min_y + r as f64 * h);
            let cell = Polygon::from_xy(&[(x, y), (x + w, y), (x + w, y + h), (x, y + h)]);
            RawFeature::new(
                Geometry::polygon(Crs::Mercator, cell),
                attrs! {"cell" => k as f64},
            )
            .with_id(k as u64)
        })
        .collect();
    FeatureCollection::new("grid", Crs::Mercator, features).expect("grid cells are valid")
}

/// `n` uniform random points over `area` with numeric `value`, `area` and
/// `height` columns.
pub fn random_points(n: usize, area: &BoundingBox, seed: u64) -> FeatureCollection {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = (0..n)
        .map(|i| {
            let x = rng.random_range(area.min_x..area.max_x);
            let y = rng.random_range(area.min_y..area.max_y);
            let a = attrs! {
                "value" => rng.random_range(0.0..100.0),
                "area" => rng.random_range(50.0..500.0),
                "height" => rng.random_range(3.0..120.0),
            };
            RawFeature::new(Geometry::point(Crs::Mercator, x, y), a).with_id(i as u64)
        })
        .collect();
    FeatureCollection::new("points", Crs::Mercator, features).expect("points are valid")
}

/// Overpass JSON with `n` square buildings scattered around lower Manhattan.
pub fn synthetic_overpass(n: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut elements = Vec::with_capacity(5 * n);
    for b in 0..n as u64 {
        let lon = rng.random_range(-74.02..-73.93);
        let lat = rng.random_range(40.70..40.80);
        let d = 0.0001;
        let corners = [
            (lon, lat),
            (lon + d, lat),
            (lon + d, lat + d),
            (lon, lat + d),
        ];
        let node_ids: Vec<u64> = (0..4).map(|k| 4 * b + k + 1).collect();
        for (id, (x, y)) in node_ids.iter().zip(corners) {
            elements.push(json!({"type": "node", "id": id, "lon": x, "lat": y}));
        }
        let height = rng.random_range(3..150);
        elements.push(json!({
            "type": "way",
            "id": b + 1,
            "nodes": [node_ids[0], node_ids[1], node_ids[2], node_ids[3], node_ids[0]],
            "tags": {"building": "yes", "height": height.to_string()},
        }));
    }
    serde_json::to_vec(&json!({"version": 0.6, "elements": elements})).expect("json serializes")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub rep: usize,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub scenario: Scenario,
    pub repetitions: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    /// (n, median wall ms) per size, in the order sizes were first run.
    pub fn medians(&self) -> Vec<(usize, f64)> {
        let mut sizes: Vec<usize> = Vec::new();
        for r in &self.rows {
            if !sizes.contains(&r.n) {
                sizes.push(r.n);
            }
        }
        sizes
            .into_iter()
            .map(|n| {
                let mut t: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.n == n)
                    .map(|r| r.wall_ms)
                    .collect();
                t.sort_by(f64::total_cmp);
                let m = t.len() / 2;
                (
                    n,
                    if t.len() % 2 == 1 {
                        t[m]
                    } else {
                        0.5 * (t[m - 1] + t[m])
                    },
                )
            })
            .collect()
    }

    /// Least-squares slope of ln(median wall time) against ln(n).
    pub fn slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .medians()
            .into_iter()
            .map(|(n, t)| ((n as f64).ln(), t.max(1e-9).ln()))
            .collect();
        let k = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
        let (mx, my) = (sx / k, sy / k);
        let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), p| {
            (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx).powi(2))
        });
        num / den
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.repetitions < 3 {
            w.push(format!(
                "only {} repetition(s) per size; variance is unreported",
                self.repetitions
            ));
        }
        let sizes = self.medians().len();
        if sizes < 5 {
            w.push(format!("only {sizes} sizes; the slope fit is weak"));
        }
        w
    }

    /// `scenario,n,rep,wall_ms`, one line per run.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,n,rep,wall_ms\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{:.6}", self.scenario, r.n, r.rep, r.wall_ms);
        }
        out
    }

    /// Aligned table of medians with per-item cost and the fitted slope.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:>10}  {:>12}  {:>12}\n", "n", "median ms", "us/item");
        for (n, t) in self.medians() {
            let _ = writeln!(out, "{n:>10}  {t:>12.3}  {:>12.4}", 1000.0 * t / n as f64);
        }
        let _ = writeln!(
            out,
            "scenario {}: log-log slope {:.3} over {} repetition(s)",
            self.scenario,
            self.slope(),
            self.repetitions
        );
        out
    }
}

enum Fixture {
    Load(Vec<u8>),
    Join(FeatureCollection),
    Compute(FeatureCollection),
}

fn fixture(scenario: Scenario, n: usize, seed: u64) -> Fixture {
    match scenario {
        Scenario::Load => Fixture::Load(synthetic_overpass(n, seed)),
        Scenario::Join => Fixture::Join(random_points(n, &STUDY_AREA, seed)),
        Scenario::Compute => Fixture::Compute(random_points(n, &STUDY_AREA, seed)),
    }
}

struct Workload {
    grid: FeatureCollection,
    aggregates: Vec<AggregateSpec>,
    program: ComputeProgram,
    layers: LayerSet,
    config: LayerConfig,
}

impl Workload {
    fn new() -> Self {
        Workload {
            grid: polygon_grid(4, 7, &STUDY_AREA),
            aggregates: vec![
                AggregateSpec::count("n"),
                AggregateSpec::new(AggregateFn::Avg, "value", "value"),
            ],
            program: ComputeProgram::new("x * y", [("x", "area"), ("y", "height")], ["volume"])
                .expect("program compiles"),
            layers: LayerSet::new([Layer::Buildings]).expect("non-empty"),
            config: LayerConfig::default(),
        }
    }

    fn run(&self, mode: ExecMode, fixture: &Fixture) -> Result<usize, BenchError> {
        Ok(match fixture {
            Fixture::Load(bytes) => {
                let doc = parse_overpass(bytes)?;
                let area = BoundingBox::new(-180.0, -85.0, 180.0, 85.0);
                let extraction = extract_layers(&doc, &self.layers, &area, &self.config)?;
                let buildings = &extraction.layers[&Layer::Buildings];
                build_index(buildings).len()
            }
            Fixture::Join(points) => spatial_join_with(
                mode,
                &self.grid,
                points,
                JoinPredicate::join(),
                &self.aggregates,
            )?
            .len(),
            Fixture::Compute(points) => run_analytical_with(mode, points, &self.program)?
                .collection
                .len(),
        })
    }
}

/// Times `scenario` at each size. Each repetition sweeps all sizes in turn,
/// so slow spells on a shared machine spread across sizes. Fixtures are
/// regenerated from the seed outside the timed region, and an untimed
/// warm-up run precedes every measurement.
pub fn run_bench(
    scenario: Scenario,
    sizes: &[usize],
    reps: usize,
    mode: ExecMode,
    seed: u64,
) -> Result<BenchReport, BenchError> {
    if reps == 0 || sizes.contains(&0) {
        return Err(BenchError::ZeroSize);
    }
    let mut distinct = sizes.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(BenchError::TooFewSizes);
    }
    let work = Workload::new();
    let mut rows = Vec::with_capacity(sizes.len() * reps);
    for rep in 0..reps {
        for &n in sizes {
            let fx = fixture(scenario, n, seed ^ n as u64);
            work.run(mode, &fx)?;
            let start = Instant::now();
            std::hint::black_box(work.run(mode, &fx)?);
            rows.push(BenchRow {
                n,
                rep,
                wall_ms: start.elapsed().as_secs_f64() * 1000.0,
            });
        }
    }
    Ok(BenchReport {
        scenario,
        repetitions: reps,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let rows = [1000usize, 2000, 4000, 8000]
            .iter()
            .flat_map(|&n| {
                (0..3).map(move |rep| BenchRow {
                    n,
                    rep,
                    wall_ms: 0.002 * n as f64,
                })
            })
            .collect();
        let r = BenchReport {
            scenario: Scenario::Join,
            repetitions: 3,
            rows,
        };
        assert!((r.slope() - 1.0).abs() < 1e-12);
        assert!(r
            .to_csv()
            .starts_with("scenario,n,rep,wall_ms\njoin,1000,0,2.000000\n"));
        assert_eq!(r.warnings().len(), 1);
    }

    #[test]
    fn fixtures_and_single_rep_warning() {
        assert_eq!(polygon_grid(4, 7, &STUDY_AREA).len(), 28);
        assert_eq!(
            increments(500, 10),
            vec![50, 100, 150, 200, 250, 300, 350, 400, 450, 500]
        );
        let r = run_bench(Scenario::Load, &[5, 10], 1, ExecMode::Sequential, 1).unwrap();
        assert!(r
            .warnings()
            .iter()
            .any(|w| w.contains("variance is unreported")));
        assert_eq!(r.rows.len(), 2);
        assert!(matches!(
            run_bench(Scenario::Join, &[10], 3, ExecMode::Sequential, 1),
            Err(BenchError::TooFewSizes)
        ));
    }
}
