//! Generators and brute-force reference implementations shared by the
//! integration tests and the acceptance suite. Nothing here calls into the
//! library's geometry code.

#![allow(dead_code)]

use std::f64::consts::TAU;

use featurekit::model::{get_number, AttributeValue, Attributes};
use featurekit::spatial::{AggregateFn, AggregateSpec};
use featurekit::{Crs, FeatureCollection, Geometry, Polygon, Position, RawFeature, Shape};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Distinct sorted angles with a minimum angular gap.
fn angles(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let gap = TAU / n as f64;
    (0..n)
        .map(|k| (k as f64 + rng.random_range(0.1..0.9)) * gap)
        .collect()
}

/// Convex polygon: points on an ellipse at sorted random angles.
pub fn convex_ring(rng: &mut ChaCha8Rng, cx: f64, cy: f64, r: f64, n: usize) -> Vec<(f64, f64)> {
    let squash = rng.random_range(0.5..1.0);
    let tilt = rng.random_range(0.0..TAU);
    angles(rng, n)
        .into_iter()
        .map(|a| {
            let (x, y) = (r * a.cos(), r * squash * a.sin());
            (
                cx + x * tilt.cos() - y * tilt.sin(),
                cy + x * tilt.sin() + y * tilt.cos(),
            )
        })
        .collect()
}

/// Star-shaped simple polygon around (cx, cy) with radii in [r_min, r_max].
pub fn star_ring(
    rng: &mut ChaCha8Rng,
    cx: f64,
    cy: f64,
    r_min: f64,
    r_max: f64,
    n: usize,
) -> Vec<(f64, f64)> {
    angles(rng, n)
        .into_iter()
        .map(|a| {
            let r = rng.random_range(r_min..r_max);
            (cx + r * a.cos(), cy + r * a.sin())
        })
        .collect()
}

fn segment_distance(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    (a.0 + t * dx - p.0).hypot(a.1 + t * dy - p.1)
}

/// Random simple polygon: convex or star-shaped, optionally with up to
/// three disjoint holes inside the star's edge clearance.
pub fn random_polygon(rng: &mut ChaCha8Rng, cx: f64, cy: f64, size: f64, holes: bool) -> Polygon {
    let n = rng.random_range(3..40);
    if !holes && rng.random_bool(0.3) {
        return Polygon::from_xy(&convex_ring(rng, cx, cy, size, n));
    }
    let r_min = size * rng.random_range(0.4..0.7);
    let star = star_ring(rng, cx, cy, r_min, size, n.max(5));
    let clear = (0..star.len())
        .map(|i| segment_distance(star[i], star[(i + 1) % star.len()], (cx, cy)))
        .fold(f64::INFINITY, f64::min);
    let mut poly = Polygon::from_xy(&star);
    if holes {
        let k = rng.random_range(1..=3);
        let spots = [(0.0, 0.0), (0.5, 0.0), (-0.5, 0.0)];
        for &(fx, fy) in spots.iter().take(k) {
            let hr = clear * rng.random_range(0.08..0.2);
            let m = rng.random_range(3..12);
            let ring = convex_ring(rng, cx + fx * clear, cy + fy * clear, hr, m);
            poly = poly.with_hole(&ring);
        }
    }
    poly
}

/// Absolute shoelace area of an (x, y) ring, closed or not.
pub fn shoelace(ring: &[Position]) -> f64 {
    let n = ring.len();
    let mut s = 0.0;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        s += a.x * b.y - b.x * a.y;
    }
    (s / 2.0).abs()
}

pub fn polygon_area_oracle(p: &Polygon) -> f64 {
    shoelace(&p.exterior) - p.holes.iter().map(|h| shoelace(h)).sum::<f64>()
}

/// Winding-number containment; points on an edge count as inside.
pub fn ring_contains(ring: &[Position], x: f64, y: f64) -> Option<bool> {
    let n = ring.len();
    let mut winding = 0i32;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        let cross = (b.x - a.x) * (y - a.y) - (x - a.x) * (b.y - a.y);
        let within =
            x >= a.x.min(b.x) && x <= a.x.max(b.x) && y >= a.y.min(b.y) && y <= a.y.max(b.y);
        if cross == 0.0 && within {
            return None;
        }
        if a.y <= y {
            if b.y > y && cross > 0.0 {
                winding += 1;
            }
        } else if b.y <= y && cross < 0.0 {
            winding -= 1;
        }
    }
    Some(winding != 0)
}

/// Boundary inclusive; holes exclude only their strict interior.
pub fn polygon_contains(p: &Polygon, x: f64, y: f64) -> bool {
    match ring_contains(&p.exterior, x, y) {
        None => true,
        Some(false) => false,
        Some(true) => !p.holes.iter().any(|h| ring_contains(h, x, y) == Some(true)),
    }
}

pub fn geometry_polygons(g: &Geometry) -> Vec<&Polygon> {
    match &g.shape {
        Shape::Polygon(p) => vec![p],
        Shape::MultiPolygon(ps) => ps.iter().collect(),
        _ => vec![],
    }
}

/// Reference join of point features into polygon roots: every pair tested,
/// values reduced in ascending join id order.
pub fn brute_force_join(
    root: &FeatureCollection,
    join: &FeatureCollection,
    aggs: &[AggregateSpec],
) -> Vec<Attributes> {
    let mut joined: Vec<_> = join.features().iter().collect();
    joined.sort_by_key(|f| f.id);
    root.features()
        .iter()
        .map(|r| {
            let polys = geometry_polygons(&r.geometry);
            let hits: Vec<_> = joined
                .iter()
                .filter(|f| match &f.geometry.shape {
                    Shape::Point(p) => polys.iter().any(|poly| polygon_contains(poly, p.x, p.y)),
                    _ => panic!("oracle handles point joins only"),
                })
                .collect();
            let mut out = Attributes::new();
            for spec in aggs {
                let values: Vec<f64> = hits
                    .iter()
                    .filter_map(|f| get_number(&f.attributes, &spec.column))
                    .filter(|v| !v.is_nan())
                    .collect();
                let value = match spec.function {
                    AggregateFn::Count => AttributeValue::Number(hits.len() as f64),
                    _ if values.is_empty() => AttributeValue::Null,
                    AggregateFn::Sum => {
                        AttributeValue::Number(values.iter().fold(0.0, |a, v| a + v))
                    }
                    AggregateFn::Avg => AttributeValue::Number(
                        values.iter().fold(0.0, |a, v| a + v) / values.len() as f64,
                    ),
                    AggregateFn::Min => {
                        AttributeValue::Number(values.iter().copied().fold(f64::INFINITY, f64::min))
                    }
                    AggregateFn::Max => AttributeValue::Number(
                        values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    ),
                };
                out.insert(spec.output_path(), value);
            }
            out
        })
        .collect()
}

/// Random join fixture: `roots` polygons scattered over a square of side
/// `extent`, and `points` points with a `v` column that is sometimes
/// missing or NaN, plus a few points on root vertices.
pub fn join_fixture(
    seed: u64,
    roots: usize,
    points: usize,
    extent: f64,
) -> (FeatureCollection, FeatureCollection) {
    let mut rng = rng(seed);
    let size = extent / (roots as f64).sqrt() * 0.8;
    let root_raw: Vec<RawFeature> = (0..roots)
        .map(|i| {
            let (cx, cy) = (rng.random_range(0.0..extent), rng.random_range(0.0..extent));
            let holes = rng.random_bool(0.3);
            let r = size * rng.random_range(0.3..1.0);
            let poly = random_polygon(&mut rng, cx, cy, r, holes);
            RawFeature::new(Geometry::polygon(Crs::Mercator, poly), Attributes::new())
                .with_id(1000 + i as u64)
        })
        .collect();
    let root = FeatureCollection::new("roots", Crs::Mercator, root_raw).expect("valid roots");
    let vertices: Vec<Position> = root
        .features()
        .iter()
        .flat_map(|f| geometry_polygons(&f.geometry)[0].exterior.clone())
        .collect();
    let mut ids: Vec<u64> = (0..points as u64).map(|i| i * 7 + 3).collect();
    for i in (1..ids.len()).rev() {
        ids.swap(i, rng.random_range(0..=i));
    }
    let join_raw: Vec<RawFeature> = ids
        .into_iter()
        .map(|id| {
            let (x, y) = if rng.random_bool(0.02) {
                let v = vertices[rng.random_range(0..vertices.len())];
                (v.x, v.y)
            } else {
                (rng.random_range(0.0..extent), rng.random_range(0.0..extent))
            };
            let mut a = Attributes::new();
            match rng.random_range(0..20) {
                0 => {}
                1 => {
                    a.insert("v".into(), AttributeValue::Number(f64::NAN));
                }
                2 => {
                    a.insert("v".into(), AttributeValue::Null);
                }
                _ => {
                    a.insert(
                        "v".into(),
                        AttributeValue::Number(rng.random_range(-50.0..150.0)),
                    );
                }
            }
            RawFeature::new(Geometry::point(Crs::Mercator, x, y), a).with_id(id)
        })
        .collect();
    let join = FeatureCollection::new("points", Crs::Mercator, join_raw).expect("valid points");
    (root, join)
}

pub fn all_aggregates() -> Vec<AggregateSpec> {
    vec![
        AggregateSpec::count("v"),
        AggregateSpec::new(AggregateFn::Sum, "v", "v"),
        AggregateSpec::new(AggregateFn::Avg, "v", "v"),
        AggregateSpec::new(AggregateFn::Min, "v", "v"),
        AggregateSpec::new(AggregateFn::Max, "v", "v"),
    ]
}

/// Bitwise equality of attribute maps (NaN-safe, distinguishes -0.0).
pub fn same_bits(a: &AttributeValue, b: &AttributeValue) -> bool {
    match (a, b) {
        (AttributeValue::Number(x), AttributeValue::Number(y)) => x.to_bits() == y.to_bits(),
        (AttributeValue::Array(x), AttributeValue::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())
        }
        (AttributeValue::Map(x), AttributeValue::Map(y)) => {
            x.len() == y.len()
                && x.iter()
                    .zip(y)
                    .all(|((k1, v1), (k2, v2))| k1 == k2 && same_bits(v1, v2))
        }
        _ => a == b,
    }
}

pub fn same_collection_bits(a: &FeatureCollection, b: &FeatureCollection) -> bool {
    a.len() == b.len()
        && a.features().iter().zip(b.features()).all(|(f, g)| {
            f.id == g.id
                && f.geometry == g.geometry
                && same_bits(
                    &AttributeValue::Map(f.attributes.clone()),
                    &AttributeValue::Map(g.attributes.clone()),
                )
        })
}

/// Ray from `origin` along `dir` against a vertical prism over `footprint`
/// with height `h`, by marching `steps` points up to the prism top.
pub fn ray_hits_prism_marching(
    origin: [f64; 3],
    dir: [f64; 3],
    footprint: &Polygon,
    h: f64,
    steps: usize,
) -> bool {
    let t_max = (h - origin[2]) / dir[2];
    (1..=steps).any(|k| {
        let t = t_max * k as f64 / steps as f64;
        let (x, y, z) = (
            origin[0] + t * dir[0],
            origin[1] + t * dir[1],
            origin[2] + t * dir[2],
        );
        z >= 0.0 && z <= h && polygon_contains(footprint, x, y)
    })
}
