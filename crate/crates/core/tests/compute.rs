use featurekit::compute::{
    compile_expression, linfit, run_analytical, run_analytical_with, ComputeError, ComputeProgram,
    Type,
};
use featurekit::model::{get_path, AttributeValue, Attributes};
use featurekit::{Crs, ExecMode, FeatureCollection, Geometry, RawFeature};
use rand::Rng;
use std::collections::BTreeMap;

mod common;

/// Centered two-pass least squares, accumulated with Kahan summation.
fn linfit_oracle(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    fn kahan(it: impl Iterator<Item = f64>) -> f64 {
        let (mut s, mut c) = (0.0f64, 0.0f64);
        for v in it {
            let y = v - c;
            let t = s + y;
            c = (t - s) - y;
            s = t;
        }
        s
    }
    let n = xs.len() as f64;
    let mx = kahan(xs.iter().copied()) / n;
    let my = kahan(ys.iter().copied()) / n;
    let sxy = kahan(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let sxx = kahan(xs.iter().map(|x| (x - mx) * (x - mx)));
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn series_collection(n: usize, seed: u64) -> FeatureCollection {
    let mut rng = common::rng(seed);
    let raw = (0..n)
        .map(|i| {
            let len = rng.random_range(3..24);
            let xs: Vec<f64> = (0..len)
                .map(|k| k as f64 + rng.random_range(-0.3..0.3))
                .collect();
            let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(20.0..35.0));
            let ys: Vec<f64> = xs
                .iter()
                .map(|x| a * x + b + rng.random_range(-1.0..1.0))
                .collect();
            let mut attrs = Attributes::new();
            attrs.insert(
                "area".into(),
                AttributeValue::Number(rng.random_range(10.0..5000.0)),
            );
            attrs.insert(
                "height".into(),
                AttributeValue::Number(rng.random_range(1.0..300.0)),
            );
            attrs.insert("xs".into(), AttributeValue::Array(xs));
            attrs.insert("ys".into(), AttributeValue::Array(ys));
            RawFeature::new(Geometry::point(Crs::Mercator, i as f64, 0.0), attrs)
        })
        .collect();
    FeatureCollection::new("segments", Crs::Mercator, raw).unwrap()
}

#[test]
fn linfit_agrees_with_oracle() {
    let mut rng = common::rng(99);
    for _ in 0..1000 {
        let n = rng.random_range(2..60);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
        let (s, i) = linfit(&xs, &ys);
        let (so, io) = linfit_oracle(&xs, &ys);
        assert!(
            (s - so).abs() <= 1e-9 * so.abs().max(1.0),
            "slope {s} vs {so}"
        );
        assert!(
            (i - io).abs() <= 1e-9 * io.abs().max(1.0),
            "intercept {i} vs {io}"
        );
    }
    assert_eq!(
        linfit(&[0.0, 1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 5.0, 7.0, 9.0]),
        (2.0, 1.0)
    );
}

#[test]
fn parallel_is_bit_identical() {
    let c = series_collection(20_000, 1);
    let programs = [
        ComputeProgram::new("x * y", [("x", "area"), ("y", "height")], ["volume"]).unwrap(),
        ComputeProgram::new(
            "linfit(xs, ys)",
            [("xs", "xs"), ("ys", "ys")],
            ["trend.slope", "trend.intercept"],
        )
        .unwrap(),
    ];
    for p in &programs {
        let seq = run_analytical_with(ExecMode::Sequential, &c, p).unwrap();
        let par = run_analytical_with(ExecMode::Parallel, &c, p).unwrap();
        assert!(common::same_collection_bits(
            &seq.collection,
            &par.collection
        ));
    }
}

#[test]
fn examples_and_errors() {
    let c = series_collection(3, 2);
    let p = ComputeProgram::new("x * y", [("x", "area"), ("y", "height")], ["volume"]).unwrap();
    let out = run_analytical(&c, &p).unwrap().collection;
    for f in out.features() {
        let want =
            f.attributes["area"].as_f64().unwrap() * f.attributes["height"].as_f64().unwrap();
        assert_eq!(
            get_path(&f.attributes, "volume"),
            Some(&AttributeValue::Number(want))
        );
    }
    let vars = BTreeMap::from([("x".to_string(), Type::Scalar)]);
    assert!(compile_expression("sum(x)", &vars).is_err());
    let arrays = BTreeMap::from([
        ("xs".to_string(), Type::Array),
        ("ys".to_string(), Type::Array),
    ]);
    assert_eq!(
        compile_expression("linfit(xs, ys)", &arrays)
            .unwrap()
            .result_type(),
        Type::Tuple(2)
    );
    let p = ComputeProgram::new("sum(x)", [("x", "area")], ["s"]).unwrap();
    assert!(matches!(
        run_analytical(&c, &p),
        Err(ComputeError::Compile(_))
    ));
}
