use featurekit::compute::{run_shadow_kernel, run_shadow_kernel_with, SunDirection};
use featurekit::model::{get_number, AttributeValue, Attributes};
use featurekit::{Crs, ExecMode, Feature, FeatureCollection, Geometry, Polygon, RawFeature};

mod common;

fn building(poly: Polygon, height: f64) -> Feature {
    let mut a = Attributes::new();
    a.insert("height".into(), AttributeValue::Number(height));
    Feature::new(1u64, Geometry::polygon(Crs::Mercator, poly), a)
}

fn roads(lines: &[Vec<(f64, f64)>]) -> FeatureCollection {
    let raw = lines
        .iter()
        .map(|l| RawFeature::new(Geometry::polyline(Crs::Mercator, l), Attributes::new()))
        .collect();
    FeatureCollection::new("roads", Crs::Mercator, raw).unwrap()
}

#[test]
fn low_west_sun_blocks_segment_east_of_cube() {
    let b = building(
        Polygon::from_xy(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]),
        10.0,
    );
    let c = roads(&[vec![(3.0, 0.1), (3.0, 0.9)]]);
    let sun = SunDirection::normalized(-1.0, 0.0, 0.1, "18h").unwrap();
    let out = run_shadow_kernel(&c, &b, "height", std::slice::from_ref(&sun), 0.1).unwrap();
    assert_eq!(
        get_number(&out.features()[0].attributes, "shadow.hours"),
        Some(1.0)
    );

    let fine = common::ray_hits_prism_marching(
        [3.0, 0.5, 0.0],
        [sun.dx, sun.dy, sun.dz],
        &Polygon::from_xy(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]),
        10.0,
        100_000,
    );
    assert!(fine);
}

#[test]
fn mercator_scale_coordinates_and_modes_agree() {
    let (x0, y0) = (-8_236_000.0, 4_947_000.0);
    let b = building(
        Polygon::from_xy(&[
            (x0, y0),
            (x0 + 30.0, y0),
            (x0 + 30.0, y0 + 20.0),
            (x0, y0 + 20.0),
        ]),
        45.0,
    );
    let c = roads(&[
        vec![(x0 - 5.0, y0 - 10.0), (x0 + 60.0, y0 - 10.0)],
        vec![(x0 + 40.0, y0 - 30.0), (x0 + 40.0, y0 + 60.0)],
    ]);
    let suns: Vec<SunDirection> = (0..12)
        .map(|h| {
            let az = std::f64::consts::PI * (h as f64 + 0.5) / 12.0;
            SunDirection::normalized(az.cos(), -az.sin().abs() * 0.3 + 0.5, 0.4, format!("{h}"))
                .unwrap()
        })
        .collect();
    let seq = run_shadow_kernel_with(ExecMode::Sequential, &c, &b, "height", &suns, 20.0).unwrap();
    let par = run_shadow_kernel_with(ExecMode::Parallel, &c, &b, "height", &suns, 20.0).unwrap();
    assert!(common::same_collection_bits(&seq, &par));
}
