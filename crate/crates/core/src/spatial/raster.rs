use super::SpatialError;
use crate::exec::{self, ExecMode};
use crate::ingest::{project_forward, project_inverse, RasterGrid};
use crate::model::{AttributeValue, Attributes, Crs, FeatureCollection, Geometry, Position, Shape};

/// Vertices of a geometry with each ring's closing duplicate left out.
fn distinct_vertices(g: &Geometry) -> Vec<Position> {
    let open = |ring: &[Position]| -> Vec<Position> {
        match ring {
            [first, .., last] if first.same_xy(last) => ring[..ring.len() - 1].to_vec(),
            _ => ring.to_vec(),
        }
    };
    match &g.shape {
        Shape::Point(p) => vec![*p],
        Shape::MultiPoint(ps) | Shape::Polyline(ps) => ps.clone(),
        Shape::Polygon(_) | Shape::MultiPolygon(_) => g
            .polygons()
            .iter()
            .flat_map(|p| p.rings().flat_map(|r| open(r)))
            .collect(),
    }
}

/// [`raster_join_with`] in the default execution mode.
pub fn raster_join(
    collection: &FeatureCollection,
    raster: &RasterGrid,
    result_field: &str,
) -> Result<FeatureCollection, SpatialError> {
    raster_join_with(ExecMode::default(), collection, raster, result_field)
}

/// Samples the raster at every vertex of every feature and writes the
/// per-band mean as a number array at `result_field`. A vertex counts only
/// when it falls inside the raster and no band is nodata there; features
/// without any such vertex get null.
pub fn raster_join_with(
    mode: ExecMode,
    collection: &FeatureCollection,
    raster: &RasterGrid,
    result_field: &str,
) -> Result<FeatureCollection, SpatialError> {
    if raster.width == 0 || raster.height == 0 || raster.bands.is_empty() {
        return Err(SpatialError::EmptyRaster);
    }
    let to_raster = |p: &Position| -> Option<(f64, f64)> {
        match (collection.crs(), raster.crs) {
            (a, b) if a == b => Some((p.x, p.y)),
            (Crs::Mercator, Crs::Geographic) => project_inverse(p.x, p.y).ok(),
            (Crs::Geographic, Crs::Mercator) => project_forward(p.x, p.y).ok(),
            _ => unreachable!("two CRS tags"),
        }
    };
    let bands = raster.band_count();
    let rows = exec::map_slice(mode, collection.features(), |f| {
        let mut sums = vec![0.0; bands];
        let mut n = 0usize;
        for v in distinct_vertices(&f.geometry) {
            let Some((x, y)) = to_raster(&v) else {
                continue;
            };
            let Some((col, row)) = raster.pixel_at(x, y) else {
                continue;
            };
            let sample: Vec<f64> = (0..bands).map(|b| raster.value(b, col, row)).collect();
            if sample.iter().any(|&s| raster.is_nodata(s)) {
                continue;
            }
            for (acc, s) in sums.iter_mut().zip(sample) {
                *acc += s;
            }
            n += 1;
        }
        let value = if n == 0 {
            AttributeValue::Null
        } else {
            AttributeValue::Array(sums.into_iter().map(|s| s / n as f64).collect())
        };
        let mut update = Attributes::new();
        update.insert(result_field.to_owned(), value);
        Some(update)
    });
    Ok(collection.merge_rows(rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attrs;
    use crate::ingest::Tiepoint;
    use crate::model::{get_path, RawFeature};

    fn grid(bands: Vec<Vec<f64>>, nodata: Option<f64>) -> RasterGrid {
        RasterGrid {
            width: 2,
            height: 2,
            bands,
            pixel_scale: (10.0, 10.0),
            tiepoint: Tiepoint {
                i: 0.0,
                j: 0.0,
                x: 0.0,
                y: 20.0,
            },
            nodata,
            crs: Crs::Mercator,
        }
    }

    fn segment() -> FeatureCollection {
        let line = Geometry::polyline(Crs::Mercator, &[(5.0, 15.0), (15.0, 15.0)]);
        FeatureCollection::new("s", Crs::Mercator, vec![RawFeature::new(line, attrs! {})]).unwrap()
    }

    #[test]
    fn constant_and_mean() {
        let out = raster_join(&segment(), &grid(vec![vec![7.0; 4]; 3], None), "lst").unwrap();
        assert_eq!(
            get_path(&out.features()[0].attributes, "lst"),
            Some(&AttributeValue::Array(vec![7.0; 3]))
        );
        let out = raster_join(
            &segment(),
            &grid(vec![vec![10.0, 20.0, 0.0, 0.0]], None),
            "lst",
        )
        .unwrap();
        assert_eq!(
            get_path(&out.features()[0].attributes, "lst"),
            Some(&AttributeValue::Array(vec![15.0]))
        );
    }

    #[test]
    fn nodata_everywhere_gives_null() {
        let out = raster_join(
            &segment(),
            &grid(vec![vec![-9999.0; 4]], Some(-9999.0)),
            "lst",
        )
        .unwrap();
        assert_eq!(
            get_path(&out.features()[0].attributes, "lst"),
            Some(&AttributeValue::Null)
        );
        let empty = RasterGrid {
            bands: vec![],
            ..grid(vec![], None)
        };
        assert_eq!(
            raster_join(&segment(), &empty, "lst"),
            Err(SpatialError::EmptyRaster)
        );
    }
}
