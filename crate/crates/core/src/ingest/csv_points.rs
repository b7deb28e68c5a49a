use super::{project_forward, IngestError};
use crate::model::{AttributeValue, Attributes, Crs, FeatureCollection, Geometry, RawFeature};

#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub name: String,
    pub lon_column: String,
    pub lat_column: String,
    /// Project coordinates into Mercator.
    pub project: bool,
}

impl CsvOptions {
    pub fn new(lon_column: &str, lat_column: &str) -> Self {
        CsvOptions {
            name: "points".to_owned(),
            lon_column: lon_column.to_owned(),
            lat_column: lat_column.to_owned(),
            project: false,
        }
    }
}

#[derive(Debug)]
pub struct CsvPoints {
    pub collection: FeatureCollection,
    /// Rows dropped because their coordinates did not parse or project.
    pub skipped_rows: usize,
}

fn cell_value(cell: &str) -> AttributeValue {
    if cell.is_empty() {
        return AttributeValue::Null;
    }
    match cell.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => AttributeValue::Number(v),
        _ => AttributeValue::Text(cell.to_owned()),
    }
}

/// One point feature per data row (comma separated, double-quote quoting,
/// UTF-8, header row required).
pub fn parse_csv_points(bytes: &[u8], options: &CsvOptions) -> Result<CsvPoints, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Csv(e.to_string()))?
        .clone();
    if headers.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_owned()))
    };
    let lon_idx = column(&options.lon_column)?;
    let lat_idx = column(&options.lat_column)?;
    let crs = if options.project {
        Crs::Mercator
    } else {
        Crs::Geographic
    };

    let mut features = Vec::new();
    let mut skipped_rows = 0;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| IngestError::Csv(e.to_string()))?;
        rows += 1;
        let coord = |i: usize| {
            record
                .get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
        };
        let (Some(lon), Some(lat)) = (coord(lon_idx), coord(lat_idx)) else {
            skipped_rows += 1;
            continue;
        };
        let (x, y) = if options.project {
            match project_forward(lon, lat) {
                Ok(xy) => xy,
                Err(_) => {
                    skipped_rows += 1;
                    continue;
                }
            }
        } else {
            (lon, lat)
        };
        let attributes: Attributes = headers
            .iter()
            .zip(record.iter())
            .enumerate()
            .filter(|(i, (h, _))| *i != lon_idx && *i != lat_idx && !h.is_empty())
            .map(|(_, (h, cell))| (h.to_owned(), cell_value(cell)))
            .collect();
        features.push(RawFeature::new(Geometry::point(crs, x, y), attributes));
    }
    if rows == 0 {
        return Err(IngestError::EmptyInput);
    }
    let collection = FeatureCollection::new(options.name.clone(), crs, features)?;
    Ok(CsvPoints {
        collection,
        skipped_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::get_path;

    #[test]
    fn three_rows_with_extra_column() {
        let src = b"lon,lat,noise_key\n-73.9,40.7,12\n-73.8,40.8,loud\n-73.7,40.6,3\n";
        let out = parse_csv_points(src, &CsvOptions::new("lon", "lat")).unwrap();
        assert_eq!(out.collection.len(), 3);
        assert_eq!(out.skipped_rows, 0);
        let f = &out.collection.features()[0];
        assert_eq!(
            get_path(&f.attributes, "noise_key"),
            Some(&AttributeValue::Number(12.0))
        );
        assert_eq!(
            get_path(&out.collection.features()[1].attributes, "noise_key"),
            Some(&AttributeValue::Text("loud".into()))
        );
        assert!(!f.attributes.contains_key("lon"));
    }

    #[test]
    fn bad_coordinate_skipped() {
        let src = b"lon,lat\n1,2\n3,abc\n";
        let out = parse_csv_points(src, &CsvOptions::new("lon", "lat")).unwrap();
        assert_eq!(out.collection.len(), 1);
        assert_eq!(out.skipped_rows, 1);
    }

    #[test]
    fn header_only_and_missing_column() {
        let err = parse_csv_points(b"lon,lat\n", &CsvOptions::new("lon", "lat")).unwrap_err();
        assert!(matches!(err, IngestError::EmptyInput));
        let err = parse_csv_points(b"", &CsvOptions::new("lon", "lat")).unwrap_err();
        assert!(matches!(err, IngestError::EmptyInput));
        let err = parse_csv_points(b"x,lat\n1,2\n", &CsvOptions::new("lon", "lat")).unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn(c) if c == "lon"));
    }

    #[test]
    fn quoted_fields() {
        let src = b"lon,lat,name\n1,2,\"Main St, north\"\n";
        let out = parse_csv_points(src, &CsvOptions::new("lon", "lat")).unwrap();
        assert_eq!(
            get_path(&out.collection.features()[0].attributes, "name"),
            Some(&AttributeValue::Text("Main St, north".into()))
        );
    }
}
