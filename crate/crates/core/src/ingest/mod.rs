//! Parsers for raw urban data sources and OSM geometry reconstruction.
//!
//! Everything here is a pure function of its input bytes. Vector output is
//! in Mercator meters unless the caller asks to keep geographic degrees.

mod csv_points;
mod geojson;
mod geotiff;
mod layers;
mod overpass;
mod projection;
mod rings;

use thiserror::Error;

use crate::model::ModelError;

pub use csv_points::{parse_csv_points, CsvOptions, CsvPoints};
pub(crate) use geojson::{collection_to_json, parse_collection_strict};
pub use geojson::{parse_geojson, GeoJsonOptions};
pub use geotiff::{parse_geotiff, GeoTiffError, RasterGrid, Tiepoint};
pub use layers::{extract_layers, Layer, LayerConfig, LayerExtraction, LayerSet, TagRule};
pub use overpass::{parse_overpass, Member, MemberKind, OverpassDocument, Relation, Way};
pub use projection::{
    project_forward, project_geometry, project_inverse, ProjectionError, ECCENTRICITY_SQ,
    FLATTENING, MAX_LATITUDE, SEMI_MAJOR_AXIS,
};
pub use rings::{assemble_rings, RingError, RingRole};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    MalformedJson {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("Overpass response has no \"elements\" array")]
    MissingElementsArray,
    #[error("invalid document: {0}")]
    InvalidDocument(String),
    #[error("unsupported geometry type {0}")]
    UnsupportedGeometry(String),
    #[error("feature {0} has no numeric id")]
    MissingId(usize),
    #[error("document has no \"crs-tag\" property")]
    MissingCrsTag,
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("input has no data rows")]
    EmptyInput,
    #[error("CSV error: {0}")]
    Csv(String),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    GeoTiff(#[from] GeoTiffError),
}

impl From<serde_json::Error> for IngestError {
    fn from(e: serde_json::Error) -> Self {
        IngestError::MalformedJson {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}
