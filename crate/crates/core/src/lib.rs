//! Feature-centric engine for urban visual analytics.
//!
//! Every stage consumes and produces [`model::FeatureCollection`]s: raw
//! sources are ingested into collections, spatially joined, enriched by
//! per-feature computation, rendered to meshes, and linked through
//! selections.

pub mod bench;
pub mod compute;
pub mod coordination;
pub mod exec;
pub mod geom;
pub mod ingest;
pub mod interchange;
pub mod mesh;
pub mod model;
pub mod spatial;

pub use exec::ExecMode;
pub use model::{
    AttributeValue, Attributes, BoundingBox, Crs, Feature, FeatureCollection, FeatureId, Geometry,
    ModelError, Polygon, Position, RawFeature, Selection, Shape,
};
