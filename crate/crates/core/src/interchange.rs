//! Canonical on-disk form of a collection: a GeoJSON FeatureCollection with
//! a numeric top-level `id` on every feature and a `crs-tag` member.
//! Writing then reading returns an equal collection.

use crate::ingest::{collection_to_json, parse_collection_strict, IngestError};
use crate::model::FeatureCollection;

pub fn to_bytes(collection: &FeatureCollection) -> Vec<u8> {
    serde_json::to_vec(&collection_to_json(collection)).expect("JSON values always serialize")
}

pub fn to_bytes_pretty(collection: &FeatureCollection) -> Vec<u8> {
    serde_json::to_vec_pretty(&collection_to_json(collection))
        .expect("JSON values always serialize")
}

pub fn from_bytes(bytes: &[u8]) -> Result<FeatureCollection, IngestError> {
    parse_collection_strict(bytes)
}
