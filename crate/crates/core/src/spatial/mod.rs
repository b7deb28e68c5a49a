//! Data operations over collections: indexed joins, where/what/when
//! filtering and raster sampling. Every operation returns a collection
//! whose ids and geometries come straight from its input.

mod filter;
mod join;
mod raster;
mod rtree;

use thiserror::Error;

use crate::model::{Crs, FeatureId, ModelError};

pub use crate::geom::point_in_polygon;
pub use filter::{
    filter_what, filter_where, slice_when, CompareOp, Comparison, Region, TemporalOutput,
    TemporalSlice, TemporalSpec,
};
pub use join::{
    spatial_join, spatial_join_with, AggregateFn, AggregateSpec, JoinKind, JoinPredicate,
};
pub use raster::{raster_join, raster_join_with};
pub use rtree::{build_index, SpatialIndex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpatialError {
    #[error("CRS mismatch: {left} vs {right}")]
    CrsMismatch { left: Crs, right: Crs },
    #[error("NEAREST join requires a radius")]
    MissingRadius,
    #[error("radius must be a positive finite number, got {0}")]
    InvalidRadius(f64),
    #[error("JOIN root feature {0} is not a polygon")]
    NonPolygonRoot(FeatureId),
    #[error("invalid temporal range or bin width")]
    InvalidRange,
    #[error("raster has no pixels or no bands")]
    EmptyRaster,
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub(crate) fn same_crs(left: Crs, right: Crs) -> Result<(), SpatialError> {
    if left == right {
        Ok(())
    } else {
        Err(SpatialError::CrsMismatch { left, right })
    }
}
