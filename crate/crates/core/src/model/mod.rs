//! Feature-centric primitives shared by every other module: features,
//! collections, selections, and the attribute writeback contract.

mod attributes;
mod collection;
mod geometry;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use attributes::{get_number, get_path, AttributeValue, Attributes};
pub(crate) use attributes::{set_path, valid_path};
pub use collection::{
    bbox, make_collection, merge_attributes, Feature, FeatureCollection, RawFeature, Selection,
};
pub use geometry::{Crs, Geometry, GeometryIssue, GeometryKind, Polygon, Position, Ring, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureId(pub u64);

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for FeatureId {
    fn from(v: u64) -> Self {
        FeatureId(v)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("duplicate feature id {0}")]
    DuplicateId(FeatureId),
    #[error("feature {id} is tagged {found}, collection is {expected}")]
    MixedCrs {
        id: FeatureId,
        expected: Crs,
        found: Crs,
    },
    #[error("unknown feature id {0}")]
    UnknownId(FeatureId),
    #[error("collection is empty")]
    EmptyCollection,
    #[error("feature {id} has invalid geometry: {issues:?}")]
    InvalidGeometry {
        id: FeatureId,
        issues: Vec<GeometryIssue>,
    },
    #[error("invalid attribute name '{0}'")]
    InvalidAttributeName(String),
    #[error("selection targets collection '{selection}', got '{collection}'")]
    CollectionMismatch {
        selection: String,
        collection: String,
    },
}

/// Axis-aligned bounds in the units of the owning CRS.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    /// Bounds from two corners in any order.
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        BoundingBox {
            min_x: x0.min(x1),
            min_y: y0.min(y1),
            max_x: x0.max(x1),
            max_y: y0.max(y1),
        }
    }

    pub fn from_point(x: f64, y: f64) -> Self {
        BoundingBox {
            min_x: x,
            min_y: y,
            max_x: x,
            max_y: y,
        }
    }

    pub fn include(&mut self, x: f64, y: f64) {
        self.min_x = self.min_x.min(x);
        self.min_y = self.min_y.min(y);
        self.max_x = self.max_x.max(x);
        self.max_y = self.max_y.max(y);
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    /// Closed-interval overlap test; touching boxes intersect.
    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.min_x <= other.max_x
            && other.min_x <= self.max_x
            && self.min_y <= other.max_y
            && other.min_y <= self.max_y
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    pub fn contains(&self, other: &BoundingBox) -> bool {
        self.min_x <= other.min_x
            && self.min_y <= other.min_y
            && self.max_x >= other.max_x
            && self.max_y >= other.max_y
    }

    pub fn expanded(&self, margin: f64) -> BoundingBox {
        BoundingBox {
            min_x: self.min_x - margin,
            min_y: self.min_y - margin,
            max_x: self.max_x + margin,
            max_y: self.max_y + margin,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.min_x + self.max_x) * 0.5,
            (self.min_y + self.max_y) * 0.5,
        )
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    /// Corners in counter-clockwise order starting at (min_x, min_y).
    pub fn corners(&self) -> [(f64, f64); 4] {
        [
            (self.min_x, self.min_y),
            (self.max_x, self.min_y),
            (self.max_x, self.max_y),
            (self.min_x, self.max_y),
        ]
    }

    pub fn to_polygon(&self) -> Polygon {
        Polygon::from_xy(&self.corners())
    }
}
