use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BoundingBox;
use crate::geom;

/// Coordinate reference tag carried by every geometry and collection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Crs {
    /// Longitude/latitude in degrees on WGS84.
    #[serde(rename = "geographic-wgs84")]
    Geographic,
    /// World Mercator (EPSG:3395) in meters.
    #[serde(rename = "mercator-3395")]
    Mercator,
}

impl Crs {
    pub fn tag(self) -> &'static str {
        match self {
            Crs::Geographic => "geographic-wgs84",
            Crs::Mercator => "mercator-3395",
        }
    }
}

impl fmt::Display for Crs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Crs {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "geographic-wgs84" => Ok(Crs::Geographic),
            "mercator-3395" => Ok(Crs::Mercator),
            other => Err(format!("unknown crs tag '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: Option<f64>,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y, z: None }
    }

    pub const fn with_z(x: f64, y: f64, z: f64) -> Self {
        Position { x, y, z: Some(z) }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_none_or(f64::is_finite)
    }

    /// Equality on the planar coordinates only.
    pub fn same_xy(&self, other: &Position) -> bool {
        self.x == other.x && self.y == other.y
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for Position {
    fn from((x, y): (f64, f64)) -> Self {
        Position::new(x, y)
    }
}

/// A closed sequence of positions; first == last once normalized.
pub type Ring = Vec<Position>;

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polygon {
    pub exterior: Ring,
    pub holes: Vec<Ring>,
}

impl Polygon {
    pub fn new(exterior: Ring, holes: Vec<Ring>) -> Self {
        Polygon { exterior, holes }
    }

    /// Polygon from an (x, y) list, closing the ring if needed.
    pub fn from_xy(points: &[(f64, f64)]) -> Self {
        let ring: Ring = points.iter().copied().map(Position::from).collect();
        Polygon::new(ring, Vec::new()).normalized()
    }

    pub fn with_hole(mut self, hole: &[(f64, f64)]) -> Self {
        self.holes
            .push(hole.iter().copied().map(Position::from).collect());
        self.normalized()
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }

    /// Area with holes subtracted.
    pub fn area(&self) -> f64 {
        geom::polygon_area(self)
    }

    /// Closes every ring and orients the exterior counter-clockwise and
    /// holes clockwise.
    pub fn normalized(mut self) -> Self {
        close_ring(&mut self.exterior);
        if geom::signed_area(&self.exterior) < 0.0 {
            self.exterior.reverse();
        }
        for hole in &mut self.holes {
            close_ring(hole);
            if geom::signed_area(hole) > 0.0 {
                hole.reverse();
            }
        }
        self
    }
}

fn close_ring(ring: &mut Ring) {
    if let (Some(first), Some(last)) = (ring.first().copied(), ring.last()) {
        if !first.same_xy(last) || first.z != last.z {
            ring.push(first);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Point(Position),
    MultiPoint(Vec<Position>),
    Polyline(Vec<Position>),
    Polygon(Polygon),
    MultiPolygon(Vec<Polygon>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeometryKind {
    Point,
    MultiPoint,
    Polyline,
    Polygon,
    MultiPolygon,
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            GeometryKind::Point => "Point",
            GeometryKind::MultiPoint => "MultiPoint",
            GeometryKind::Polyline => "Polyline",
            GeometryKind::Polygon => "Polygon",
            GeometryKind::MultiPolygon => "MultiPolygon",
        };
        f.write_str(name)
    }
}

/// One violated geometry invariant. `polygon`/`ring` locate the offending
/// ring (ring 0 is the exterior).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeometryIssue {
    OpenRing { polygon: usize, ring: usize },
    WrongOrientation { polygon: usize, ring: usize },
    DegenerateRing { polygon: usize, ring: usize },
    NonFiniteCoordinate,
    DegenerateLine,
    Empty,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub crs: Crs,
    pub shape: Shape,
}

impl Geometry {
    pub fn new(crs: Crs, shape: Shape) -> Self {
        Geometry { crs, shape }
    }

    pub fn point(crs: Crs, x: f64, y: f64) -> Self {
        Geometry::new(crs, Shape::Point(Position::new(x, y)))
    }

    pub fn polyline(crs: Crs, points: &[(f64, f64)]) -> Self {
        Geometry::new(
            crs,
            Shape::Polyline(points.iter().copied().map(Position::from).collect()),
        )
    }

    pub fn polygon(crs: Crs, polygon: Polygon) -> Self {
        Geometry::new(crs, Shape::Polygon(polygon))
    }

    pub fn kind(&self) -> GeometryKind {
        match self.shape {
            Shape::Point(_) => GeometryKind::Point,
            Shape::MultiPoint(_) => GeometryKind::MultiPoint,
            Shape::Polyline(_) => GeometryKind::Polyline,
            Shape::Polygon(_) => GeometryKind::Polygon,
            Shape::MultiPolygon(_) => GeometryKind::MultiPolygon,
        }
    }

    pub fn is_areal(&self) -> bool {
        matches!(self.shape, Shape::Polygon(_) | Shape::MultiPolygon(_))
    }

    /// Polygons of an areal geometry; empty for other kinds.
    pub fn polygons(&self) -> &[Polygon] {
        match &self.shape {
            Shape::Polygon(p) => std::slice::from_ref(p),
            Shape::MultiPolygon(ps) => ps,
            _ => &[],
        }
    }

    pub fn positions(&self) -> Box<dyn Iterator<Item = &Position> + '_> {
        match &self.shape {
            Shape::Point(p) => Box::new(std::iter::once(p)),
            Shape::MultiPoint(ps) | Shape::Polyline(ps) => Box::new(ps.iter()),
            Shape::Polygon(poly) => Box::new(poly.rings().flatten()),
            Shape::MultiPolygon(polys) => Box::new(polys.iter().flat_map(|p| p.rings().flatten())),
        }
    }

    pub fn for_each_position_mut(&mut self, mut f: impl FnMut(&mut Position)) {
        match &mut self.shape {
            Shape::Point(p) => f(p),
            Shape::MultiPoint(ps) | Shape::Polyline(ps) => ps.iter_mut().for_each(f),
            Shape::Polygon(poly) => poly
                .exterior
                .iter_mut()
                .chain(poly.holes.iter_mut().flatten())
                .for_each(f),
            Shape::MultiPolygon(polys) => {
                for poly in polys {
                    poly.exterior
                        .iter_mut()
                        .chain(poly.holes.iter_mut().flatten())
                        .for_each(&mut f);
                }
            }
        }
    }

    pub fn bbox(&self) -> Option<BoundingBox> {
        let mut it = self.positions();
        let first = it.next()?;
        let mut b = BoundingBox::from_point(first.x, first.y);
        for p in it {
            b.include(p.x, p.y);
        }
        Some(b)
    }

    /// Point used for containment and distance tests: the point itself,
    /// otherwise the centroid.
    pub fn representative_point(&self) -> Position {
        geom::representative_point(self)
    }

    pub fn normalized(mut self) -> Self {
        match &mut self.shape {
            Shape::Polygon(p) => *p = std::mem::take(p).normalized(),
            Shape::MultiPolygon(ps) => {
                for p in ps.iter_mut() {
                    *p = std::mem::take(p).normalized();
                }
            }
            _ => {}
        }
        self
    }

    /// Every violated invariant; empty when the geometry is valid.
    pub fn validate(&self) -> Vec<GeometryIssue> {
        let mut issues = Vec::new();
        if !self.positions().all(Position::is_finite) {
            issues.push(GeometryIssue::NonFiniteCoordinate);
        }
        match &self.shape {
            Shape::Point(_) => {}
            Shape::MultiPoint(ps) => {
                if ps.is_empty() {
                    issues.push(GeometryIssue::Empty);
                }
            }
            Shape::Polyline(ps) => {
                if ps.len() < 2 {
                    issues.push(GeometryIssue::DegenerateLine);
                }
            }
            Shape::Polygon(p) => validate_polygon(p, 0, &mut issues),
            Shape::MultiPolygon(ps) => {
                if ps.is_empty() {
                    issues.push(GeometryIssue::Empty);
                }
                for (i, p) in ps.iter().enumerate() {
                    validate_polygon(p, i, &mut issues);
                }
            }
        }
        issues
    }
}

fn validate_polygon(poly: &Polygon, polygon: usize, issues: &mut Vec<GeometryIssue>) {
    for (ring_no, ring) in poly.rings().enumerate() {
        let closed = match (ring.first(), ring.last()) {
            (Some(a), Some(b)) => a.same_xy(b),
            _ => false,
        };
        if !closed && !ring.is_empty() {
            issues.push(GeometryIssue::OpenRing {
                polygon,
                ring: ring_no,
            });
        }
        let distinct = distinct_vertices(ring);
        let area = geom::signed_area(ring);
        if ring.len() < 3 || (closed && ring.len() < 4) || distinct < 3 || area == 0.0 {
            issues.push(GeometryIssue::DegenerateRing {
                polygon,
                ring: ring_no,
            });
            continue;
        }
        let want_ccw = ring_no == 0;
        if (area > 0.0) != want_ccw {
            issues.push(GeometryIssue::WrongOrientation {
                polygon,
                ring: ring_no,
            });
        }
    }
}

fn distinct_vertices(ring: &[Position]) -> usize {
    let mut seen: Vec<(u64, u64)> = ring
        .iter()
        .map(|p| (p.x.to_bits(), p.y.to_bits()))
        .collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}
