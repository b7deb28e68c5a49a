//! Planar geometry kernels shared by the join, picking, meshing and shadow
//! code. All routines work on projected coordinates.

use crate::model::{BoundingBox, Geometry, Polygon, Position, Shape};

/// Shoelace signed area; positive for counter-clockwise rings. Works on
/// open or closed rings. Coordinates are taken relative to the first vertex
/// so that large Mercator offsets do not swamp the result.
pub fn signed_area(ring: &[Position]) -> f64 {
    let Some(origin) = ring.first() else {
        return 0.0;
    };
    let n = ring.len();
    let mut twice = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        twice += (a.x - origin.x) * (b.y - origin.y) - (b.x - origin.x) * (a.y - origin.y);
    }
    twice * 0.5
}

/// Exterior area minus hole areas.
pub fn polygon_area(poly: &Polygon) -> f64 {
    signed_area(&poly.exterior).abs() - poly.holes.iter().map(|h| signed_area(h).abs()).sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingSide {
    Inside,
    Boundary,
    Outside,
}

pub fn on_segment(x: f64, y: f64, a: &Position, b: &Position) -> bool {
    let cross = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
    cross == 0.0 && x >= a.x.min(b.x) && x <= a.x.max(b.x) && y >= a.y.min(b.y) && y <= a.y.max(b.y)
}

/// Even-odd ray crossing with an explicit boundary check.
pub fn ring_side(x: f64, y: f64, ring: &[Position]) -> RingSide {
    let n = ring.len();
    if n == 0 {
        return RingSide::Outside;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = &ring[j];
        let b = &ring[i];
        if on_segment(x, y, a, b) {
            return RingSide::Boundary;
        }
        if (b.y > y) != (a.y > y) {
            let x_cross = (a.x - b.x) * (y - b.y) / (a.y - b.y) + b.x;
            if x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    if inside {
        RingSide::Inside
    } else {
        RingSide::Outside
    }
}

/// Boundary points count as inside; points strictly inside a hole do not.
pub fn point_in_polygon(x: f64, y: f64, poly: &Polygon) -> bool {
    match ring_side(x, y, &poly.exterior) {
        RingSide::Outside => false,
        RingSide::Boundary => true,
        RingSide::Inside => !poly
            .holes
            .iter()
            .any(|h| ring_side(x, y, h) == RingSide::Inside),
    }
}

pub fn point_in_geometry(x: f64, y: f64, g: &Geometry) -> bool {
    g.polygons().iter().any(|p| point_in_polygon(x, y, p))
}

pub fn point_segment_distance(x: f64, y: f64, a: &Position, b: &Position) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return (x - a.x).hypot(y - a.y);
    }
    let t = (((x - a.x) * dx + (y - a.y) * dy) / len2).clamp(0.0, 1.0);
    (x - (a.x + t * dx)).hypot(y - (a.y + t * dy))
}

pub fn polyline_distance(x: f64, y: f64, line: &[Position]) -> f64 {
    match line {
        [] => f64::INFINITY,
        [p] => (x - p.x).hypot(y - p.y),
        _ => line
            .windows(2)
            .map(|w| point_segment_distance(x, y, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

fn orient(ax: f64, ay: f64, bx: f64, by: f64, cx: f64, cy: f64) -> f64 {
    (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
}

/// Closed segment intersection (touching counts).
pub fn segments_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = orient(q1.0, q1.1, q2.0, q2.1, p1.0, p1.1);
    let d2 = orient(q1.0, q1.1, q2.0, q2.1, p2.0, p2.1);
    let d3 = orient(p1.0, p1.1, p2.0, p2.1, q1.0, q1.1);
    let d4 = orient(p1.0, p1.1, p2.0, p2.1, q2.0, q2.1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let within = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| {
        c.0 >= a.0.min(b.0) && c.0 <= a.0.max(b.0) && c.1 >= a.1.min(b.1) && c.1 <= a.1.max(b.1)
    };
    (d1 == 0.0 && within(q1, q2, p1))
        || (d2 == 0.0 && within(q1, q2, p2))
        || (d3 == 0.0 && within(p1, p2, q1))
        || (d4 == 0.0 && within(p1, p2, q2))
}

/// Does the closed segment a-b touch the rectangle?
pub fn segment_intersects_rect(a: &Position, b: &Position, rect: &BoundingBox) -> bool {
    if rect.contains_point(a.x, a.y) || rect.contains_point(b.x, b.y) {
        return true;
    }
    let c = rect.corners();
    (0..4).any(|i| segments_intersect((a.x, a.y), (b.x, b.y), c[i], c[(i + 1) % 4]))
}

/// Centroid of a polygon with holes, or `None` when its area is zero.
pub fn polygon_centroid(poly: &Polygon) -> Option<(f64, f64, f64)> {
    let origin = *poly.exterior.first()?;
    let mut area = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for (ring_no, ring) in poly.rings().enumerate() {
        let n = ring.len();
        let mut a2 = 0.0;
        let mut mx = 0.0;
        let mut my = 0.0;
        for i in 0..n {
            let (x0, y0) = (ring[i].x - origin.x, ring[i].y - origin.y);
            let (x1, y1) = (
                ring[(i + 1) % n].x - origin.x,
                ring[(i + 1) % n].y - origin.y,
            );
            let cross = x0 * y1 - x1 * y0;
            a2 += cross;
            mx += (x0 + x1) * cross;
            my += (y0 + y1) * cross;
        }
        // Exterior counts positive and holes negative whatever the winding.
        let sign = if (ring_no == 0) == (a2 >= 0.0) {
            1.0
        } else {
            -1.0
        };
        area += sign * a2 * 0.5;
        cx += sign * mx / 6.0;
        cy += sign * my / 6.0;
    }
    if area == 0.0 {
        return None;
    }
    Some((origin.x + cx / area, origin.y + cy / area, area))
}

fn vertex_mean<'a>(points: impl Iterator<Item = &'a Position>) -> Position {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for p in points {
        sx += p.x;
        sy += p.y;
        n += 1;
    }
    if n == 0 {
        return Position::new(f64::NAN, f64::NAN);
    }
    Position::new(sx / n as f64, sy / n as f64)
}

fn ring_vertices(ring: &[Position]) -> &[Position] {
    match ring {
        [first, .., last] if first.same_xy(last) => &ring[..ring.len() - 1],
        _ => ring,
    }
}

/// The point itself for points, otherwise the area- or length-weighted
/// centroid. Falls back to the vertex mean for zero-area/zero-length input.
pub fn representative_point(g: &Geometry) -> Position {
    match &g.shape {
        Shape::Point(p) => Position::new(p.x, p.y),
        Shape::MultiPoint(ps) => vertex_mean(ps.iter()),
        Shape::Polyline(ps) => {
            let (mut sx, mut sy, mut len) = (0.0, 0.0, 0.0);
            for w in ps.windows(2) {
                let l = w[0].distance(&w[1]);
                sx += (w[0].x + w[1].x) * 0.5 * l;
                sy += (w[0].y + w[1].y) * 0.5 * l;
                len += l;
            }
            if len > 0.0 {
                Position::new(sx / len, sy / len)
            } else {
                vertex_mean(ps.iter())
            }
        }
        Shape::Polygon(poly) => match polygon_centroid(poly) {
            Some((x, y, _)) => Position::new(x, y),
            None => vertex_mean(ring_vertices(&poly.exterior).iter()),
        },
        Shape::MultiPolygon(polys) => {
            let (mut sx, mut sy, mut total) = (0.0, 0.0, 0.0);
            for p in polys {
                if let Some((x, y, a)) = polygon_centroid(p) {
                    sx += x * a;
                    sy += y * a;
                    total += a;
                }
            }
            if total != 0.0 {
                Position::new(sx / total, sy / total)
            } else {
                vertex_mean(polys.iter().flat_map(|p| ring_vertices(&p.exterior).iter()))
            }
        }
    }
}
