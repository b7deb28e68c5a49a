//! Ear-clipping triangulation of polygons with holes.
//!
//! Holes are merged into the outer ring one at a time, rightmost hole
//! first, through a bridge edge from the hole's rightmost vertex to the
//! nearest outer-ring vertex that sees it. The merged ring is then clipped
//! ear by ear. Flat vertices are never clipped while real ears remain, so
//! convex input with v vertices yields v - 2 triangles.

use super::MeshError;
use crate::model::{Polygon, Position};

#[derive(Clone, Copy, Debug)]
struct Node {
    /// Vertex index in the flattened ring list.
    i: usize,
    x: f64,
    y: f64,
    prev: usize,
    next: usize,
}

struct Rings {
    nodes: Vec<Node>,
}

fn cross(a: &Node, b: &Node, c: &Node) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn same(a: &Node, b: &Node) -> bool {
    a.x == b.x && a.y == b.y
}

/// Closed test: `p` inside or on the CCW triangle (a, b, c).
fn in_triangle(a: &Node, b: &Node, c: &Node, p: &Node) -> bool {
    cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn on_segment(p: &Node, q: &Node, r: &Node) -> bool {
    q.x <= p.x.max(r.x) && q.x >= p.x.min(r.x) && q.y <= p.y.max(r.y) && q.y >= p.y.min(r.y)
}

/// Closed segment intersection (touching counts).
fn intersects(p1: &Node, q1: &Node, p2: &Node, q2: &Node) -> bool {
    let o1 = sign(cross(p1, q1, p2));
    let o2 = sign(cross(p1, q1, q2));
    let o3 = sign(cross(p2, q2, p1));
    let o4 = sign(cross(p2, q2, q1));
    (o1 != o2 && o3 != o4)
        || (o1 == 0 && on_segment(p1, p2, q1))
        || (o2 == 0 && on_segment(p1, q2, q1))
        || (o3 == 0 && on_segment(p2, p1, q2))
        || (o4 == 0 && on_segment(p2, q1, q2))
}

impl Rings {
    fn node(&self, k: usize) -> &Node {
        &self.nodes[k]
    }

    fn push_ring(&mut self, coords: &[(f64, f64)], first_index: usize) -> usize {
        let start = self.nodes.len();
        let n = coords.len();
        for (k, &(x, y)) in coords.iter().enumerate() {
            self.nodes.push(Node {
                i: first_index + k,
                x,
                y,
                prev: start + (k + n - 1) % n,
                next: start + (k + 1) % n,
            });
        }
        start
    }

    fn remove(&mut self, k: usize) {
        let Node { prev, next, .. } = self.nodes[k];
        self.nodes[prev].next = next;
        self.nodes[next].prev = prev;
    }

    fn ring_len(&self, start: usize) -> usize {
        let mut n = 1;
        let mut p = self.nodes[start].next;
        while p != start {
            n += 1;
            p = self.nodes[p].next;
        }
        n
    }

    /// Drops repeated points and flat (collinear) vertices.
    fn filter(&mut self, start: usize) -> usize {
        let mut start = start;
        let mut p = start;
        loop {
            let again;
            let (prev, next) = (self.nodes[p].prev, self.nodes[p].next);
            if p != next
                && (same(self.node(p), self.node(next))
                    || cross(self.node(prev), self.node(p), self.node(next)) == 0.0)
            {
                self.remove(p);
                p = prev;
                start = prev;
                if p == self.nodes[p].next {
                    break;
                }
                again = true;
            } else {
                p = next;
                again = false;
            }
            if !again && p == start {
                break;
            }
        }
        start
    }

    /// True when the diagonal a-b points into the polygon interior at `a`.
    fn locally_inside(&self, a: usize, b: usize) -> bool {
        let (an, bn) = (self.node(a), self.node(b));
        let (prev, next) = (self.node(an.prev), self.node(an.next));
        if cross(prev, an, next) > 0.0 {
            cross(an, bn, next) <= 0.0 && cross(an, prev, bn) <= 0.0
        } else {
            cross(an, bn, prev) > 0.0 || cross(an, next, bn) > 0.0
        }
    }

    fn middle_inside(&self, a: usize, b: usize) -> bool {
        let (an, bn) = (self.node(a), self.node(b));
        let (px, py) = ((an.x + bn.x) / 2.0, (an.y + bn.y) / 2.0);
        let mut inside = false;
        let mut p = a;
        loop {
            let pn = self.node(p);
            let qn = self.node(pn.next);
            if (pn.y > py) != (qn.y > py)
                && qn.y != pn.y
                && px < (qn.x - pn.x) * (py - pn.y) / (qn.y - pn.y) + pn.x
            {
                inside = !inside;
            }
            p = pn.next;
            if p == a {
                break;
            }
        }
        inside
    }

    /// Does segment a-b cross any edge of the ring through `ring` that does
    /// not share an endpoint coordinate with it?
    fn crosses_ring(&self, ring: usize, a: &Node, b: &Node) -> bool {
        let mut p = ring;
        loop {
            let pn = self.node(p);
            let qn = self.node(pn.next);
            if !same(pn, a)
                && !same(pn, b)
                && !same(qn, a)
                && !same(qn, b)
                && intersects(pn, qn, a, b)
            {
                return true;
            }
            p = pn.next;
            if p == ring {
                return false;
            }
        }
    }

    fn is_ear(&self, ear: usize) -> bool {
        let b = self.node(ear);
        let (a, c) = (self.node(b.prev), self.node(b.next));
        if cross(a, b, c) <= 0.0 {
            return false;
        }
        let mut p = c.next;
        while p != b.prev {
            let pn = self.node(p);
            let reflex = cross(self.node(pn.prev), pn, self.node(pn.next)) <= 0.0;
            if reflex && !same(pn, a) && !same(pn, c) && !same(pn, b) && in_triangle(a, b, c, pn) {
                return false;
            }
            p = pn.next;
        }
        true
    }

    /// Joins two nodes with a pair of bridge edges, splitting one ring in
    /// two or merging two rings into one. Returns the copy of `b`.
    fn split(&mut self, a: usize, b: usize) -> usize {
        let a2 = self.nodes.len();
        let b2 = a2 + 1;
        let (an, bp) = (self.nodes[a].next, self.nodes[b].prev);
        let mut na = self.nodes[a];
        let mut nb = self.nodes[b];
        self.nodes[a].next = b;
        self.nodes[b].prev = a;
        na.next = an;
        nb.next = a2;
        na.prev = b2;
        nb.prev = bp;
        self.nodes.push(na);
        self.nodes.push(nb);
        self.nodes[an].prev = a2;
        self.nodes[bp].next = b2;
        b2
    }

    fn is_valid_diagonal(&self, a: usize, b: usize) -> bool {
        let (an, bn) = (self.node(a), self.node(b));
        an.next != b
            && an.prev != b
            && !same(an, bn)
            && !self.crosses_ring(a, an, bn)
            && self.locally_inside(a, b)
            && self.locally_inside(b, a)
            && self.middle_inside(a, b)
    }

    fn clip(&mut self, start: usize, out: &mut Vec<[usize; 3]>, pass: u8) -> Result<(), ()> {
        let mut ear = start;
        let mut stop = ear;
        while self.nodes[ear].prev != self.nodes[ear].next {
            let Node { prev, next, .. } = self.nodes[ear];
            if self.is_ear(ear) {
                out.push([self.nodes[prev].i, self.nodes[ear].i, self.nodes[next].i]);
                self.remove(ear);
                ear = self.nodes[next].next;
                stop = ear;
                continue;
            }
            ear = next;
            if ear == stop {
                return match pass {
                    0 => {
                        let s = self.filter(ear);
                        self.clip(s, out, 1)
                    }
                    _ => self.split_clip(ear, out),
                };
            }
        }
        Ok(())
    }

    /// Last resort: cut the ring along any valid diagonal and clip halves.
    fn split_clip(&mut self, start: usize, out: &mut Vec<[usize; 3]>) -> Result<(), ()> {
        if self.ring_len(start) < 3 {
            return Ok(());
        }
        let mut a = start;
        loop {
            let mut b = self.nodes[self.nodes[a].next].next;
            while b != self.nodes[a].prev {
                if self.is_valid_diagonal(a, b) {
                    let c = self.split(a, b);
                    let a = self.filter(a);
                    let c = self.filter(c);
                    self.clip(a, out, 1)?;
                    return self.clip(c, out, 1);
                }
                b = self.nodes[b].next;
            }
            a = self.nodes[a].next;
            if a == start {
                return Err(());
            }
        }
    }

    /// Bridges a hole into the outer ring through `outer`.
    fn eliminate_hole(&mut self, hole: usize, outer: usize, pending: &[usize]) -> Option<()> {
        // Rightmost hole vertex (topmost on ties).
        let mut h = hole;
        let mut p = self.nodes[hole].next;
        while p != hole {
            let (pn, hn) = (self.node(p), self.node(h));
            if pn.x > hn.x || (pn.x == hn.x && pn.y > hn.y) {
                h = p;
            }
            p = pn.next;
        }
        let hn = *self.node(h);
        let mut candidates = Vec::new();
        let mut p = outer;
        loop {
            let pn = self.node(p);
            candidates.push(((pn.x - hn.x).hypot(pn.y - hn.y), p));
            p = pn.next;
            if p == outer {
                break;
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let v = candidates.into_iter().map(|c| c.1).find(|&v| {
            let vn = *self.node(v);
            self.locally_inside(v, h)
                && self.locally_inside(h, v)
                && !self.crosses_ring(outer, &vn, &hn)
                && !self.crosses_ring(hole, &vn, &hn)
                && pending.iter().all(|&r| !self.crosses_ring(r, &vn, &hn))
        })?;
        self.split(v, h);
        Some(())
    }
}

fn distinct_ring(ring: &[Position]) -> &[Position] {
    match ring {
        [first, .., last] if ring.len() > 1 && first.same_xy(last) => &ring[..ring.len() - 1],
        _ => ring,
    }
}

/// Flattened vertex list used for triangle indices: the exterior ring's
/// distinct vertices, then each hole's, after orientation normalization.
pub fn polygon_vertices(poly: &Polygon) -> Vec<Position> {
    poly.clone()
        .normalized()
        .rings()
        .flat_map(|r| distinct_ring(r).iter().copied())
        .collect()
}

/// Triangulates a polygon with holes. Triangles are index triples into
/// [`polygon_vertices`], counter-clockwise.
///
/// Rings must be simple; self-intersecting input is not detected and may
/// stall or give overlapping triangles.
pub fn triangulate_polygon(poly: &Polygon) -> Result<Vec<[usize; 3]>, MeshError> {
    let poly = poly.clone().normalized();
    let ext = distinct_ring(&poly.exterior);
    if ext.len() < 3 {
        return Err(MeshError::TriangulationStall { ring: 0 });
    }
    // Local frame keeps large projected coordinates well conditioned.
    let (ox, oy) = (ext[0].x, ext[0].y);
    let local = |ring: &[Position]| -> Vec<(f64, f64)> {
        ring.iter().map(|p| (p.x - ox, p.y - oy)).collect()
    };

    let mut rings = Rings { nodes: Vec::new() };
    let outer = rings.push_ring(&local(ext), 0);
    let mut next_index = ext.len();
    let mut holes = Vec::new();
    for h in &poly.holes {
        let h = distinct_ring(h);
        if h.len() < 3 {
            next_index += h.len();
            continue;
        }
        let start = rings.push_ring(&local(h), next_index);
        let max_x = h.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        holes.push((max_x, start));
        next_index += h.len();
    }
    holes.sort_by(|a, b| b.0.total_cmp(&a.0));
    let hole_starts: Vec<usize> = holes.iter().map(|h| h.1).collect();
    for (k, &hole) in hole_starts.iter().enumerate() {
        rings
            .eliminate_hole(hole, outer, &hole_starts[k + 1..])
            .ok_or(MeshError::TriangulationStall { ring: k + 1 })?;
    }

    let mut out = Vec::with_capacity(next_index + 2 * holes.len());
    rings
        .clip(outer, &mut out, 0)
        .map_err(|_| MeshError::TriangulationStall { ring: 0 })?;
    Ok(out)
}

/// Area of a triangle given by indices into `vertices`.
pub fn triangle_area(vertices: &[Position], t: [usize; 3]) -> f64 {
    let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
    0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
}
