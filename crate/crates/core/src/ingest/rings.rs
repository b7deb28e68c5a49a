use std::collections::HashMap;

use thiserror::Error;

use crate::geom::{self, RingSide};
use crate::model::{Polygon, Position, Ring, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingRole {
    Outer,
    Inner,
}

impl RingRole {
    /// OSM member role; anything other than "inner" is treated as outer.
    pub fn from_osm(role: &str) -> RingRole {
        if role == "inner" {
            RingRole::Inner
        } else {
            RingRole::Outer
        }
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum RingError {
    #[error("way fragments do not close into a ring")]
    UnclosableRing,
    #[error("more than two fragments share an endpoint")]
    AmbiguousChain,
    #[error("no outer ring")]
    NoOuterRing,
}

type Key = (u64, u64);

fn key(p: &Position) -> Key {
    (p.x.to_bits(), p.y.to_bits())
}

fn is_closed(ring: &[Position]) -> bool {
    ring.len() >= 4 && ring[0].same_xy(&ring[ring.len() - 1])
}

/// Chains fragments sharing endpoints into closed rings.
fn chain(fragments: Vec<&[Position]>) -> Result<Vec<Ring>, RingError> {
    let mut rings = Vec::new();
    let mut open: Vec<&[Position]> = Vec::new();
    for f in fragments {
        if is_closed(f) {
            rings.push(f.to_vec());
        } else if f.len() >= 2 {
            open.push(f);
        } else {
            return Err(RingError::UnclosableRing);
        }
    }

    let mut ends: HashMap<Key, Vec<usize>> = HashMap::new();
    for (i, f) in open.iter().enumerate() {
        ends.entry(key(&f[0])).or_default().push(i);
        ends.entry(key(&f[f.len() - 1])).or_default().push(i);
    }
    if ends.values().any(|v| v.len() > 2) {
        return Err(RingError::AmbiguousChain);
    }

    let mut used = vec![false; open.len()];
    for start in 0..open.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut ring: Ring = open[start].to_vec();
        while !is_closed(&ring) {
            let tail = *ring.last().expect("fragments are non-empty");
            let next = ends
                .get(&key(&tail))
                .and_then(|c| c.iter().copied().find(|&j| !used[j]))
                .ok_or(RingError::UnclosableRing)?;
            used[next] = true;
            let frag = open[next];
            if frag[0].same_xy(&tail) {
                ring.extend_from_slice(&frag[1..]);
            } else {
                ring.extend(frag.iter().rev().skip(1));
            }
        }
        rings.push(ring);
    }
    Ok(rings)
}

/// Builds a polygon (one outer ring) or multipolygon from way fragments.
/// Inner rings go to the smallest outer ring containing their first vertex;
/// inner rings outside every outer ring are discarded.
pub fn assemble_rings(members: &[(Vec<Position>, RingRole)]) -> Result<Shape, RingError> {
    let pick = |role| {
        members
            .iter()
            .filter(move |(_, r)| *r == role)
            .map(|(p, _)| p.as_slice())
            .collect()
    };
    let outers = chain(pick(RingRole::Outer))?;
    let inners = chain(pick(RingRole::Inner))?;
    if outers.is_empty() {
        return Err(RingError::NoOuterRing);
    }

    let mut polygons: Vec<Polygon> = outers
        .into_iter()
        .map(|r| Polygon::new(r, Vec::new()))
        .collect();
    for inner in inners {
        let probe = inner[0];
        let owner = polygons
            .iter()
            .enumerate()
            .filter(|(_, p)| ring_side_of(&probe, &p.exterior) != RingSide::Outside)
            .min_by(|(_, a), (_, b)| {
                geom::signed_area(&a.exterior)
                    .abs()
                    .total_cmp(&geom::signed_area(&b.exterior).abs())
            })
            .map(|(i, _)| i);
        if let Some(i) = owner {
            polygons[i].holes.push(inner);
        }
    }
    let mut polygons: Vec<Polygon> = polygons.into_iter().map(Polygon::normalized).collect();
    Ok(if polygons.len() == 1 {
        Shape::Polygon(polygons.remove(0))
    } else {
        Shape::MultiPolygon(polygons)
    })
}

fn ring_side_of(p: &Position, ring: &[Position]) -> RingSide {
    geom::ring_side(p.x, p.y, ring)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Position> {
        v.iter().copied().map(Position::from).collect()
    }

    #[test]
    fn two_halves_close_a_square() {
        let a = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]);
        // Second half runs the same direction as the first ends: reversed.
        let b = pts(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        let shape = assemble_rings(&[(a, RingRole::Outer), (b, RingRole::Outer)]).unwrap();
        let Shape::Polygon(p) = shape else {
            panic!("expected polygon")
        };
        assert_eq!(p.exterior.len(), 5);
        assert_eq!(p.area(), 1.0);
        assert!(geom::signed_area(&p.exterior) > 0.0);
    }

    #[test]
    fn inner_ring_becomes_hole() {
        let outer = pts(&[(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0), (0.0, 0.0)]);
        let inner = pts(&[(1.0, 1.0), (3.0, 1.0), (3.0, 3.0), (1.0, 3.0), (1.0, 1.0)]);
        let Shape::Polygon(p) =
            assemble_rings(&[(outer, RingRole::Outer), (inner, RingRole::Inner)]).unwrap()
        else {
            panic!()
        };
        assert_eq!(p.holes.len(), 1);
        assert_eq!(p.area(), 12.0);
    }

    #[test]
    fn two_outers_give_multipolygon() {
        let a = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 0.0)]);
        let b = pts(&[(5.0, 0.0), (6.0, 0.0), (6.0, 1.0), (5.0, 0.0)]);
        let shape = assemble_rings(&[(a, RingRole::Outer), (b, RingRole::Outer)]).unwrap();
        assert!(matches!(shape, Shape::MultiPolygon(ps) if ps.len() == 2));
    }

    #[test]
    fn unclosable_and_ambiguous() {
        let a = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]);
        let b = pts(&[(1.0, 1.0), (0.0, 1.0)]);
        assert_eq!(
            assemble_rings(&[(a.clone(), RingRole::Outer), (b, RingRole::Outer)]).unwrap_err(),
            RingError::UnclosableRing
        );
        let c = pts(&[(1.0, 1.0), (2.0, 2.0)]);
        let d = pts(&[(1.0, 1.0), (3.0, 3.0)]);
        assert_eq!(
            assemble_rings(&[
                (a, RingRole::Outer),
                (c, RingRole::Outer),
                (d, RingRole::Outer)
            ])
            .unwrap_err(),
            RingError::AmbiguousChain
        );
        let inner = pts(&[(1.0, 1.0), (3.0, 1.0), (3.0, 3.0), (1.0, 1.0)]);
        assert_eq!(
            assemble_rings(&[(inner, RingRole::Inner)]).unwrap_err(),
            RingError::NoOuterRing
        );
    }
}
