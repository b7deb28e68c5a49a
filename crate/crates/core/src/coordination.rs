//! Interaction: clicks and brushes resolved into selections, and a
//! synchronous event bus that hands selections from one view to others.

use std::collections::BTreeSet;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};

use thiserror::Error;

use crate::exec::{self, ExecMode};
use crate::geom;
use crate::model::{
    get_number, AttributeValue, Attributes, BoundingBox, Feature, FeatureCollection, FeatureId,
    Geometry, ModelError, Position, Selection, Shape,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InteractionError {
    #[error("brush rectangle has zero or negative extent")]
    DegenerateBrush,
    #[error("pick tolerance must be a non-negative number, got {0}")]
    InvalidTolerance(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum InteractionEvent {
    /// Map click at a point in collection coordinates.
    ClickMap {
        x: f64,
        y: f64,
        tolerance: f64,
    },
    BrushMap(BoundingBox),
    /// Rectangle in the value space of two numeric attributes.
    BrushData {
        x_attr: String,
        y_attr: String,
        rect: BoundingBox,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    Picking,
    Click,
    Brush,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Picking => "PICKING",
            EventKind::Click => "CLICK",
            EventKind::Brush => "BRUSH",
        })
    }
}

fn select(collection: &FeatureCollection, keep: impl Fn(&Feature) -> bool + Sync) -> Selection {
    let hits = exec::map_slice(ExecMode::default(), collection.features(), |f| {
        keep(f).then_some(f.id)
    });
    Selection::from_checked(
        collection,
        hits.into_iter().flatten().collect::<BTreeSet<_>>(),
    )
}

/// Whether a click at (x, y) hits the geometry. Areas must contain the
/// point; points and lines must be within `tolerance`.
pub fn geometry_hit(g: &Geometry, x: f64, y: f64, tolerance: f64) -> bool {
    let near = |p: &Position| (p.x - x).hypot(p.y - y) <= tolerance;
    match &g.shape {
        Shape::Point(p) => near(p),
        Shape::MultiPoint(ps) => ps.iter().any(near),
        Shape::Polyline(line) => geom::polyline_distance(x, y, line) <= tolerance,
        Shape::Polygon(_) | Shape::MultiPolygon(_) => {
            g.polygons().iter().any(|p| geom::point_in_polygon(x, y, p))
        }
    }
}

/// Every feature hit by a click; overlapping features are all returned.
pub fn pick_at_point(collection: &FeatureCollection, x: f64, y: f64, tolerance: f64) -> Selection {
    select(collection, |f| geometry_hit(&f.geometry, x, y, tolerance))
}

/// Exact geometry/rectangle intersection, boundaries included.
pub fn geometry_intersects_rect(g: &Geometry, rect: &BoundingBox) -> bool {
    if !g.bbox().is_some_and(|b| b.intersects(rect)) {
        return false;
    }
    let edges_hit = |ring: &[Position]| {
        ring.windows(2)
            .any(|w| geom::segment_intersects_rect(&w[0], &w[1], rect))
    };
    match &g.shape {
        Shape::Point(p) => rect.contains_point(p.x, p.y),
        Shape::MultiPoint(ps) => ps.iter().any(|p| rect.contains_point(p.x, p.y)),
        Shape::Polyline(line) => match line.as_slice() {
            [p] => rect.contains_point(p.x, p.y),
            _ => edges_hit(line),
        },
        Shape::Polygon(_) | Shape::MultiPolygon(_) => g.polygons().iter().any(|poly| {
            poly.rings().any(|r| edges_hit(r))
                || rect
                    .corners()
                    .iter()
                    .any(|&(cx, cy)| geom::point_in_polygon(cx, cy, poly))
        }),
    }
}

/// Features whose geometry meets the rectangle.
pub fn brush_map_rect(collection: &FeatureCollection, rect: &BoundingBox) -> Selection {
    select(collection, |f| geometry_intersects_rect(&f.geometry, rect))
}

/// Features whose two attribute values are numbers inside `rect`
/// (inclusive). Features missing either value are never selected.
pub fn brush_data_space(
    collection: &FeatureCollection,
    x_attr: &str,
    y_attr: &str,
    rect: &BoundingBox,
) -> Selection {
    select(collection, |f| {
        match (
            get_number(&f.attributes, x_attr),
            get_number(&f.attributes, y_attr),
        ) {
            (Some(x), Some(y)) => rect.contains_point(x, y),
            _ => false,
        }
    })
}

/// Resolves an event against a collection.
pub fn interact(
    collection: &FeatureCollection,
    event: &InteractionEvent,
) -> Result<Selection, InteractionError> {
    let check = |r: &BoundingBox| {
        if r.width() > 0.0 && r.height() > 0.0 {
            Ok(())
        } else {
            Err(InteractionError::DegenerateBrush)
        }
    };
    match event {
        InteractionEvent::ClickMap { x, y, tolerance } => {
            if tolerance.is_nan() || *tolerance < 0.0 {
                return Err(InteractionError::InvalidTolerance(*tolerance));
            }
            Ok(pick_at_point(collection, *x, *y, *tolerance))
        }
        InteractionEvent::BrushMap(rect) => {
            check(rect)?;
            Ok(brush_map_rect(collection, rect))
        }
        InteractionEvent::BrushData {
            x_attr,
            y_attr,
            rect,
        } => {
            check(rect)?;
            Ok(brush_data_space(collection, x_attr, y_attr, rect))
        }
    }
}

/// Writes `selected` = membership on every feature. The selection may come
/// from any collection sharing the id space, but must name this one.
pub fn apply_selection(
    collection: &FeatureCollection,
    selection: &Selection,
) -> Result<FeatureCollection, ModelError> {
    if selection.collection() != collection.name() {
        return Err(ModelError::CollectionMismatch {
            selection: selection.collection().to_owned(),
            collection: collection.name().to_owned(),
        });
    }
    let rows = collection
        .features()
        .iter()
        .map(|f| {
            let mut update = Attributes::new();
            update.insert(
                "selected".into(),
                AttributeValue::Bool(selection.contains(f.id)),
            );
            Some(update)
        })
        .collect();
    collection.merge_rows(rows)
}

/// Re-targets a selection at another collection with the same id space,
/// dropping ids it lacks.
pub fn transfer_selection(selection: &Selection, target: &FeatureCollection) -> Selection {
    let ids: BTreeSet<FeatureId> = selection
        .ids()
        .iter()
        .copied()
        .filter(|id| target.contains(*id))
        .collect();
    Selection::from_checked(target, ids)
}

type Listener<'a> = Box<dyn FnMut(&Selection) + 'a>;

/// Synchronous dispatcher. Listeners run in registration order on the
/// emitting thread; a panicking listener is counted and skipped.
#[derive(Default)]
pub struct EventBus<'a> {
    listeners: Vec<(EventKind, Listener<'a>)>,
    failures: usize,
}

impl<'a> EventBus<'a> {
    pub fn new() -> Self {
        EventBus {
            listeners: Vec::new(),
            failures: 0,
        }
    }

    pub fn add_listener(&mut self, kind: EventKind, listener: impl FnMut(&Selection) + 'a) {
        self.listeners.push((kind, Box::new(listener)));
    }

    /// Returns how many listeners ran to completion.
    pub fn emit(&mut self, kind: EventKind, selection: &Selection) -> usize {
        let mut delivered = 0;
        for (k, listener) in &mut self.listeners {
            if *k != kind {
                continue;
            }
            match catch_unwind(AssertUnwindSafe(|| listener(selection))) {
                Ok(()) => delivered += 1,
                Err(_) => self.failures += 1,
            }
        }
        delivered
    }

    /// Listener panics caught so far.
    pub fn failures(&self) -> usize {
        self.failures
    }

    pub fn listener_count(&self) -> usize {
        self.listeners.len()
    }
}
