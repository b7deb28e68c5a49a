use std::fmt;
use std::str::FromStr;

use super::rtree::SpatialIndex;
use super::{same_crs, SpatialError};
use crate::exec::{self, ExecMode};
use crate::geom;
use crate::model::{
    get_number, AttributeValue, Attributes, BoundingBox, FeatureCollection, FeatureId,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JoinKind {
    /// Join feature falls inside a root polygon.
    Join,
    /// Join feature is assigned to the nearest root within a radius.
    Nearest,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JoinPredicate {
    pub kind: JoinKind,
    pub radius: Option<f64>,
}

impl JoinPredicate {
    pub fn join() -> Self {
        JoinPredicate {
            kind: JoinKind::Join,
            radius: None,
        }
    }

    pub fn nearest(radius: f64) -> Self {
        JoinPredicate {
            kind: JoinKind::Nearest,
            radius: Some(radius),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AggregateFn {
    Count,
    Min,
    Max,
    Avg,
    Sum,
}

impl AggregateFn {
    pub fn name(self) -> &'static str {
        match self {
            AggregateFn::Count => "count",
            AggregateFn::Min => "min",
            AggregateFn::Max => "max",
            AggregateFn::Avg => "avg",
            AggregateFn::Sum => "sum",
        }
    }
}

impl fmt::Display for AggregateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AggregateFn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "count" => AggregateFn::Count,
            "min" => AggregateFn::Min,
            "max" => AggregateFn::Max,
            "avg" => AggregateFn::Avg,
            "sum" => AggregateFn::Sum,
            other => return Err(format!("unknown aggregate '{other}'")),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateSpec {
    /// Join-side attribute path; unused by `count`.
    pub column: String,
    pub function: AggregateFn,
    pub result_field: String,
}

impl AggregateSpec {
    pub fn new(function: AggregateFn, column: &str, result_field: &str) -> Self {
        AggregateSpec {
            column: column.to_owned(),
            function,
            result_field: result_field.to_owned(),
        }
    }

    pub fn count(result_field: &str) -> Self {
        AggregateSpec::new(AggregateFn::Count, "", result_field)
    }

    /// Attribute path the result is written to.
    pub fn output_path(&self) -> String {
        format!("sjoin.{}.{}", self.function, self.result_field)
    }
}

#[derive(Clone, Copy, Default)]
struct Accumulator {
    count: usize,
    usable: usize,
    sum: f64,
    min: f64,
    max: f64,
}

impl Accumulator {
    fn push(&mut self, value: Option<f64>) {
        self.count += 1;
        let Some(v) = value.filter(|v| !v.is_nan()) else {
            return;
        };
        if self.usable == 0 {
            self.min = v;
            self.max = v;
        } else {
            self.min = self.min.min(v);
            self.max = self.max.max(v);
        }
        self.usable += 1;
        self.sum += v;
    }

    fn result(&self, function: AggregateFn) -> AttributeValue {
        if function == AggregateFn::Count {
            return AttributeValue::Number(self.count as f64);
        }
        if self.usable == 0 {
            return AttributeValue::Null;
        }
        AttributeValue::Number(match function {
            AggregateFn::Min => self.min,
            AggregateFn::Max => self.max,
            AggregateFn::Sum => self.sum,
            AggregateFn::Avg => self.sum / self.usable as f64,
            AggregateFn::Count => unreachable!(),
        })
    }
}

/// [`spatial_join_with`] in the default execution mode.
pub fn spatial_join(
    root: &FeatureCollection,
    join: &FeatureCollection,
    predicate: JoinPredicate,
    aggregates: &[AggregateSpec],
) -> Result<FeatureCollection, SpatialError> {
    spatial_join_with(ExecMode::default(), root, join, predicate, aggregates)
}

/// Aggregates join-side attributes onto root features.
///
/// Matching runs in parallel over join features; per root, values are then
/// reduced in ascending join-feature id order, so the result does not depend
/// on the execution mode or on the order of `join`.
pub fn spatial_join_with(
    mode: ExecMode,
    root: &FeatureCollection,
    join: &FeatureCollection,
    predicate: JoinPredicate,
    aggregates: &[AggregateSpec],
) -> Result<FeatureCollection, SpatialError> {
    same_crs(root.crs(), join.crs())?;
    let radius = match (predicate.kind, predicate.radius) {
        (JoinKind::Nearest, None) => return Err(SpatialError::MissingRadius),
        (_, Some(r)) if !(r > 0.0 && r.is_finite()) => return Err(SpatialError::InvalidRadius(r)),
        (_, r) => r.unwrap_or(0.0),
    };

    let join_features = join.features();
    // Root positions matched by each join feature.
    let per_join: Vec<Vec<usize>> = match predicate.kind {
        JoinKind::Join => {
            if let Some(f) = root.features().iter().find(|f| !f.geometry.is_areal()) {
                return Err(SpatialError::NonPolygonRoot(f.id));
            }
            let index = SpatialIndex::build(root);
            exec::map_slice(mode, join_features, |f| {
                let p = geom::representative_point(&f.geometry);
                let mut hits = Vec::new();
                index.visit(&BoundingBox::from_point(p.x, p.y), |pos| {
                    if geom::point_in_geometry(p.x, p.y, &root.features()[pos].geometry) {
                        hits.push(pos);
                    }
                });
                hits
            })
        }
        JoinKind::Nearest => {
            let reps: Vec<_> = exec::map_slice(mode, root.features(), |f| {
                geom::representative_point(&f.geometry)
            });
            let index = SpatialIndex::from_boxes(
                reps.iter()
                    .enumerate()
                    .map(|(i, p)| (BoundingBox::from_point(p.x, p.y), i))
                    .collect(),
            );
            let root_ids: Vec<FeatureId> = root.ids().collect();
            exec::map_slice(mode, join_features, |f| {
                let p = geom::representative_point(&f.geometry);
                let window = BoundingBox::from_point(p.x, p.y).expanded(radius);
                let mut best: Option<(f64, FeatureId, usize)> = None;
                index.visit(&window, |pos| {
                    let d = p.distance(&reps[pos]);
                    if d <= radius {
                        let cand = (d, root_ids[pos], pos);
                        if best.is_none_or(|b| (cand.0, cand.1) < (b.0, b.1)) {
                            best = Some(cand);
                        }
                    }
                });
                best.into_iter().map(|b| b.2).collect()
            })
        }
    };

    // Aggregate inputs of matched join features, one row of `width` per feature.
    let columns: Vec<Option<&str>> = aggregates
        .iter()
        .map(|a| (a.function != AggregateFn::Count).then_some(a.column.as_str()))
        .collect();
    let width = columns.len();
    let values: Vec<Option<f64>> = exec::map_indexed(mode, join_features.len() * width, |i| {
        let (jp, k) = (i / width, i % width);
        if per_join[jp].is_empty() {
            return None;
        }
        columns[k].and_then(|c| get_number(&join_features[jp].attributes, c))
    });

    // Bucket matches by root, then order each bucket by join id.
    let mut starts = vec![0usize; root.len() + 1];
    for hits in &per_join {
        for &rp in hits {
            starts[rp + 1] += 1;
        }
    }
    for i in 0..root.len() {
        starts[i + 1] += starts[i];
    }
    let mut fill = starts.clone();
    let mut matches = vec![(FeatureId(0), 0usize); starts[root.len()]];
    for (jp, hits) in per_join.iter().enumerate() {
        for &rp in hits {
            matches[fill[rp]] = (join_features[jp].id, jp);
            fill[rp] += 1;
        }
    }
    let mut buckets: Vec<&mut [(FeatureId, usize)]> = Vec::with_capacity(root.len());
    let mut rest = matches.as_mut_slice();
    for rp in 0..root.len() {
        let (head, tail) = rest.split_at_mut(starts[rp + 1] - starts[rp]);
        buckets.push(head);
        rest = tail;
    }
    exec::for_each_mut(mode, &mut buckets, |b| b.sort_unstable());

    let rows = exec::map_indexed(mode, root.len(), |rp| {
        let run = &matches[starts[rp]..starts[rp + 1]];
        let mut update = Attributes::new();
        for (k, spec) in aggregates.iter().enumerate() {
            let mut acc = Accumulator::default();
            for &(_, jp) in run {
                acc.push(values[jp * width + k]);
            }
            update.insert(spec.output_path(), acc.result(spec.function));
        }
        Some(update)
    });
    Ok(root.merge_rows(rows)?)
}
