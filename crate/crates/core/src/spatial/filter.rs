use std::cmp::Ordering;
use std::fmt;

use super::{same_crs, SpatialError};
use crate::geom;
use crate::model::{
    get_path, AttributeValue, BoundingBox, Crs, Feature, FeatureCollection, Polygon,
};

/// Area of interest for [`filter_where`].
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Box { crs: Crs, bbox: BoundingBox },
    Polygon { crs: Crs, polygon: Polygon },
}

impl Region {
    pub fn crs(&self) -> Crs {
        match self {
            Region::Box { crs, .. } | Region::Polygon { crs, .. } => *crs,
        }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Region::Box { bbox, .. } => bbox.contains_point(x, y),
            Region::Polygon { polygon, .. } => geom::point_in_polygon(x, y, polygon),
        }
    }
}

/// Features whose representative point lies inside `region` (boundary
/// included).
pub fn filter_where(
    collection: &FeatureCollection,
    region: &Region,
) -> Result<FeatureCollection, SpatialError> {
    same_crs(collection.crs(), region.crs())?;
    Ok(retain(collection, |f| {
        let p = geom::representative_point(&f.geometry);
        region.contains(p.x, p.y)
    }))
}

fn retain(collection: &FeatureCollection, keep: impl Fn(&Feature) -> bool) -> FeatureCollection {
    collection.derive(
        collection
            .features()
            .iter()
            .filter(|f| keep(f))
            .cloned()
            .collect(),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub enum CompareOp {
    Eq(AttributeValue),
    Ne(AttributeValue),
    Lt(AttributeValue),
    Le(AttributeValue),
    Gt(AttributeValue),
    Ge(AttributeValue),
    In(Vec<AttributeValue>),
}

/// One attribute test; a feature lacking the column fails every operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub column: String,
    pub op: CompareOp,
}

fn order(a: &AttributeValue, b: &AttributeValue) -> Option<Ordering> {
    match (a, b) {
        (AttributeValue::Number(x), AttributeValue::Number(y)) => x.partial_cmp(y),
        (AttributeValue::Text(x), AttributeValue::Text(y)) => Some(x.cmp(y)),
        (AttributeValue::Bool(x), AttributeValue::Bool(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

impl Comparison {
    pub fn new(column: &str, op: CompareOp) -> Self {
        Comparison {
            column: column.to_owned(),
            op,
        }
    }

    pub fn matches(&self, feature: &Feature) -> bool {
        let Some(value) = get_path(&feature.attributes, &self.column).filter(|v| !v.is_null())
        else {
            return false;
        };
        let cmp = |rhs: &AttributeValue| order(value, rhs);
        match &self.op {
            CompareOp::Eq(v) => cmp(v) == Some(Ordering::Equal),
            CompareOp::Ne(v) => cmp(v) != Some(Ordering::Equal),
            CompareOp::Lt(v) => cmp(v) == Some(Ordering::Less),
            CompareOp::Le(v) => matches!(cmp(v), Some(Ordering::Less | Ordering::Equal)),
            CompareOp::Gt(v) => cmp(v) == Some(Ordering::Greater),
            CompareOp::Ge(v) => matches!(cmp(v), Some(Ordering::Greater | Ordering::Equal)),
            CompareOp::In(set) => set.iter().any(|v| cmp(v) == Some(Ordering::Equal)),
        }
    }

    /// Parses `column<op>value` with op one of `= != < <= > >=`, or
    /// `column in a,b,c`. Values that parse as numbers compare numerically.
    pub fn parse(text: &str) -> Result<Comparison, String> {
        fn value(s: &str) -> AttributeValue {
            let s = s.trim();
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => AttributeValue::Number(v),
                _ => match s {
                    "true" => AttributeValue::Bool(true),
                    "false" => AttributeValue::Bool(false),
                    _ => AttributeValue::Text(s.to_owned()),
                },
            }
        }
        if let Some((column, set)) = text.split_once(" in ") {
            let column = column.trim();
            if column.is_empty() {
                return Err(format!("missing column in '{text}'"));
            }
            return Ok(Comparison::new(
                column,
                CompareOp::In(set.split(',').map(value).collect()),
            ));
        }
        let at = text
            .find(['=', '!', '<', '>'])
            .ok_or_else(|| format!("no comparison operator in '{text}'"))?;
        let (column, rest) = text.split_at(at);
        let column = column.trim();
        if column.is_empty() {
            return Err(format!("missing column in '{text}'"));
        }
        let (op, rhs): (fn(AttributeValue) -> CompareOp, &str) =
            if let Some(r) = rest.strip_prefix("!=") {
                (CompareOp::Ne, r)
            } else if let Some(r) = rest.strip_prefix("<=") {
                (CompareOp::Le, r)
            } else if let Some(r) = rest.strip_prefix(">=") {
                (CompareOp::Ge, r)
            } else if let Some(r) = rest.strip_prefix("==").or_else(|| rest.strip_prefix('=')) {
                (CompareOp::Eq, r)
            } else if let Some(r) = rest.strip_prefix('<') {
                (CompareOp::Lt, r)
            } else if let Some(r) = rest.strip_prefix('>') {
                (CompareOp::Gt, r)
            } else {
                return Err(format!("bad operator in '{text}'"));
            };
        Ok(Comparison::new(column, op(value(rhs))))
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &AttributeValue| match v {
            AttributeValue::Number(n) => n.to_string(),
            AttributeValue::Text(t) => t.clone(),
            AttributeValue::Bool(b) => b.to_string(),
            other => other.type_name().to_owned(),
        };
        let (op, rhs) = match &self.op {
            CompareOp::Eq(v) => ("=", show(v)),
            CompareOp::Ne(v) => ("!=", show(v)),
            CompareOp::Lt(v) => ("<", show(v)),
            CompareOp::Le(v) => ("<=", show(v)),
            CompareOp::Gt(v) => (">", show(v)),
            CompareOp::Ge(v) => (">=", show(v)),
            CompareOp::In(set) => (" in ", set.iter().map(show).collect::<Vec<_>>().join(",")),
        };
        write!(f, "{}{op}{rhs}", self.column)
    }
}

/// Conjunction of `predicates`; an empty list keeps everything.
pub fn filter_what(collection: &FeatureCollection, predicates: &[Comparison]) -> FeatureCollection {
    retain(collection, |f| predicates.iter().all(|p| p.matches(f)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemporalSpec {
    /// Numeric timestamp attribute (seconds since epoch).
    pub column: String,
    /// Keeps timestamps in the half-open interval (t0, t1].
    pub range: Option<(f64, f64)>,
    /// Bin width in seconds.
    pub bin: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TemporalOutput {
    Filtered(FeatureCollection),
    /// Contiguous bins [start, start + bin), empty bins included.
    Bins(Vec<(f64, FeatureCollection)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemporalSlice {
    pub output: TemporalOutput,
    /// Features dropped for lacking a numeric timestamp.
    pub missing: usize,
}

/// Range filter and/or binning over a timestamp column. Bins are anchored
/// at t0 when a range is given, otherwise at the smallest timestamp.
pub fn slice_when(
    collection: &FeatureCollection,
    spec: &TemporalSpec,
) -> Result<TemporalSlice, SpatialError> {
    if let Some((t0, t1)) = spec.range {
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(SpatialError::InvalidRange);
        }
    }
    if let Some(bin) = spec.bin {
        if !(bin.is_finite() && bin > 0.0) {
            return Err(SpatialError::InvalidRange);
        }
    }
    let mut missing = 0;
    let mut kept: Vec<(f64, &Feature)> = Vec::new();
    for f in collection.features() {
        let Some(t) =
            crate::model::get_number(&f.attributes, &spec.column).filter(|t| t.is_finite())
        else {
            missing += 1;
            continue;
        };
        if spec.range.is_none_or(|(t0, t1)| t > t0 && t <= t1) {
            kept.push((t, f));
        }
    }
    let output = match spec.bin {
        None => TemporalOutput::Filtered(
            collection.derive(kept.into_iter().map(|(_, f)| f.clone()).collect()),
        ),
        Some(bin) => {
            let anchor = match spec.range {
                Some((t0, _)) => Some(t0),
                None => kept.iter().map(|k| k.0).reduce(f64::min),
            };
            let mut bins: Vec<Vec<Feature>> = Vec::new();
            if let Some(anchor) = anchor {
                for (t, f) in &kept {
                    let k = ((t - anchor) / bin).floor() as usize;
                    if bins.len() <= k {
                        bins.resize_with(k + 1, Vec::new);
                    }
                    bins[k].push((*f).clone());
                }
            }
            let anchor = anchor.unwrap_or(0.0);
            TemporalOutput::Bins(
                bins.into_iter()
                    .enumerate()
                    .map(|(k, fs)| (anchor + k as f64 * bin, collection.derive(fs)))
                    .collect(),
            )
        }
    };
    Ok(TemporalSlice { output, missing })
}
