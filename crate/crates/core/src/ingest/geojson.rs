use serde_json::{Map, Number, Value};

use super::{project_geometry, IngestError};
use crate::model::{
    AttributeValue, Attributes, Crs, FeatureCollection, FeatureId, Geometry, Polygon, Position,
    RawFeature, Ring, Shape,
};

#[derive(Clone, Debug, Default)]
pub struct GeoJsonOptions {
    /// Collection name; falls back to the document's "name" member.
    pub name: Option<String>,
    /// Project geographic coordinates into Mercator.
    pub project: bool,
}

/// Reads a GeoJSON FeatureCollection. Coordinates are geographic unless the
/// document carries a "crs-tag" member.
pub fn parse_geojson(
    bytes: &[u8],
    options: &GeoJsonOptions,
) -> Result<FeatureCollection, IngestError> {
    let doc: Value = serde_json::from_slice(bytes)?;
    read_document(&doc, options, false)
}

/// Canonical interchange reader: ids and the crs tag are mandatory.
pub(crate) fn parse_collection_strict(bytes: &[u8]) -> Result<FeatureCollection, IngestError> {
    let doc: Value = serde_json::from_slice(bytes)?;
    read_document(&doc, &GeoJsonOptions::default(), true)
}

fn invalid(msg: impl Into<String>) -> IngestError {
    IngestError::InvalidDocument(msg.into())
}

fn read_document(
    doc: &Value,
    options: &GeoJsonOptions,
    strict: bool,
) -> Result<FeatureCollection, IngestError> {
    let obj = doc
        .as_object()
        .ok_or_else(|| invalid("top level is not an object"))?;
    if obj.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(invalid("expected a FeatureCollection"));
    }
    let crs = match obj.get("crs-tag") {
        Some(tag) => tag
            .as_str()
            .ok_or_else(|| invalid("crs-tag is not a string"))?
            .parse::<Crs>()
            .map_err(invalid)?,
        None if strict => return Err(IngestError::MissingCrsTag),
        None => Crs::Geographic,
    };
    let name = options
        .name
        .clone()
        .or_else(|| obj.get("name").and_then(Value::as_str).map(str::to_owned))
        .unwrap_or_else(|| "collection".to_owned());
    let features = obj
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("missing \"features\" array"))?;

    let mut raw = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let f = f
            .as_object()
            .ok_or_else(|| invalid(format!("feature {i} is not an object")))?;
        let geometry = f
            .get("geometry")
            .filter(|g| !g.is_null())
            .ok_or_else(|| invalid(format!("feature {i} has no geometry")))?;
        let shape = read_shape(geometry)?;
        let attributes = match f.get("properties") {
            Some(Value::Object(props)) => read_map(props),
            Some(Value::Null) | None => Attributes::new(),
            Some(_) => return Err(invalid(format!("feature {i} properties is not an object"))),
        };
        let id = f.get("id").and_then(read_id).or_else(|| {
            if strict {
                None
            } else {
                f.get("properties")?.get("id").and_then(read_id)
            }
        });
        if strict && id.is_none() {
            return Err(IngestError::MissingId(i));
        }
        let mut geometry = Geometry::new(crs, shape);
        if options.project {
            geometry = project_geometry(geometry)?;
        }
        raw.push(RawFeature {
            id,
            geometry,
            attributes,
        });
    }
    let crs = if options.project { Crs::Mercator } else { crs };
    Ok(FeatureCollection::new(name, crs, raw)?)
}

fn read_id(v: &Value) -> Option<FeatureId> {
    match v {
        Value::Number(n) => n.as_u64().map(FeatureId),
        Value::String(s) => s.parse::<u64>().ok().map(FeatureId),
        _ => None,
    }
}

fn read_position(v: &Value) -> Result<Position, IngestError> {
    let arr = v
        .as_array()
        .ok_or_else(|| invalid("position is not an array"))?;
    let num = |i: usize| arr.get(i).and_then(Value::as_f64);
    match (num(0), num(1)) {
        (Some(x), Some(y)) => Ok(Position { x, y, z: num(2) }),
        _ => Err(invalid("position needs two numeric coordinates")),
    }
}

fn read_positions(v: &Value) -> Result<Vec<Position>, IngestError> {
    v.as_array()
        .ok_or_else(|| invalid("expected a position list"))?
        .iter()
        .map(read_position)
        .collect()
}

fn read_polygon(v: &Value) -> Result<Polygon, IngestError> {
    let rings = v
        .as_array()
        .ok_or_else(|| invalid("polygon is not a ring list"))?;
    let mut rings = rings
        .iter()
        .map(read_positions)
        .collect::<Result<Vec<Ring>, _>>()?;
    if rings.is_empty() {
        return Err(invalid("polygon without rings"));
    }
    let exterior = rings.remove(0);
    Ok(Polygon::new(exterior, rings))
}

fn read_shape(g: &Value) -> Result<Shape, IngestError> {
    let kind = g
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| invalid("geometry without type"))?;
    let coords = || {
        g.get("coordinates")
            .ok_or_else(|| invalid("geometry without coordinates"))
    };
    Ok(match kind {
        "Point" => Shape::Point(read_position(coords()?)?),
        "MultiPoint" => Shape::MultiPoint(read_positions(coords()?)?),
        "LineString" => Shape::Polyline(read_positions(coords()?)?),
        "Polygon" => Shape::Polygon(read_polygon(coords()?)?),
        "MultiPolygon" => Shape::MultiPolygon(
            coords()?
                .as_array()
                .ok_or_else(|| invalid("multipolygon is not a polygon list"))?
                .iter()
                .map(read_polygon)
                .collect::<Result<_, _>>()?,
        ),
        other => return Err(IngestError::UnsupportedGeometry(other.to_owned())),
    })
}

fn read_map(obj: &Map<String, Value>) -> Attributes {
    obj.iter()
        .map(|(k, v)| (k.clone(), read_value(v)))
        .collect()
}

fn read_value(v: &Value) -> AttributeValue {
    match v {
        Value::Null => AttributeValue::Null,
        Value::Bool(b) => AttributeValue::Bool(*b),
        Value::Number(n) => n
            .as_f64()
            .map_or(AttributeValue::Null, AttributeValue::Number),
        Value::String(s) => AttributeValue::Text(s.clone()),
        Value::Array(items) => match items
            .iter()
            .map(Value::as_f64)
            .collect::<Option<Vec<f64>>>()
        {
            Some(values) => AttributeValue::Array(values),
            // Heterogeneous arrays are kept verbatim as text.
            None => AttributeValue::Text(v.to_string()),
        },
        Value::Object(m) => AttributeValue::Map(read_map(m)),
    }
}

/// Shortest round-trippable decimal; integral values print without a
/// fraction. Non-finite numbers have no JSON form and become null.
pub(crate) fn number(v: f64) -> Value {
    const EXACT_INT: f64 = 9_007_199_254_740_992.0;
    if !v.is_finite() {
        return Value::Null;
    }
    if v.fract() == 0.0 && v.abs() < EXACT_INT && !(v == 0.0 && v.is_sign_negative()) {
        return Value::Number(Number::from(v as i64));
    }
    Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn position_json(p: &Position) -> Value {
    let mut v = vec![number(p.x), number(p.y)];
    if let Some(z) = p.z {
        v.push(number(z));
    }
    Value::Array(v)
}

fn positions_json(ps: &[Position]) -> Value {
    Value::Array(ps.iter().map(position_json).collect())
}

fn polygon_json(p: &Polygon) -> Value {
    Value::Array(p.rings().map(|r| positions_json(r)).collect())
}

fn shape_json(shape: &Shape) -> Value {
    let (kind, coords) = match shape {
        Shape::Point(p) => ("Point", position_json(p)),
        Shape::MultiPoint(ps) => ("MultiPoint", positions_json(ps)),
        Shape::Polyline(ps) => ("LineString", positions_json(ps)),
        Shape::Polygon(p) => ("Polygon", polygon_json(p)),
        Shape::MultiPolygon(ps) => (
            "MultiPolygon",
            Value::Array(ps.iter().map(polygon_json).collect()),
        ),
    };
    let mut m = Map::new();
    m.insert("type".into(), kind.into());
    m.insert("coordinates".into(), coords);
    Value::Object(m)
}

pub(crate) fn value_json(v: &AttributeValue) -> Value {
    match v {
        AttributeValue::Null => Value::Null,
        AttributeValue::Bool(b) => Value::Bool(*b),
        AttributeValue::Number(n) => number(*n),
        AttributeValue::Text(s) => Value::String(s.clone()),
        AttributeValue::Array(a) => Value::Array(a.iter().map(|x| number(*x)).collect()),
        AttributeValue::Map(m) => map_json(m),
    }
}

fn map_json(m: &Attributes) -> Value {
    Value::Object(m.iter().map(|(k, v)| (k.clone(), value_json(v))).collect())
}

pub(crate) fn collection_to_json(c: &FeatureCollection) -> Value {
    let features = c
        .features()
        .iter()
        .map(|f| {
            let mut m = Map::new();
            m.insert("type".into(), "Feature".into());
            m.insert("id".into(), Value::Number(f.id.0.into()));
            m.insert("geometry".into(), shape_json(&f.geometry.shape));
            m.insert("properties".into(), map_json(&f.attributes));
            Value::Object(m)
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("type".into(), "FeatureCollection".into());
    doc.insert("name".into(), c.name().into());
    doc.insert("crs-tag".into(), c.crs().tag().into());
    doc.insert("features".into(), Value::Array(features));
    Value::Object(doc)
}
