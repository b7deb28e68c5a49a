use std::collections::BTreeMap;

/// Named attribute map. Ordered so that serialization is deterministic.
pub type Attributes = BTreeMap<String, AttributeValue>;

#[derive(Clone, Debug, PartialEq, Default)]
pub enum AttributeValue {
    #[default]
    Null,
    Bool(bool),
    Number(f64),
    Text(String),
    /// Homogeneous float series, e.g. one value per year.
    Array(Vec<f64>),
    Map(Attributes),
}

impl AttributeValue {
    pub fn is_null(&self) -> bool {
        matches!(self, AttributeValue::Null)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttributeValue::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_array(&self) -> Option<&[f64]> {
        match self {
            AttributeValue::Array(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            AttributeValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_map(&self) -> Option<&Attributes> {
        match self {
            AttributeValue::Map(m) => Some(m),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            AttributeValue::Null => "null",
            AttributeValue::Bool(_) => "boolean",
            AttributeValue::Number(_) => "number",
            AttributeValue::Text(_) => "text",
            AttributeValue::Array(_) => "number-array",
            AttributeValue::Map(_) => "map",
        }
    }
}

impl From<f64> for AttributeValue {
    fn from(v: f64) -> Self {
        AttributeValue::Number(v)
    }
}

impl From<i32> for AttributeValue {
    fn from(v: i32) -> Self {
        AttributeValue::Number(v.into())
    }
}

impl From<bool> for AttributeValue {
    fn from(v: bool) -> Self {
        AttributeValue::Bool(v)
    }
}

impl From<&str> for AttributeValue {
    fn from(v: &str) -> Self {
        AttributeValue::Text(v.to_owned())
    }
}

impl From<String> for AttributeValue {
    fn from(v: String) -> Self {
        AttributeValue::Text(v)
    }
}

impl From<Vec<f64>> for AttributeValue {
    fn from(v: Vec<f64>) -> Self {
        AttributeValue::Array(v)
    }
}

impl From<Attributes> for AttributeValue {
    fn from(v: Attributes) -> Self {
        AttributeValue::Map(v)
    }
}

/// Looks up a dotted path ("sjoin.count.noise") through nested maps.
pub fn get_path<'a>(attrs: &'a Attributes, path: &str) -> Option<&'a AttributeValue> {
    let mut segments = path.split('.');
    let mut current = attrs.get(segments.next()?)?;
    for seg in segments {
        current = current.as_map()?.get(seg)?;
    }
    Some(current)
}

/// Numeric value at a dotted path, if present and a number.
pub fn get_number(attrs: &Attributes, path: &str) -> Option<f64> {
    get_path(attrs, path).and_then(AttributeValue::as_f64)
}

pub(crate) fn valid_path(path: &str) -> bool {
    !path.is_empty() && path.split('.').all(|s| !s.is_empty())
}

/// Writes `value` at a dotted path, creating intermediate maps and replacing
/// any non-map value found along the way. The path must be valid.
pub(crate) fn set_path(attrs: &mut Attributes, path: &str, value: AttributeValue) {
    match path.split_once('.') {
        None => {
            attrs.insert(path.to_owned(), value);
        }
        Some((head, rest)) => {
            let slot = attrs
                .entry(head.to_owned())
                .or_insert_with(|| AttributeValue::Map(Attributes::new()));
            if !matches!(slot, AttributeValue::Map(_)) {
                *slot = AttributeValue::Map(Attributes::new());
            }
            if let AttributeValue::Map(inner) = slot {
                set_path(inner, rest, value);
            }
        }
    }
}

/// Convenience constructor for attribute maps in tests and fixtures.
#[macro_export]
macro_rules! attrs {
    () => { $crate::model::Attributes::new() };
    ($($key:expr => $value:expr),+ $(,)?) => {{
        let mut m = $crate::model::Attributes::new();
        $( m.insert(String::from($key), $crate::model::AttributeValue::from($value)); )+
        m
    }};
}
