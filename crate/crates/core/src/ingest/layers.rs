use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use super::overpass::{MemberKind, OverpassDocument, Tags};
use super::{assemble_rings, project_forward, IngestError, RingRole};
use crate::model::{
    AttributeValue, Attributes, BoundingBox, Crs, FeatureCollection, FeatureId, Geometry, Polygon,
    Position, RawFeature, Shape,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Layer {
    Surface,
    Parks,
    Water,
    Roads,
    Buildings,
}

impl Layer {
    pub const ALL: [Layer; 5] = [
        Layer::Surface,
        Layer::Parks,
        Layer::Water,
        Layer::Roads,
        Layer::Buildings,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Layer::Surface => "surface",
            Layer::Parks => "parks",
            Layer::Water => "water",
            Layer::Roads => "roads",
            Layer::Buildings => "buildings",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Layer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Layer::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| format!("unknown layer '{s}'"))
    }
}

/// Non-empty set of requested layers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSet(BTreeSet<Layer>);

impl LayerSet {
    pub fn new(layers: impl IntoIterator<Item = Layer>) -> Option<Self> {
        let set: BTreeSet<Layer> = layers.into_iter().collect();
        (!set.is_empty()).then_some(LayerSet(set))
    }

    pub fn all() -> Self {
        LayerSet(Layer::ALL.into_iter().collect())
    }

    pub fn contains(&self, layer: Layer) -> bool {
        self.0.contains(&layer)
    }

    pub fn iter(&self) -> impl Iterator<Item = Layer> + '_ {
        self.0.iter().copied()
    }
}

/// `key=value`, or `key=*` (any value other than "no") when `value` is None.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagRule {
    pub key: String,
    pub value: Option<String>,
}

impl TagRule {
    pub fn any(key: &str) -> Self {
        TagRule {
            key: key.to_owned(),
            value: None,
        }
    }

    pub fn exact(key: &str, value: &str) -> Self {
        TagRule {
            key: key.to_owned(),
            value: Some(value.to_owned()),
        }
    }

    pub fn matches(&self, tags: &Tags) -> bool {
        match (tags.get(&self.key), &self.value) {
            (Some(v), None) => v != "no",
            (Some(v), Some(want)) => v == want,
            (None, _) => false,
        }
    }
}

/// Tag rules deciding which OSM elements land in which layer.
#[derive(Clone, Debug)]
pub struct LayerConfig {
    pub buildings: Vec<TagRule>,
    pub roads: Vec<TagRule>,
    pub parks: Vec<TagRule>,
    pub water: Vec<TagRule>,
}

impl Default for LayerConfig {
    fn default() -> Self {
        LayerConfig {
            buildings: vec![TagRule::any("building")],
            roads: vec![TagRule::any("highway")],
            parks: vec![
                TagRule::exact("leisure", "park"),
                TagRule::exact("landuse", "grass"),
            ],
            water: vec![
                TagRule::exact("natural", "water"),
                TagRule::exact("waterway", "riverbank"),
                TagRule::exact("landuse", "reservoir"),
            ],
        }
    }
}

impl LayerConfig {
    fn rules(&self, layer: Layer) -> &[TagRule] {
        match layer {
            Layer::Buildings => &self.buildings,
            Layer::Roads => &self.roads,
            Layer::Parks => &self.parks,
            Layer::Water => &self.water,
            Layer::Surface => &[],
        }
    }
}

#[derive(Debug)]
pub struct LayerExtraction {
    pub layers: BTreeMap<Layer, FeatureCollection>,
    /// Multipolygon relations whose rings could not be assembled.
    pub dropped_relations: usize,
    /// Relations skipped because a way of the same layer already used the id.
    pub id_collisions: usize,
}

fn tag_value(v: &str) -> AttributeValue {
    match v.parse::<f64>() {
        Ok(n) if n.is_finite() => AttributeValue::Number(n),
        _ => AttributeValue::Text(v.to_owned()),
    }
}

fn tag_attributes(tags: &Tags) -> Attributes {
    tags.iter()
        .map(|(k, v)| (k.clone(), tag_value(v)))
        .collect()
}

fn project_all(coords: &[(f64, f64)]) -> Result<Vec<Position>, IngestError> {
    coords
        .iter()
        .map(|&(lon, lat)| {
            project_forward(lon, lat)
                .map(Position::from)
                .map_err(IngestError::from)
        })
        .collect()
}

/// Splits an Overpass document into per-layer Mercator collections. OSM
/// element ids become feature ids.
pub fn extract_layers(
    doc: &OverpassDocument,
    layers: &LayerSet,
    area: &BoundingBox,
    config: &LayerConfig,
) -> Result<LayerExtraction, IngestError> {
    let mut out = BTreeMap::new();
    let mut dropped_relations = 0;
    let mut id_collisions = 0;

    let mut needs_water = layers.contains(Layer::Water);
    needs_water |= layers.contains(Layer::Surface);
    let mut water: Option<FeatureCollection> = None;

    for layer in [Layer::Buildings, Layer::Parks, Layer::Water, Layer::Roads] {
        if !layers.contains(layer) && !(layer == Layer::Water && needs_water) {
            continue;
        }
        let rules = config.rules(layer);
        let matches = |tags: &Tags| rules.iter().any(|r| r.matches(tags));
        let mut features = Vec::new();
        let mut used: HashSet<u64> = HashSet::new();

        for (&id, way) in &doc.ways {
            if !matches(&way.tags) {
                continue;
            }
            let coords = project_all(&doc.way_coordinates(way))?;
            let shape = if layer == Layer::Roads {
                Shape::Polyline(coords)
            } else if way.is_closed() {
                Shape::Polygon(Polygon::new(coords, Vec::new()))
            } else {
                continue;
            };
            used.insert(id);
            features.push(
                RawFeature::new(
                    Geometry::new(Crs::Mercator, shape),
                    tag_attributes(&way.tags),
                )
                .with_id(id),
            );
        }

        if layer != Layer::Roads {
            for (&id, rel) in &doc.relations {
                if rel.tags.get("type").map(String::as_str) != Some("multipolygon")
                    || !matches(&rel.tags)
                {
                    continue;
                }
                if used.contains(&id) {
                    id_collisions += 1;
                    continue;
                }
                let mut members = Vec::new();
                for m in rel.members.iter().filter(|m| m.kind == MemberKind::Way) {
                    if let Some(way) = doc.ways.get(&m.reference) {
                        members.push((
                            project_all(&doc.way_coordinates(way))?,
                            RingRole::from_osm(&m.role),
                        ));
                    }
                }
                match assemble_rings(&members) {
                    Ok(shape) => {
                        let mut attrs = tag_attributes(&rel.tags);
                        attrs.remove("type");
                        features.push(
                            RawFeature::new(Geometry::new(Crs::Mercator, shape), attrs).with_id(id),
                        );
                    }
                    Err(_) => dropped_relations += 1,
                }
            }
        }

        let collection = FeatureCollection::new(layer.name(), Crs::Mercator, features)?;
        if layer == Layer::Water {
            water = Some(collection.clone());
        }
        if layers.contains(layer) {
            out.insert(layer, collection);
        }
    }

    if layers.contains(Layer::Surface) {
        let surface = surface_polygon(area, water.as_ref())?;
        let feature = RawFeature::new(
            Geometry::polygon(Crs::Mercator, surface),
            Attributes::from([("layer".to_owned(), AttributeValue::from("surface"))]),
        )
        .with_id(FeatureId(0));
        out.insert(
            Layer::Surface,
            FeatureCollection::new("surface", Crs::Mercator, vec![feature])?,
        );
    }

    Ok(LayerExtraction {
        layers: out,
        dropped_relations,
        id_collisions,
    })
}

/// The area rectangle with water exteriors cut out as holes. Only water
/// rings lying inside the rectangle and not overlapping an earlier hole's
/// bounds are used, so the holes never intersect.
fn surface_polygon(
    area: &BoundingBox,
    water: Option<&FeatureCollection>,
) -> Result<Polygon, IngestError> {
    let (x0, y0) = project_forward(area.min_x, area.min_y)?;
    let (x1, y1) = project_forward(area.max_x, area.max_y)?;
    let rect = BoundingBox::new(x0, y0, x1, y1);
    let mut polygon = rect.to_polygon();
    let mut taken: Vec<BoundingBox> = Vec::new();
    for f in water.map(|w| w.features()).unwrap_or_default() {
        for p in f.geometry.polygons() {
            let Some(b) = Geometry::polygon(Crs::Mercator, p.clone()).bbox() else {
                continue;
            };
            let strictly_inside = b.min_x > rect.min_x
                && b.min_y > rect.min_y
                && b.max_x < rect.max_x
                && b.max_y < rect.max_y;
            if strictly_inside && !taken.iter().any(|t| t.intersects(&b)) {
                taken.push(b);
                polygon.holes.push(p.exterior.clone());
            }
        }
    }
    Ok(polygon.normalized())
}
