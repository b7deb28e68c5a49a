use std::collections::{BTreeMap, HashMap};

use serde::Deserialize;

use super::IngestError;

pub type Tags = BTreeMap<String, String>;

#[derive(Clone, Debug, PartialEq)]
pub struct Way {
    pub nodes: Vec<u64>,
    pub tags: Tags,
}

impl Way {
    pub fn is_closed(&self) -> bool {
        self.nodes.len() >= 4 && self.nodes.first() == self.nodes.last()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MemberKind {
    Node,
    Way,
    Relation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub kind: MemberKind,
    pub reference: u64,
    pub role: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Relation {
    pub members: Vec<Member>,
    pub tags: Tags,
}

/// Indexed Overpass response. Every node referenced by a retained way is
/// present in `nodes`.
#[derive(Clone, Debug, Default)]
pub struct OverpassDocument {
    /// node id -> (lon, lat)
    pub nodes: HashMap<u64, (f64, f64)>,
    pub ways: BTreeMap<u64, Way>,
    pub relations: BTreeMap<u64, Relation>,
    /// Ways dropped because they referenced absent nodes.
    pub dropped_ways: usize,
    /// Elements of unknown type, or nodes without coordinates.
    pub ignored_elements: usize,
}

impl OverpassDocument {
    /// Resolved (lon, lat) coordinates of a retained way.
    pub fn way_coordinates(&self, way: &Way) -> Vec<(f64, f64)> {
        way.nodes.iter().map(|n| self.nodes[n]).collect()
    }
}

#[derive(Deserialize)]
struct RawResponse {
    elements: Option<Vec<RawElement>>,
}

#[derive(Deserialize)]
struct RawElement {
    #[serde(rename = "type")]
    kind: String,
    id: u64,
    lat: Option<f64>,
    lon: Option<f64>,
    #[serde(default)]
    nodes: Vec<u64>,
    #[serde(default)]
    members: Vec<RawMember>,
    #[serde(default)]
    tags: Tags,
}

#[derive(Deserialize)]
struct RawMember {
    #[serde(rename = "type")]
    kind: String,
    #[serde(rename = "ref")]
    reference: u64,
    #[serde(default)]
    role: String,
}

pub fn parse_overpass(bytes: &[u8]) -> Result<OverpassDocument, IngestError> {
    let raw: RawResponse = serde_json::from_slice(bytes)?;
    let elements = raw.elements.ok_or(IngestError::MissingElementsArray)?;
    let mut doc = OverpassDocument::default();
    let mut pending_ways = Vec::new();
    for el in elements {
        match el.kind.as_str() {
            "node" => match (el.lon, el.lat) {
                (Some(lon), Some(lat)) => {
                    doc.nodes.insert(el.id, (lon, lat));
                }
                _ => doc.ignored_elements += 1,
            },
            "way" => pending_ways.push((
                el.id,
                Way {
                    nodes: el.nodes,
                    tags: el.tags,
                },
            )),
            "relation" => {
                let members = el
                    .members
                    .into_iter()
                    .filter_map(|m| {
                        let kind = match m.kind.as_str() {
                            "node" => MemberKind::Node,
                            "way" => MemberKind::Way,
                            "relation" => MemberKind::Relation,
                            _ => return None,
                        };
                        Some(Member {
                            kind,
                            reference: m.reference,
                            role: m.role,
                        })
                    })
                    .collect();
                doc.relations.insert(
                    el.id,
                    Relation {
                        members,
                        tags: el.tags,
                    },
                );
            }
            _ => doc.ignored_elements += 1,
        }
    }
    // Nodes may follow the ways that use them, so resolve afterwards.
    for (id, way) in pending_ways {
        if !way.nodes.is_empty() && way.nodes.iter().all(|n| doc.nodes.contains_key(n)) {
            doc.ways.insert(id, way);
        } else {
            doc.dropped_ways += 1;
        }
    }
    Ok(doc)
}
