use std::collections::{BTreeSet, HashMap};

use super::{set_path, valid_path, Attributes, BoundingBox, Crs, FeatureId, Geometry, ModelError};

#[derive(Clone, Debug, PartialEq)]
pub struct Feature {
    pub id: FeatureId,
    pub geometry: Geometry,
    pub attributes: Attributes,
}

impl Feature {
    pub fn new(id: impl Into<FeatureId>, geometry: Geometry, attributes: Attributes) -> Self {
        Feature {
            id: id.into(),
            geometry,
            attributes,
        }
    }

    pub fn attribute(&self, path: &str) -> Option<&super::AttributeValue> {
        super::get_path(&self.attributes, path)
    }
}

/// Collection input: a feature whose id may still be unassigned.
#[derive(Clone, Debug, PartialEq)]
pub struct RawFeature {
    pub id: Option<FeatureId>,
    pub geometry: Geometry,
    pub attributes: Attributes,
}

impl RawFeature {
    pub fn new(geometry: Geometry, attributes: Attributes) -> Self {
        RawFeature {
            id: None,
            geometry,
            attributes,
        }
    }

    pub fn with_id(mut self, id: impl Into<FeatureId>) -> Self {
        self.id = Some(id.into());
        self
    }
}

impl From<Feature> for RawFeature {
    fn from(f: Feature) -> Self {
        RawFeature {
            id: Some(f.id),
            geometry: f.geometry,
            attributes: f.attributes,
        }
    }
}

/// A named, id-indexed, immutable set of features sharing one CRS.
#[derive(Clone, Debug)]
pub struct FeatureCollection {
    name: String,
    crs: Crs,
    features: Vec<Feature>,
    index: HashMap<FeatureId, usize>,
}

impl PartialEq for FeatureCollection {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.crs == other.crs && self.features == other.features
    }
}

impl FeatureCollection {
    /// Builds a collection, assigning missing ids from max(present) + 1
    /// (from 0 when no id is present), normalizing ring closure and
    /// orientation, and rejecting duplicate ids, mixed CRS tags and
    /// otherwise invalid geometry.
    pub fn new(
        name: impl Into<String>,
        crs: Crs,
        features: Vec<RawFeature>,
    ) -> Result<Self, ModelError> {
        let mut next = features
            .iter()
            .filter_map(|f| f.id)
            .map(|id| id.0 + 1)
            .max()
            .unwrap_or(0);
        let mut index = HashMap::with_capacity(features.len());
        let mut out = Vec::with_capacity(features.len());
        for raw in features {
            let id = match raw.id {
                Some(id) => id,
                None => {
                    let id = FeatureId(next);
                    next += 1;
                    id
                }
            };
            if raw.geometry.crs != crs {
                return Err(ModelError::MixedCrs {
                    id,
                    expected: crs,
                    found: raw.geometry.crs,
                });
            }
            if index.insert(id, out.len()).is_some() {
                return Err(ModelError::DuplicateId(id));
            }
            if let Some(bad) = raw.attributes.keys().find(|k| k.is_empty()) {
                return Err(ModelError::InvalidAttributeName(bad.clone()));
            }
            let geometry = raw.geometry.normalized();
            let issues = geometry.validate();
            if !issues.is_empty() {
                return Err(ModelError::InvalidGeometry { id, issues });
            }
            out.push(Feature {
                id,
                geometry,
                attributes: raw.attributes,
            });
        }
        Ok(FeatureCollection {
            name: name.into(),
            crs,
            features: out,
            index,
        })
    }

    pub fn empty(name: impl Into<String>, crs: Crs) -> Self {
        FeatureCollection {
            name: name.into(),
            crs,
            features: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Rebuilds a collection from features already known to satisfy every
    /// invariant (taken from another valid collection).
    pub(crate) fn from_valid(name: String, crs: Crs, features: Vec<Feature>) -> Self {
        let index = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.id, i))
            .collect();
        FeatureCollection {
            name,
            crs,
            features,
            index,
        }
    }

    /// Same name and CRS, given subset of this collection's features.
    pub(crate) fn derive(&self, features: Vec<Feature>) -> Self {
        Self::from_valid(self.name.clone(), self.crs, features)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn crs(&self) -> Crs {
        self.crs
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn get(&self, id: FeatureId) -> Option<&Feature> {
        self.index.get(&id).map(|&i| &self.features[i])
    }

    pub fn position(&self, id: FeatureId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn contains(&self, id: FeatureId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = FeatureId> + '_ {
        self.features.iter().map(|f| f.id)
    }

    pub fn into_features(self) -> Vec<Feature> {
        self.features
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Applies one attribute update per feature, aligned with feature order.
    /// `None` leaves the feature untouched.
    pub(crate) fn merge_rows(&self, rows: Vec<Option<Attributes>>) -> Result<Self, ModelError> {
        debug_assert_eq!(rows.len(), self.features.len());
        let mut features = self.features.clone();
        for (feature, row) in features.iter_mut().zip(rows) {
            if let Some(update) = row {
                apply_update(&mut feature.attributes, update)?;
            }
        }
        Ok(self.derive(features))
    }
}

/// Infers the collection CRS from its first feature (Mercator when empty).
pub fn make_collection(
    name: impl Into<String>,
    features: Vec<RawFeature>,
) -> Result<FeatureCollection, ModelError> {
    let crs = features.first().map_or(Crs::Mercator, |f| f.geometry.crs);
    FeatureCollection::new(name, crs, features)
}

/// Union of old and new attributes per feature, new entries winning.
/// Dotted names write into nested maps.
pub fn merge_attributes(
    collection: &FeatureCollection,
    updates: &HashMap<FeatureId, Attributes>,
) -> Result<FeatureCollection, ModelError> {
    let mut rows: Vec<Option<Attributes>> = vec![None; collection.len()];
    for (id, update) in updates {
        let pos = collection.position(*id).ok_or(ModelError::UnknownId(*id))?;
        rows[pos] = Some(update.clone());
    }
    collection.merge_rows(rows)
}

fn apply_update(attrs: &mut Attributes, update: Attributes) -> Result<(), ModelError> {
    for (name, value) in update {
        if !valid_path(&name) {
            return Err(ModelError::InvalidAttributeName(name));
        }
        set_path(attrs, &name, value);
    }
    Ok(())
}

/// Tight bounds over every coordinate of a non-empty collection.
pub fn bbox(collection: &FeatureCollection) -> Result<BoundingBox, ModelError> {
    collection
        .features()
        .iter()
        .filter_map(|f| f.geometry.bbox())
        .reduce(|a, b| a.union(&b))
        .ok_or(ModelError::EmptyCollection)
}

/// A set of feature ids scoped to one collection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selection {
    collection: String,
    ids: BTreeSet<FeatureId>,
}

impl Selection {
    /// Fails with `UnknownId` when an id is not in `collection`.
    pub fn new(
        collection: &FeatureCollection,
        ids: impl IntoIterator<Item = FeatureId>,
    ) -> Result<Self, ModelError> {
        let ids: BTreeSet<FeatureId> = ids.into_iter().collect();
        if let Some(missing) = ids.iter().find(|id| !collection.contains(**id)) {
            return Err(ModelError::UnknownId(*missing));
        }
        Ok(Selection {
            collection: collection.name().to_owned(),
            ids,
        })
    }

    pub(crate) fn from_checked(collection: &FeatureCollection, ids: BTreeSet<FeatureId>) -> Self {
        Selection {
            collection: collection.name().to_owned(),
            ids,
        }
    }

    pub fn empty(collection: &FeatureCollection) -> Self {
        Selection {
            collection: collection.name().to_owned(),
            ids: BTreeSet::new(),
        }
    }

    pub fn collection(&self) -> &str {
        &self.collection
    }

    pub fn ids(&self) -> &BTreeSet<FeatureId> {
        &self.ids
    }

    pub fn contains(&self, id: FeatureId) -> bool {
        self.ids.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn is_subset(&self, other: &Selection) -> bool {
        self.ids.is_subset(&other.ids)
    }
}
