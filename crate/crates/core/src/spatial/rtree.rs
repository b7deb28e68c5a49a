use crate::model::{BoundingBox, FeatureCollection, FeatureId};

const FAN_OUT: usize = 16;

#[derive(Clone, Copy, Debug)]
struct Node {
    bbox: BoundingBox,
    /// Child range in the level below (or in `entries` for the lowest level).
    start: usize,
    end: usize,
}

/// Static R-tree over per-feature bounding boxes, bulk-loaded with
/// sort-tile-recursive packing.
#[derive(Clone, Debug, Default)]
pub struct SpatialIndex {
    entries: Vec<(BoundingBox, usize)>,
    ids: Vec<FeatureId>,
    /// levels[0] groups entries; the last level holds the root nodes.
    levels: Vec<Vec<Node>>,
}

fn center(b: &BoundingBox) -> (f64, f64) {
    ((b.min_x + b.max_x) * 0.5, (b.min_y + b.max_y) * 0.5)
}

/// Reorders `items` so that consecutive runs of `FAN_OUT` form STR tiles.
fn str_order<T>(items: &mut [T], bbox: impl Fn(&T) -> BoundingBox) {
    let n = items.len();
    if n <= FAN_OUT {
        return;
    }
    let pages = n.div_ceil(FAN_OUT);
    let slices = (pages as f64).sqrt().ceil() as usize;
    let slice_len = slices * FAN_OUT;
    items.sort_by(|a, b| center(&bbox(a)).0.total_cmp(&center(&bbox(b)).0));
    for slice in items.chunks_mut(slice_len) {
        slice.sort_by(|a, b| center(&bbox(a)).1.total_cmp(&center(&bbox(b)).1));
    }
}

fn group(boxes: &[BoundingBox]) -> Vec<Node> {
    boxes
        .chunks(FAN_OUT)
        .enumerate()
        .map(|(k, chunk)| Node {
            bbox: chunk.iter().skip(1).fold(chunk[0], |acc, b| acc.union(b)),
            start: k * FAN_OUT,
            end: k * FAN_OUT + chunk.len(),
        })
        .collect()
}

impl SpatialIndex {
    /// Index over every feature's bounding box; entries remember the
    /// feature's position in the collection.
    pub fn build(collection: &FeatureCollection) -> SpatialIndex {
        let boxes = collection
            .features()
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.geometry.bbox().map(|b| (b, i)))
            .collect();
        let mut index = SpatialIndex::from_boxes(boxes);
        index.ids = collection.ids().collect();
        index
    }

    /// Index over arbitrary boxes tagged with caller-defined positions.
    pub(crate) fn from_boxes(mut entries: Vec<(BoundingBox, usize)>) -> SpatialIndex {
        str_order(&mut entries, |e| e.0);
        let mut levels = Vec::new();
        if !entries.is_empty() {
            let boxes: Vec<BoundingBox> = entries.iter().map(|e| e.0).collect();
            let mut level = group(&boxes);
            while level.len() > 1 {
                str_order(&mut level, |n| n.bbox);
                let boxes: Vec<BoundingBox> = level.iter().map(|n| n.bbox).collect();
                let parents = group(&boxes);
                levels.push(level);
                level = parents;
            }
            levels.push(level);
        }
        SpatialIndex {
            entries,
            ids: Vec::new(),
            levels,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Calls `visit` with the position of every entry whose box intersects
    /// `query` (closed intervals).
    pub(crate) fn visit(&self, query: &BoundingBox, mut visit: impl FnMut(usize)) {
        let Some(top) = self.levels.last() else {
            return;
        };
        let mut stack: Vec<(usize, usize)> =
            (0..top.len()).map(|i| (self.levels.len() - 1, i)).collect();
        while let Some((level, i)) = stack.pop() {
            let node = &self.levels[level][i];
            if !node.bbox.intersects(query) {
                continue;
            }
            if level == 0 {
                for (b, pos) in &self.entries[node.start..node.end] {
                    if b.intersects(query) {
                        visit(*pos);
                    }
                }
            } else {
                stack.extend((node.start..node.end).map(|c| (level - 1, c)));
            }
        }
    }

    /// Ids of features whose bounding box intersects `query`, ascending.
    pub fn query_box(&self, query: &BoundingBox) -> Vec<FeatureId> {
        let mut out = Vec::new();
        self.visit(query, |pos| out.push(self.ids[pos]));
        out.sort_unstable();
        out
    }

    /// Ids of features whose bounding box contains the point, ascending.
    pub fn query_point(&self, x: f64, y: f64) -> Vec<FeatureId> {
        self.query_box(&BoundingBox::from_point(x, y))
    }
}

/// Builds the R-tree for a collection.
pub fn build_index(collection: &FeatureCollection) -> SpatialIndex {
    SpatialIndex::build(collection)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attrs;
    use crate::model::{Crs, Geometry, RawFeature};

    fn points(n: usize) -> FeatureCollection {
        let raw = (0..n)
            .map(|i| {
                RawFeature::new(
                    Geometry::point(Crs::Mercator, (i % 37) as f64, (i / 37) as f64),
                    attrs! {},
                )
            })
            .collect();
        FeatureCollection::new("p", Crs::Mercator, raw).unwrap()
    }

    #[test]
    fn empty_and_single() {
        let idx = build_index(&points(0));
        assert!(idx.is_empty());
        assert!(idx
            .query_box(&BoundingBox::new(-1e9, -1e9, 1e9, 1e9))
            .is_empty());
        let idx = build_index(&points(1));
        assert_eq!(idx.query_point(0.0, 0.0), vec![FeatureId(0)]);
    }

    #[test]
    fn packed_query_matches_scan() {
        let c = points(1000);
        let idx = build_index(&c);
        assert!(idx.depth() >= 3);
        let q = BoundingBox::new(3.5, 2.0, 10.0, 9.0);
        let expected: Vec<FeatureId> = c
            .features()
            .iter()
            .filter(|f| f.geometry.bbox().unwrap().intersects(&q))
            .map(|f| f.id)
            .collect();
        assert_eq!(idx.query_box(&q), expected);
    }
}
