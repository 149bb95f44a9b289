//! Focus areas: circular regions around a coarse path whose union restricts
//! the search space of the DP planner.

mod cache;
mod kdtree;

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellIndex, GridMap};

pub use cache::MaskCache;
pub use kdtree::KdTree;

pub const MASK_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AreaSource {
    ModelProposed,
    AutoGenerated,
}

/// One region: traversable cells within `radius` of `center`, indexed by a
/// kd-tree over their centers.
#[derive(Clone, Debug)]
pub struct FocusArea {
    center: [f64; 2],
    radius: f64,
    members: Vec<CellIndex>,
    tree: KdTree<CellIndex>,
}

impl FocusArea {
    pub fn new(map: &GridMap, center: [f64; 2], radius: f64) -> Self {
        let members: Vec<CellIndex> = map.slice_region(center, radius).into_iter().map(|(c, _)| c).collect();
        Self::from_members(map, center, radius, members)
    }

    fn from_members(map: &GridMap, center: [f64; 2], radius: f64, members: Vec<CellIndex>) -> Self {
        let tree = KdTree::build(members.iter().map(|&c| (map.cell_center(c), c)));
        Self { center, radius, members, tree }
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Member cells in row-major order.
    pub fn members(&self) -> &[CellIndex] {
        &self.members
    }

    pub fn tree(&self) -> &KdTree<CellIndex> {
        &self.tree
    }

    /// Member cell closest to a world point.
    pub fn nearest_member(&self, point: [f64; 2]) -> Option<CellIndex> {
        self.tree.nearest(point).map(|(_, c, _)| *c)
    }
}

impl PartialEq for FocusArea {
    fn eq(&self, other: &Self) -> bool {
        self.center == other.center && self.radius == other.radius && self.members == other.members
    }
}

/// Cache key: map content, endpoints and threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskKey {
    pub map_hash: String,
    pub start: CellIndex,
    pub goal: CellIndex,
    #[serde(rename = "G")]
    pub threshold: f64,
}

impl MaskKey {
    pub fn new(map: &GridMap, start: CellIndex, goal: CellIndex, threshold: f64) -> Self {
        Self {
            map_hash: map.content_hash(),
            start,
            goal,
            threshold,
        }
    }

    pub(crate) fn fingerprint(&self) -> String {
        format!(
            "{}-{}_{}-{}_{}-{:016x}",
            self.map_hash,
            self.start.col,
            self.start.row,
            self.goal.col,
            self.goal.row,
            self.threshold.to_bits()
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FocusAreaSet {
    areas: Vec<FocusArea>,
    source: AreaSource,
    key: Option<MaskKey>,
    warnings: Vec<String>,
}

impl FocusAreaSet {
    pub fn new(map: &GridMap, areas: Vec<FocusArea>, source: AreaSource) -> Self {
        let mut set = Self { areas, source, key: None, warnings: Vec::new() };
        if !set.union_connected(map) {
            set.warnings.push("focus-area union is not connected".into());
        }
        set
    }

    pub fn areas(&self) -> &[FocusArea] {
        &self.areas
    }

    pub fn source(&self) -> AreaSource {
        self.source
    }

    pub fn key(&self) -> Option<&MaskKey> {
        self.key.as_ref()
    }

    pub fn set_key(&mut self, key: MaskKey) {
        self.key = Some(key);
    }

    /// Non-fatal issues noticed while building (clamped N, disconnected
    /// union, uncovered waypoints).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Union of all members, row-major.
    pub fn union(&self) -> BTreeSet<CellIndex> {
        self.areas.iter().flat_map(|a| a.members.iter().copied()).collect()
    }

    /// Row-major admission flags for `map`.
    pub fn mask_for(&self, map: &GridMap) -> Vec<bool> {
        let mut mask = vec![false; map.len()];
        for a in &self.areas {
            for &c in &a.members {
                if map.contains(c) {
                    mask[map.index(c)] = true;
                }
            }
        }
        mask
    }

    pub fn contains(&self, cell: CellIndex) -> bool {
        self.areas.iter().any(|a| a.members.binary_search(&cell).is_ok())
    }

    fn union_connected(&self, map: &GridMap) -> bool {
        let union = self.union();
        let Some(&first) = union.iter().next() else { return true };
        let mut seen = BTreeSet::from([first]);
        let mut queue = VecDeque::from([first]);
        while let Some(c) = queue.pop_front() {
            for (_, n) in map.neighbors(c) {
                if union.contains(&n) && map.step_allowed(c, n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen.len() == union.len()
    }

    pub fn to_json(&self) -> String {
        let doc = MaskDocument {
            version: MASK_VERSION,
            source: Some(self.source),
            areas: self
                .areas
                .iter()
                .map(|a| AreaDocument {
                    center_m: a.center,
                    radius_m: a.radius,
                    members: a.members.clone(),
                })
                .collect(),
            key: self.key.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("mask serializes")
    }

    /// Restores a mask against the map it was built on. Member cells must be
    /// traversable and lie within their area's radius.
    pub fn from_json(json: &str, map: &GridMap) -> Result<Self> {
        let doc: MaskDocument = serde_json::from_str(json).map_err(Error::from_json)?;
        if doc.version != MASK_VERSION {
            return Err(Error::MaskVersion { found: doc.version, expected: MASK_VERSION });
        }
        let mut areas = Vec::with_capacity(doc.areas.len());
        for (i, a) in doc.areas.into_iter().enumerate() {
            for &m in &a.members {
                if !map.is_traversable(m) {
                    return Err(Error::Input(format!("area {i} member {m} is not traversable")));
                }
                let [x, y] = map.cell_center(m);
                if (x - a.center_m[0]).hypot(y - a.center_m[1]) > a.radius_m + 1e-9 {
                    return Err(Error::Input(format!("area {i} member {m} lies outside its radius")));
                }
            }
            let mut members = a.members;
            members.sort_unstable();
            members.dedup();
            areas.push(FocusArea::from_members(map, a.center_m, a.radius_m, members));
        }
        let mut set = FocusAreaSet::new(map, areas, doc.source.unwrap_or(AreaSource::AutoGenerated));
        set.key = doc.key;
        Ok(set)
    }
}

#[derive(Serialize, Deserialize)]
struct MaskDocument {
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<AreaSource>,
    areas: Vec<AreaDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    key: Option<MaskKey>,
}

#[derive(Serialize, Deserialize)]
struct AreaDocument {
    center_m: [f64; 2],
    radius_m: f64,
    members: Vec<CellIndex>,
}

/// Indices of `n` waypoints spaced at uniform arc length along the path,
/// first and last included. A single center sits at the arc midpoint.
pub fn arc_length_centers(map: &GridMap, path: &[CellIndex], n: usize) -> Vec<usize> {
    if path.is_empty() || n == 0 {
        return Vec::new();
    }
    let mut cumulative = Vec::with_capacity(path.len());
    let mut s = 0.0;
    for (i, &c) in path.iter().enumerate() {
        if i > 0 {
            let [x0, y0] = map.cell_center(path[i - 1]);
            let [x1, y1] = map.cell_center(c);
            s += (x1 - x0).hypot(y1 - y0);
        }
        cumulative.push(s);
    }
    let total = s;
    let targets: Vec<f64> = if n == 1 {
        vec![total / 2.0]
    } else {
        (0..n).map(|i| total * i as f64 / (n - 1) as f64).collect()
    };
    let mut picks: Vec<usize> = targets
        .iter()
        .map(|&t| {
            cumulative
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()).then(a.0.cmp(&b.0)))
                .map(|(i, _)| i)
                .unwrap_or(0)
        })
        .collect();
    picks.dedup();
    picks
}

fn validate_focus_inputs(map: &GridMap, max_distance: f64) -> Result<()> {
    if !(max_distance > 0.0 && max_distance.is_finite()) {
        return Err(Error::Input(format!("max_distance {max_distance} must be positive")));
    }
    if map.is_empty() {
        return Err(Error::EmptyMap);
    }
    Ok(())
}

/// Materializes `n_areas` focus areas centered on waypoints sampled at
/// uniform arc length along `coarse_path`.
pub fn build_focus_areas(map: &GridMap, coarse_path: &[CellIndex], n_areas: usize, max_distance: f64) -> Result<FocusAreaSet> {
    validate_focus_inputs(map, max_distance)?;
    if coarse_path.is_empty() {
        return Err(Error::Input("coarse path is empty".into()));
    }
    if n_areas == 0 {
        return Err(Error::Input("at least one focus area is required".into()));
    }
    if let Some(bad) = coarse_path.iter().find(|&&c| !map.is_traversable(c)) {
        return Err(Error::NotTraversable { endpoint: "coarse-path waypoint", cell: *bad });
    }
    let mut warnings = Vec::new();
    let n = if n_areas > coarse_path.len() {
        warnings.push(format!(
            "requested {n_areas} focus areas but the coarse path has {} waypoints; clamped",
            coarse_path.len()
        ));
        coarse_path.len()
    } else {
        n_areas
    };
    let picks = arc_length_centers(map, coarse_path, n);
    if picks.len() < n {
        warnings.push(format!("only {} distinct centers along the coarse path", picks.len()));
    }
    let areas = picks
        .iter()
        .map(|&i| FocusArea::new(map, map.cell_center(coarse_path[i]), max_distance))
        .collect();
    let mut set = FocusAreaSet::new(map, areas, AreaSource::AutoGenerated);
    let uncovered = coarse_path.iter().filter(|c| !set.contains(**c)).count();
    if uncovered > 0 {
        warnings.push(format!("{uncovered} coarse-path waypoints are not covered by any focus area"));
    }
    set.warnings.splice(0..0, warnings);
    Ok(set)
}

/// Focus areas around explicit world-coordinate centers.
pub fn focus_areas_from_centers(map: &GridMap, centers: &[[f64; 2]], max_distance: f64, source: AreaSource) -> Result<FocusAreaSet> {
    validate_focus_inputs(map, max_distance)?;
    if centers.is_empty() {
        return Err(Error::Input("at least one focus-area center is required".into()));
    }
    let areas = centers.iter().map(|&c| FocusArea::new(map, c, max_distance)).collect();
    Ok(FocusAreaSet::new(map, areas, source))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MaskStats {
    pub mask_cells: usize,
    pub traversable_cells: usize,
    pub reduction_fraction: f64,
}

pub fn mask_stats(map: &GridMap, mask: &FocusAreaSet) -> MaskStats {
    let mask_cells = mask.union().into_iter().filter(|&c| map.is_traversable(c)).count();
    let traversable_cells = map.traversable_count();
    let reduction_fraction = if traversable_cells == 0 {
        0.0
    } else {
        (1.0 - mask_cells as f64 / traversable_cells as f64).clamp(0.0, 1.0)
    };
    MaskStats { mask_cells, traversable_cells, reduction_fraction }
}

/// Smallest `max_distance` (to within 1e-3 of a cell) whose arc-length mask
/// reduces the search space by no more than `target_reduction`.
pub fn fit_max_distance(map: &GridMap, coarse_path: &[CellIndex], n_areas: usize, target_reduction: f64) -> Result<f64> {
    let reduction = |r: f64| -> Result<f64> {
        Ok(mask_stats(map, &build_focus_areas(map, coarse_path, n_areas, r)?).reduction_fraction)
    };
    let cs = map.cell_size();
    let mut lo = cs * 0.5;
    let mut hi = cs * (map.width() as f64).hypot(map.height() as f64);
    if reduction(lo)? <= target_reduction {
        return Ok(lo);
    }
    while hi - lo > 1e-3 * cs {
        let mid = 0.5 * (lo + hi);
        if reduction(mid)? > target_reduction {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn open(w: usize, h: usize) -> GridMap {
        GridMap::from_tenths(w, h, 1.0, [0.0, 0.0], vec![5; w * h], vec![false; w * h]).unwrap()
    }

    fn straight(n: usize) -> Vec<CellIndex> {
        (0..n).map(|c| CellIndex::new(c, 0)).collect()
    }

    #[test]
    fn single_area_covering_everything() {
        let map = open(6, 4);
        let set = build_focus_areas(&map, &straight(3), 1, 100.0).unwrap();
        assert_eq!(set.union().len(), map.traversable_count());
        assert_eq!(mask_stats(&map, &set).reduction_fraction, 0.0);
    }

    #[test]
    fn two_areas_sit_on_path_ends() {
        let map = open(12, 3);
        let path = straight(10);
        let set = build_focus_areas(&map, &path, 2, 1.0).unwrap();
        let centers: Vec<_> = set.areas().iter().map(|a| a.center()).collect();
        assert_eq!(centers, vec![map.cell_center(path[0]), map.cell_center(path[9])]);
    }

    #[test]
    fn too_many_areas_are_clamped_with_warning() {
        let map = open(5, 5);
        let set = build_focus_areas(&map, &straight(3), 7, 1.0).unwrap();
        assert_eq!(set.areas().len(), 3);
        assert!(set.warnings().iter().any(|w| w.contains("clamped")));
    }

    #[test]
    fn disconnected_union_warns() {
        let map = open(20, 1);
        let set = build_focus_areas(&map, &straight(20), 2, 1.0).unwrap();
        assert!(set.warnings().iter().any(|w| w.contains("not connected")));
    }

    #[test]
    fn half_mask_reduction() {
        let map = open(4, 2);
        let set = focus_areas_from_centers(&map, &[[0.5, 0.0], [0.5, 1.0]], 0.6, AreaSource::ModelProposed).unwrap();
        let stats = mask_stats(&map, &set);
        assert_eq!(stats.mask_cells, 4);
        assert_eq!(stats.reduction_fraction, 0.5);
    }

    #[test]
    fn version_mismatch_is_explicit() {
        let map = open(3, 3);
        let set = build_focus_areas(&map, &straight(3), 2, 1.0).unwrap();
        let json = set.to_json().replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(
            FocusAreaSet::from_json(&json, &map),
            Err(Error::MaskVersion { found: 2, expected: 1 })
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        let map = open(3, 3);
        assert!(build_focus_areas(&map, &[], 2, 1.0).is_err());
        assert!(build_focus_areas(&map, &straight(3), 0, 1.0).is_err());
        assert!(build_focus_areas(&map, &straight(3), 2, 0.0).is_err());
    }

    fn random_map() -> impl Strategy<Value = (GridMap, Vec<CellIndex>)> {
        (4usize..12, 4usize..12, any::<u64>()).prop_map(|(w, h, seed)| {
            let map = GridMap::from_tenths(
                w,
                h,
                0.5,
                [1.0, -2.0],
                (0..w * h).map(|i| ((seed >> (i % 60)) % 11) as u8).collect(),
                (0..w * h).map(|i| (seed.rotate_left(i as u32) & 7) == 0).collect(),
            )
            .unwrap();
            let path: Vec<CellIndex> = map.traversable_cells().step_by(3).collect();
            (map, path)
        })
    }

    proptest! {
        #[test]
        fn membership_and_coverage((map, path) in random_map(), n in 1usize..8, scale in 0.5f64..3.0) {
            prop_assume!(!path.is_empty());
            let max_distance = map.cell_size() * scale;
            let set = build_focus_areas(&map, &path, n, max_distance).unwrap();
            for a in set.areas() {
                for &m in a.members() {
                    prop_assert!(map.is_traversable(m));
                    let [x, y] = map.cell_center(m);
                    prop_assert!((x - a.center()[0]).hypot(y - a.center()[1]) <= max_distance);
                }
            }
            // every center waypoint is its own member
            for a in set.areas() {
                let c = map.world_to_cell(a.center()).unwrap();
                prop_assert!(set.contains(c));
            }
            let back = FocusAreaSet::from_json(&set.to_json(), &map).unwrap();
            prop_assert_eq!(back.union(), set.union());
            prop_assert_eq!(back.areas(), set.areas());
        }

        #[test]
        fn generous_radius_covers_the_source_path((map, path) in random_map(), n in 2usize..7) {
            prop_assume!(path.len() >= 2);
            let picks = arc_length_centers(&map, &path, n.min(path.len()));
            // widest gap between consecutive centers bounds the needed radius
            let mut cumulative = vec![0.0];
            for w in path.windows(2) {
                let [x0, y0] = map.cell_center(w[0]);
                let [x1, y1] = map.cell_center(w[1]);
                cumulative.push(cumulative.last().unwrap() + (x1 - x0).hypot(y1 - y0));
            }
            let gap = picks.windows(2).map(|w| cumulative[w[1]] - cumulative[w[0]]).fold(0.0, f64::max);
            let set = build_focus_areas(&map, &path, n, gap.max(map.cell_size())).unwrap();
            for c in &path {
                prop_assert!(set.contains(*c), "{} uncovered", c);
            }
        }

        #[test]
        fn slice_monotone_in_radius((map, _) in random_map(), r1 in 0.1f64..3.0, dr in 0.0f64..3.0) {
            let center = map.cell_center(CellIndex::new(map.width() / 2, map.height() / 2));
            let small: BTreeSet<_> = map.slice_region(center, r1).into_iter().map(|(c, _)| c).collect();
            let big: BTreeSet<_> = map.slice_region(center, r1 + dr).into_iter().map(|(c, _)| c).collect();
            prop_assert!(small.is_subset(&big));
        }
    }
}
