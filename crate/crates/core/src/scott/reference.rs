use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::client::MockScript;
use super::ScottConfig;
use crate::error::{Error, Result};
use crate::focus::arc_length_centers;
use crate::grid::{CellIndex, GridMap};
use crate::planner::PlanRequest;

/// Largest per-axis offset, in cells, added to scripted coordinates. Every
/// jittered point snaps back to its own cell.
const JITTER: f64 = 0.3;

fn fenced(prose: &str, key: &str, points: &[[f64; 2]]) -> String {
    let body: Vec<String> = points.iter().map(|p| format!("[{}, {}]", p[0], p[1])).collect();
    format!("{prose}\n\n```json\n{{\"{key}\": [{}]}}\n```\n", body.join(", "))
}

/// Drops waypoints that straight-line bridging would put back unchanged.
fn thin(path: &[CellIndex]) -> Vec<CellIndex> {
    let Some(&first) = path.first() else { return Vec::new() };
    let mut out = vec![first];
    let mut i = 0;
    while i + 1 < path.len() {
        let mut j = i + 1;
        for k in (i + 2..path.len()).take(super::MAX_BRIDGED_GAP - 1) {
            let bridged = super::validate::rasterize(path[i], path[k]);
            if path[i].chebyshev(path[k]) == k - i && bridged == path[i + 1..k] {
                j = k;
            }
        }
        out.push(path[j]);
        i = j;
    }
    out
}

/// Scripted replies that walk a known path through the three stages: a
/// subsampled coarse path, arc-length centers along the path, and for each
/// area the contiguous run of path cells nearest its center. Coordinates are
/// jittered from `seed`; the stitched result equals `path`.
pub fn reference_script(
    map: &GridMap,
    request: &PlanRequest,
    config: &ScottConfig,
    path: &[CellIndex],
    seed: u64,
) -> Result<MockScript> {
    if path.len() < 2 || path.first() != Some(&request.start) || path.last() != Some(&request.goal) {
        return Err(Error::Input("reference path must run from start to goal".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cs = map.cell_size();
    let mut world = |c: CellIndex| {
        let [x, y] = map.cell_center(c);
        [x + rng.random_range(-JITTER..=JITTER) * cs, y + rng.random_range(-JITTER..=JITTER) * cs]
    };

    let stride = path.len().div_ceil(8).max(1);
    let mut coarse: Vec<CellIndex> = path.iter().copied().step_by(stride).collect();
    if coarse.last() != path.last() {
        coarse.push(path[path.len() - 1]);
    }
    let coarse_pts: Vec<[f64; 2]> = coarse.iter().map(|&c| world(c)).collect();

    let picks = arc_length_centers(map, path, config.n_areas.min(path.len()));
    let centers: Vec<[f64; 2]> = picks.iter().map(|&i| map.cell_center(path[i])).collect();

    let mut script = MockScript::new();
    script.push(
        1,
        None,
        None,
        fenced("The route stays in the strongest band between start and goal and avoids the white zones.", "waypoints", &coarse_pts),
    );
    script.push(
        2,
        None,
        None,
        fenced("Areas are spaced evenly along the coarse path, in travel order.", "centers", &centers),
    );
    // area k owns path indices between the midpoints of neighboring picks
    let bounds: Vec<usize> = std::iter::once(0)
        .chain(picks.windows(2).map(|w| (w[0] + w[1]).div_ceil(2)))
        .chain(std::iter::once(path.len()))
        .collect();
    for (k, w) in bounds.windows(2).enumerate() {
        let segment: Vec<[f64; 2]> = thin(&path[w[0]..w[1]]).into_iter().map(&mut world).collect();
        script.push(3, None, Some(k), fenced("These cells keep the running average above the threshold.", "waypoints", &segment));
    }
    Ok(script)
}
