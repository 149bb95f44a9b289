//! Fixtures shared by the planner benchmarks.

use std::path::PathBuf;

use wanav_core::grid::{synthesize_map, CellRect, SyntheticSpec};
use wanav_core::{CellIndex, GridMap, PlanRequest, Result, Scenario};

/// Square synthetic map with one access point near the middle and a wall
/// across the left half.
pub fn square_map(n: usize) -> Result<GridMap> {
    let mut spec = SyntheticSpec::new(n, n, vec![[n as f64 * 0.6, n as f64 * 0.6]]);
    spec.obstacles.push(CellRect { min: [0, n / 2], max: [n / 2, n / 2] });
    synthesize_map(&spec)
}

/// Corner-to-corner request on `square_map(n)`.
pub fn corner_request(n: usize, threshold: f64) -> PlanRequest {
    PlanRequest::new(CellIndex::new(0, 0), CellIndex::new(n - 1, n - 1), threshold)
}

/// One of the scenario files shipped in `scenarios/`.
pub fn shipped_scenario(name: &str) -> Result<Scenario> {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", &format!("{name}.toml")].iter().collect();
    Scenario::load(&path)
}
