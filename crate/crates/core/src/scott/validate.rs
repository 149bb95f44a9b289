use std::fmt;

use serde::{Deserialize, Serialize};

use crate::grid::{CellIndex, GridMap};
use crate::planner::PathMetrics;

/// Largest Chebyshev gap between consecutive waypoints that validation
/// bridges by straight-line rasterization.
pub const MAX_BRIDGED_GAP: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Empty,
    OutOfBounds { cell: CellIndex },
    Obstacle { cell: CellIndex },
    CornerCut { from: CellIndex, to: CellIndex },
    Gap { from: CellIndex, to: CellIndex, cells: usize },
    Threshold { avg_gain: f64, deficit: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => f.write_str("empty path"),
            Violation::OutOfBounds { cell } => write!(f, "cell {cell} is outside the map"),
            Violation::Obstacle { cell } => write!(f, "cell {cell} is an obstacle"),
            Violation::CornerCut { from, to } => write!(f, "step {from} -> {to} cuts an obstacle corner"),
            Violation::Gap { from, to, cells } => write!(f, "gap of {cells} cells between {from} and {to}"),
            Violation::Threshold { avg_gain, deficit } => {
                write!(f, "average gain {avg_gain:.3} is {deficit:.3} below the threshold")
            }
        }
    }
}

/// Outcome of [`validate_candidate`]. `path` is the candidate after gap
/// bridging and removal of consecutive duplicates; metrics refer to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub path: Vec<CellIndex>,
    pub avg_gain: f64,
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// One-line summary used in retry prompts.
    pub fn summary(&self) -> String {
        if self.is_valid() {
            return "valid".into();
        }
        self.violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
    }
}

/// Cells strictly between `a` and `b` on the rounded straight line.
pub(super) fn rasterize(a: CellIndex, b: CellIndex) -> Vec<CellIndex> {
    let n = a.chebyshev(b);
    let (ac, ar) = (a.col as f64, a.row as f64);
    let (dc, dr) = (b.col as f64 - ac, b.row as f64 - ar);
    (1..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            CellIndex::new((ac + dc * t).round() as usize, (ar + dr * t).round() as usize)
        })
        .collect()
}

/// Checks obstacle avoidance, 8-connectivity (bridging gaps of up to
/// [`MAX_BRIDGED_GAP`] cells) and the average-gain threshold.
pub fn validate_candidate(map: &GridMap, waypoints: &[CellIndex], threshold: f64) -> Verdict {
    let mut violations = Vec::new();
    if waypoints.is_empty() {
        return Verdict { path: Vec::new(), avg_gain: 0.0, violations: vec![Violation::Empty] };
    }
    let mut path: Vec<CellIndex> = Vec::with_capacity(waypoints.len());
    for &w in waypoints {
        if !map.contains(w) {
            violations.push(Violation::OutOfBounds { cell: w });
            continue;
        }
        match path.last() {
            Some(&prev) if prev == w => {}
            Some(&prev) => {
                let gap = prev.chebyshev(w);
                if gap > MAX_BRIDGED_GAP {
                    violations.push(Violation::Gap { from: prev, to: w, cells: gap });
                } else {
                    path.extend(rasterize(prev, w));
                }
                path.push(w);
            }
            None => path.push(w),
        }
    }
    path.dedup();
    for &c in &path {
        if map.is_obstacle(c) && !violations.contains(&Violation::Obstacle { cell: c }) {
            violations.push(Violation::Obstacle { cell: c });
        }
    }
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.chebyshev(b) == 1 && !map.is_obstacle(a) && !map.is_obstacle(b) && !map.step_allowed(a, b) {
            violations.push(Violation::CornerCut { from: a, to: b });
        }
    }
    let metrics = PathMetrics::of(map, &path);
    let avg_gain = metrics.avg_gain();
    if !path.is_empty() && !metrics.meets(threshold) {
        violations.push(Violation::Threshold { avg_gain, deficit: threshold - avg_gain });
    }
    Verdict { path, avg_gain, violations }
}
