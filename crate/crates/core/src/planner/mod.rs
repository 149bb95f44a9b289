//! Planning requests, results and the shared 8-connected movement model.

mod astar;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellIndex, GridMap};

pub use astar::{plan_astar, plan_nwa, nwa_path_cost};

/// Default ε added to the gain before inversion in the N-WA* step cost.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Absolute slack when comparing an average gain against a threshold.
pub const THRESHOLD_SLACK: f64 = 1e-9;

/// Length of an 8-connected path as `straight + diagonal·√2` cell units.
///
/// Comparison is exact: costs summed in different orders agree bit-for-bit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl PathCost {
    pub const ZERO: PathCost = PathCost { straight: 0, diagonal: 0 };

    pub fn step(diagonal: bool) -> Self {
        if diagonal {
            PathCost { straight: 0, diagonal: 1 }
        } else {
            PathCost { straight: 1, diagonal: 0 }
        }
    }

    pub fn steps(self) -> u32 {
        self.straight + self.diagonal
    }

    /// Length in cell units.
    pub fn units(self) -> f64 {
        f64::from(self.straight) + f64::from(self.diagonal) * std::f64::consts::SQRT_2
    }

    pub fn meters(self, cell_size: f64) -> f64 {
        self.units() * cell_size
    }
}

impl std::ops::Add for PathCost {
    type Output = PathCost;

    fn add(self, rhs: PathCost) -> PathCost {
        PathCost {
            straight: self.straight + rhs.straight,
            diagonal: self.diagonal + rhs.diagonal,
        }
    }
}

impl Ord for PathCost {
    fn cmp(&self, other: &Self) -> Ordering {
        // sign of x + y·√2 with integer x, y
        let x = i64::from(self.straight) - i64::from(other.straight);
        let y = i64::from(self.diagonal) - i64::from(other.diagonal);
        match (x.signum(), y.signum()) {
            (0, 0) => Ordering::Equal,
            (sx, sy) if sx >= 0 && sy >= 0 => Ordering::Greater,
            (sx, sy) if sx <= 0 && sy <= 0 => Ordering::Less,
            (1, _) => (x * x).cmp(&(2 * y * y)),
            _ => (2 * y * y).cmp(&(x * x)),
        }
    }
}

impl PartialOrd for PathCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "A*")]
    AStar,
    #[serde(rename = "N-WA*")]
    NWa,
    #[serde(rename = "DP-WA*")]
    DpWa,
    #[serde(rename = "SCoTT")]
    Scott,
    #[serde(rename = "SCoTT-DP-WA*")]
    ScottDpWa,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::AStar,
        Algorithm::NWa,
        Algorithm::DpWa,
        Algorithm::Scott,
        Algorithm::ScottDpWa,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::AStar => "A*",
            Algorithm::NWa => "N-WA*",
            Algorithm::DpWa => "DP-WA*",
            Algorithm::Scott => "SCoTT",
            Algorithm::ScottDpWa => "SCoTT-DP-WA*",
        }
    }

    /// Short identifier used on the command line and in scenario files.
    pub fn slug(self) -> &'static str {
        match self {
            Algorithm::AStar => "astar",
            Algorithm::NWa => "nwa",
            Algorithm::DpWa => "dpwa",
            Algorithm::Scott => "scott",
            Algorithm::ScottDpWa => "scott-dpwa",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.slug() == norm || a.label().to_ascii_lowercase() == norm)
            .ok_or_else(|| Error::Input(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub start: CellIndex,
    pub goal: CellIndex,
    /// Average path gain threshold G.
    pub threshold: f64,
    pub epsilon: f64,
}

impl PlanRequest {
    pub fn new(start: CellIndex, goal: CellIndex, threshold: f64) -> Self {
        Self {
            start,
            goal,
            threshold,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self, map: &GridMap) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Input(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Input(format!("epsilon {} must be positive", self.epsilon)));
        }
        if !map.is_traversable(self.start) {
            return Err(Error::NotTraversable { endpoint: "start", cell: self.start });
        }
        if !map.is_traversable(self.goal) {
            return Err(Error::NotTraversable { endpoint: "goal", cell: self.goal });
        }
        if self.start == self.goal {
            return Err(Error::Input("start and goal coincide".into()));
        }
        Ok(())
    }
}

/// Outcome of one planner invocation.
///
/// An empty `waypoints` list means no path was found; that is an
/// infeasibility result, not an error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub algorithm: Algorithm,
    pub waypoints: Vec<CellIndex>,
    #[serde(rename = "path_length_m")]
    pub path_length: f64,
    pub avg_gain: f64,
    pub runtime_s: f64,
    pub feasible: bool,
    pub expanded_states: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pruned_states: Option<u64>,
    /// Highest average gain reachable at the goal when no feasible path exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_avg_gain: Option<f64>,
}

impl PlanResult {
    /// Fills the path metrics from a waypoint list.
    pub fn from_path(
        algorithm: Algorithm,
        map: &GridMap,
        waypoints: Vec<CellIndex>,
        threshold: f64,
        expanded_states: u64,
    ) -> Self {
        let metrics = PathMetrics::of(map, &waypoints);
        let feasible = !waypoints.is_empty() && metrics.meets(threshold);
        Self {
            algorithm,
            path_length: metrics.cost.meters(map.cell_size()),
            avg_gain: metrics.avg_gain(),
            waypoints,
            runtime_s: 0.0,
            feasible,
            expanded_states,
            horizon: None,
            pruned_states: None,
            best_avg_gain: None,
        }
    }

    pub fn not_found(algorithm: Algorithm, expanded_states: u64) -> Self {
        Self {
            algorithm,
            waypoints: Vec::new(),
            path_length: 0.0,
            avg_gain: 0.0,
            runtime_s: 0.0,
            feasible: false,
            expanded_states,
            horizon: None,
            pruned_states: None,
            best_avg_gain: None,
        }
    }

    pub fn found(&self) -> bool {
        !self.waypoints.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan result serializes")
    }
}

/// Exact length and gain tally of a waypoint sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathMetrics {
    pub cost: PathCost,
    pub gain_tenths: u64,
    pub waypoint_count: usize,
}

impl PathMetrics {
    pub fn of(map: &GridMap, waypoints: &[CellIndex]) -> Self {
        let cost = waypoints.windows(2).fold(PathCost::ZERO, |acc, w| {
            let diagonal = w[0].col != w[1].col && w[0].row != w[1].row;
            acc + PathCost::step(diagonal)
        });
        Self {
            cost,
            gain_tenths: waypoints.iter().map(|&c| u64::from(map.gain_tenths(c))).sum(),
            waypoint_count: waypoints.len(),
        }
    }

    pub fn avg_gain(&self) -> f64 {
        if self.waypoint_count == 0 {
            0.0
        } else {
            self.gain_tenths as f64 / (10.0 * self.waypoint_count as f64)
        }
    }

    pub fn meets(&self, threshold: f64) -> bool {
        meets_threshold(self.gain_tenths, self.waypoint_count as u64, threshold)
    }
}

/// Whether `gain_tenths` accumulated over `count` waypoints averages at
/// least `threshold`.
pub fn meets_threshold(gain_tenths: u64, count: u64, threshold: f64) -> bool {
    gain_tenths as f64 >= 10.0 * count as f64 * threshold - THRESHOLD_SLACK
}
