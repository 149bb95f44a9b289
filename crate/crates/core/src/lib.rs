//! Wireless-aware path planning on path-gain annotated occupancy grids.
//!
//! * [`grid`]: the map model, radio-map JSON ingestion, synthetic maps and
//!   heatmap rendering.
//! * [`planner`]: A* and the naive wireless-aware N-WA*.
//! * [`dpwa`]: the constrained optimum via backward dynamic programming.
//! * [`focus`]: focus areas and search-space masks.
//! * [`scott`]: the three-stage model orchestration pipeline.
//! * [`scenario`]: scenario runner, metric tables and figures.

pub mod dpwa;
pub mod error;
pub mod focus;
pub mod grid;
pub mod io;
pub mod planner;
pub mod scenario;
pub mod scott;

pub use dpwa::{plan_dpwa, plan_dpwa_masked, state_count, DpOptions, Horizon};
pub use error::{Error, Result};
pub use focus::{build_focus_areas, mask_stats, FocusAreaSet};
pub use grid::{CellIndex, GridMap};
pub use planner::{plan_astar, plan_nwa, Algorithm, PlanRequest, PlanResult};
pub use scenario::{run_scenario, MetricsRow, Scenario};
pub use scott::{run_scott, MockClient, ModelClient, ScottConfig};
