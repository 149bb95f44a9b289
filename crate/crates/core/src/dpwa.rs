//! DP-WA*: optimal wireless-aware planning by backward dynamic programming.
//!
//! The state is `(cell, step k, accumulated gain W)` with `W` kept exactly in
//! integer tenths, the quantization of map gains. Layers are filled from `k = T` back to `0`:
//!
//! ```text
//! V_T(goal, W)   = 0 if W / (T+1) >= G, else inf
//! V_k(p, W)      = min( terminate: 0 if p = goal and W / (k+1) >= G,
//!                       min_u c(p, p') + V_{k+1}(p', W + g(p')) )
//! ```
//!
//! A successor is only considered when `W' + (T - (k+1)) · g_max >= (T+1) · G`
//! with `g_max = 1`; states failing the same test are never evaluated. The
//! terminate action applies at the goal for any `k <= T`; paths may be
//! shorter than the horizon. Cells may be revisited.

use std::collections::VecDeque;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::focus::FocusAreaSet;
use crate::grid::{CellIndex, GridMap, Move};
use crate::planner::{meets_threshold, Algorithm, PathCost, PlanRequest, PlanResult};

/// Maximum gain of any cell, in tenths.
const GAIN_MAX_TENTHS: u64 = 10;

const NO_ACTION: u8 = u8::MAX;
const TERMINATE: u8 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Horizon {
    /// `ceil(2 · straight-line cell distance)`, doubled until feasible, capped
    /// at the number of admitted cells.
    Auto,
    Fixed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DpOptions {
    pub horizon: Horizon,
    /// Apply the feasibility pruning rule. Disabling it never changes the
    /// optimum, only the number of evaluated states.
    pub pruning: bool,
    /// Evaluate the cells of a layer on the rayon pool. Results are identical
    /// to the sequential order.
    pub parallel: bool,
    /// Keep every value layer (memory heavy; used for verification).
    pub retain_values: bool,
}

impl Default for DpOptions {
    fn default() -> Self {
        Self {
            horizon: Horizon::Auto,
            pruning: true,
            parallel: true,
            retain_values: false,
        }
    }
}

impl DpOptions {
    pub fn with_horizon(horizon: Horizon) -> Self {
        Self { horizon, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DpAction {
    Terminate,
    Step(Move),
}

/// Key into the value table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DpState {
    pub cell: CellIndex,
    pub step: usize,
    /// Accumulated gain in tenths.
    pub gain_units: u32,
}

/// Number of accumulated-gain levels at step `k`: `W ∈ [0, 10(k+1)]`.
fn levels(k: usize) -> usize {
    10 * (k + 1) + 1
}

/// Capacity of the value table: `traversable × (T+1) × (10(T+1)+1)`.
pub fn state_count(map: &GridMap, horizon: usize) -> u64 {
    map.traversable_count() as u64 * (horizon as u64 + 1) * levels(horizon) as u64
}

/// Cells admitted to the search together with their legal moves.
struct Domain {
    cells: Vec<CellIndex>,
    gain: Vec<u8>,
    /// Local index of each map cell, `usize::MAX` when not admitted.
    local: Vec<usize>,
    /// Per local cell: (move code, target local index, diagonal).
    moves: Vec<Vec<(u8, usize, bool)>>,
}

impl Domain {
    fn new(map: &GridMap, admitted: &[bool]) -> Self {
        let mut local = vec![usize::MAX; map.len()];
        let mut cells = Vec::new();
        for cell in map.traversable_cells() {
            let i = map.index(cell);
            if admitted[i] {
                local[i] = cells.len();
                cells.push(cell);
            }
        }
        let gain = cells.iter().map(|&c| map.gain_tenths(c)).collect();
        let moves = cells
            .iter()
            .map(|&c| {
                map.neighbors(c)
                    .filter(|&(_, q)| map.step_allowed(c, q) && local[map.index(q)] != usize::MAX)
                    .map(|(m, q)| (m.code(), local[map.index(q)], m.is_diagonal()))
                    .collect()
            })
            .collect();
        Self { cells, gain, local, moves }
    }

    fn local_of(&self, map: &GridMap, cell: CellIndex) -> Option<usize> {
        map.contains(cell)
            .then(|| self.local[map.index(cell)])
            .filter(|&i| i != usize::MAX)
    }

    fn len(&self) -> usize {
        self.cells.len()
    }

    fn reachable(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(p) = queue.pop_front() {
            if p == to {
                return true;
            }
            for &(_, q, _) in &self.moves[p] {
                if !seen[q] {
                    seen[q] = true;
                    queue.push_back(q);
                }
            }
        }
        false
    }

    /// Largest accumulated gain that can reach the goal at each step
    /// `0..=horizon`, by forward propagation of per-cell maxima.
    fn best_goal_gain(&self, start: usize, goal: usize, horizon: usize) -> Vec<Option<u64>> {
        let mut cur: Vec<Option<u64>> = vec![None; self.len()];
        cur[start] = Some(u64::from(self.gain[start]));
        let mut at_goal = vec![cur[goal]];
        for _ in 0..horizon {
            let mut next: Vec<Option<u64>> = vec![None; self.len()];
            for (p, w) in cur.iter().enumerate() {
                let Some(w) = *w else { continue };
                for &(_, q, _) in &self.moves[p] {
                    let nw = w + u64::from(self.gain[q]);
                    if next[q].is_none_or(|old| nw > old) {
                        next[q] = Some(nw);
                    }
                }
            }
            at_goal.push(next[goal]);
            cur = next;
        }
        at_goal
    }
}

/// Solved DP table for one horizon.
pub struct DpTable {
    horizon: usize,
    threshold: f64,
    domain: Domain,
    goal: usize,
    /// `policy[k][cell * levels(k) + w]`
    policy: Vec<Vec<u8>>,
    /// Present only with `retain_values`.
    values: Option<Vec<Vec<Option<PathCost>>>>,
    start_value: Option<PathCost>,
    expanded: u64,
    pruned: u64,
}

impl DpTable {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn expanded_states(&self) -> u64 {
        self.expanded
    }

    pub fn pruned_states(&self) -> u64 {
        self.pruned
    }

    /// Optimal cost-to-go from the initial state, `None` when infeasible.
    pub fn start_value(&self) -> Option<PathCost> {
        self.start_value
    }

    fn slot(&self, map: &GridMap, state: DpState) -> Option<(usize, usize)> {
        if state.step > self.horizon || state.gain_units as usize >= levels(state.step) {
            return None;
        }
        let p = self.domain.local_of(map, state.cell)?;
        Some((state.step, p * levels(state.step) + state.gain_units as usize))
    }

    /// Cost-to-go of a state. Requires `retain_values`; `Some(None)` is +inf.
    pub fn value(&self, map: &GridMap, state: DpState) -> Option<Option<PathCost>> {
        let values = self.values.as_ref()?;
        let (k, i) = self.slot(map, state)?;
        Some(values[k][i])
    }

    pub fn action(&self, map: &GridMap, state: DpState) -> Option<DpAction> {
        let (k, i) = self.slot(map, state)?;
        decode_action(self.policy[k][i])
    }

    /// Successor of a state under a move, if the move is legal in the domain.
    pub fn successor(&self, map: &GridMap, state: DpState, mv: Move) -> Option<DpState> {
        let p = self.domain.local_of(map, state.cell)?;
        let &(_, q, _) = self.domain.moves[p].iter().find(|(code, _, _)| *code == mv.code())?;
        Some(DpState {
            cell: self.domain.cells[q],
            step: state.step + 1,
            gain_units: state.gain_units + u32::from(self.domain.gain[q]),
        })
    }

    /// Whether the pruning rule admits a state.
    pub fn admits(&self, state: DpState) -> bool {
        admits(u64::from(state.gain_units), state.step, self.horizon, self.threshold)
    }

    pub fn is_goal(&self, cell: CellIndex) -> bool {
        self.domain.cells[self.goal] == cell
    }

    /// Follows the stored policy from `start`.
    fn reconstruct(&self, start: usize) -> Vec<CellIndex> {
        let mut p = start;
        let mut w = self.domain.gain[start] as usize;
        let mut path = vec![self.domain.cells[p]];
        for k in 0..=self.horizon {
            let code = self.policy[k][p * levels(k) + w];
            match decode_action(code) {
                Some(DpAction::Terminate) => return path,
                Some(DpAction::Step(m)) => {
                    let &(_, q, _) = self.domain.moves[p]
                        .iter()
                        .find(|(c, _, _)| *c == m.code())
                        .expect("stored action is a legal move");
                    p = q;
                    w += self.domain.gain[q] as usize;
                    path.push(self.domain.cells[q]);
                }
                None => break,
            }
        }
        unreachable!("policy of a finite start value must terminate within the horizon")
    }
}

fn decode_action(code: u8) -> Option<DpAction> {
    match code {
        TERMINATE => Some(DpAction::Terminate),
        NO_ACTION => None,
        c => Move::from_code(c).map(DpAction::Step),
    }
}

/// Pruning rule at step `k`: `W + (T - k) · g_max >= (T + 1) · G`.
fn admits(gain_units: u64, k: usize, horizon: usize, threshold: f64) -> bool {
    meets_threshold(
        gain_units + (horizon - k) as u64 * GAIN_MAX_TENTHS,
        horizon as u64 + 1,
        threshold,
    )
}

fn solve_domain(domain: Domain, start: usize, goal: usize, horizon: usize, threshold: f64, opts: &DpOptions) -> DpTable {
    let t = horizon;
    let mut policy: Vec<Vec<u8>> = vec![Vec::new(); t + 1];
    let mut retained: Vec<Vec<Option<PathCost>>> = Vec::new();
    let mut expanded = 0u64;
    let mut pruned = 0u64;

    // Boundary layer.
    let lt = levels(t);
    let mut next_values: Vec<Option<PathCost>> = vec![None; domain.len() * lt];
    let mut last_policy = vec![NO_ACTION; domain.len() * lt];
    for p in 0..domain.len() {
        for w in 0..lt {
            if opts.pruning && !admits(w as u64, t, t, threshold) {
                pruned += 1;
                continue;
            }
            expanded += 1;
            if p == goal && meets_threshold(w as u64, t as u64 + 1, threshold) {
                next_values[p * lt + w] = Some(PathCost::ZERO);
                last_policy[p * lt + w] = TERMINATE;
            }
        }
    }
    policy[t] = last_policy;

    for k in (0..t).rev() {
        let lk = levels(k);
        let lk1 = levels(k + 1);
        let mut values: Vec<Option<PathCost>> = vec![None; domain.len() * lk];
        let mut acts = vec![NO_ACTION; domain.len() * lk];
        let evaluate = |p: usize, vals: &mut [Option<PathCost>], act: &mut [u8]| -> (u64, u64) {
            let (mut exp, mut pru) = (0u64, 0u64);
            for w in 0..lk {
                if opts.pruning && !admits(w as u64, k, t, threshold) {
                    pru += 1;
                    continue;
                }
                exp += 1;
                let mut best: Option<PathCost> = None;
                let mut best_act = NO_ACTION;
                if p == goal && meets_threshold(w as u64, k as u64 + 1, threshold) {
                    best = Some(PathCost::ZERO);
                    best_act = TERMINATE;
                }
                for &(code, q, diagonal) in &domain.moves[p] {
                    let w2 = w + domain.gain[q] as usize;
                    if opts.pruning && !admits(w2 as u64, k + 1, t, threshold) {
                        continue;
                    }
                    let Some(v) = next_values[q * lk1 + w2] else { continue };
                    let c = PathCost::step(diagonal) + v;
                    if best.is_none_or(|b| c < b) {
                        best = Some(c);
                        best_act = code;
                    }
                }
                vals[w] = best;
                act[w] = best_act;
            }
            (exp, pru)
        };
        let counts: Vec<(u64, u64)> = if opts.parallel {
            values
                .par_chunks_mut(lk)
                .zip(acts.par_chunks_mut(lk))
                .enumerate()
                .map(|(p, (v, a))| evaluate(p, v, a))
                .collect()
        } else {
            values
                .chunks_mut(lk)
                .zip(acts.chunks_mut(lk))
                .enumerate()
                .map(|(p, (v, a))| evaluate(p, v, a))
                .collect()
        };
        for (e, p) in counts {
            expanded += e;
            pruned += p;
        }
        policy[k] = acts;
        let done = std::mem::replace(&mut next_values, values);
        if opts.retain_values {
            retained.push(done);
        }
    }

    let w0 = domain.gain[start] as usize;
    let start_value = next_values[start * levels(0) + w0];
    let values = opts.retain_values.then(|| {
        retained.push(next_values);
        retained.reverse();
        retained
    });
    DpTable {
        horizon,
        threshold,
        domain,
        goal,
        policy,
        values,
        start_value,
        expanded,
        pruned,
    }
}

/// Solves the DP table on `admitted ∩ traversable` for a fixed horizon.
pub fn solve_table(
    map: &GridMap,
    request: &PlanRequest,
    admitted: &[bool],
    horizon: usize,
    opts: &DpOptions,
) -> Result<DpTable> {
    request.validate(map)?;
    if admitted.len() != map.len() {
        return Err(Error::Input("admission mask does not match the map".into()));
    }
    if horizon == 0 {
        return Err(Error::Input("horizon must be at least 1".into()));
    }
    let domain = Domain::new(map, admitted);
    let start = domain
        .local_of(map, request.start)
        .ok_or(Error::OutsideMask { endpoint: "start", cell: request.start })?;
    let goal = domain
        .local_of(map, request.goal)
        .ok_or(Error::OutsideMask { endpoint: "goal", cell: request.goal })?;
    Ok(solve_domain(domain, start, goal, horizon, request.threshold, opts))
}

fn auto_horizon_start(request: &PlanRequest) -> usize {
    ((2.0 * request.start.euclidean(request.goal)).ceil() as usize)
        .max(request.start.chebyshev(request.goal))
        .max(1)
}

fn plan_on(map: &GridMap, request: &PlanRequest, admitted: &[bool], opts: &DpOptions, algorithm: Algorithm) -> Result<PlanResult> {
    request.validate(map)?;
    let t0 = Instant::now();
    let domain = Domain::new(map, admitted);
    let start = domain
        .local_of(map, request.start)
        .ok_or(Error::OutsideMask { endpoint: "start", cell: request.start })?;
    let goal = domain
        .local_of(map, request.goal)
        .ok_or(Error::OutsideMask { endpoint: "goal", cell: request.goal })?;

    let tightest = |horizon: usize, domain: &Domain| -> Option<f64> {
        domain
            .best_goal_gain(start, goal, horizon)
            .iter()
            .enumerate()
            .filter_map(|(k, w)| w.map(|w| w as f64 / (10.0 * (k + 1) as f64)))
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
    };
    let feasible_within = |horizon: usize, domain: &Domain| -> bool {
        domain
            .best_goal_gain(start, goal, horizon)
            .iter()
            .enumerate()
            .any(|(k, w)| w.is_some_and(|w| meets_threshold(w, k as u64 + 1, request.threshold)))
    };

    let horizon = match opts.horizon {
        Horizon::Fixed(t) => {
            if t == 0 {
                return Err(Error::Input("horizon must be at least 1".into()));
            }
            t
        }
        Horizon::Auto => {
            if !domain.reachable(start, goal) {
                let mut r = PlanResult::not_found(algorithm, 0);
                r.runtime_s = t0.elapsed().as_secs_f64();
                return Ok(r);
            }
            let cap = domain.len().max(1);
            let mut t = auto_horizon_start(request).min(cap);
            loop {
                if feasible_within(t, &domain) {
                    break t;
                }
                if t >= cap {
                    let mut r = PlanResult::not_found(algorithm, 0);
                    r.horizon = Some(t);
                    r.pruned_states = Some(0);
                    r.best_avg_gain = tightest(t, &domain);
                    r.runtime_s = t0.elapsed().as_secs_f64();
                    return Ok(r);
                }
                t = (2 * t).min(cap);
            }
        }
    };

    let best = tightest(horizon, &domain);
    let table = solve_domain(domain, start, goal, horizon, request.threshold, opts);
    let mut result = match table.start_value {
        Some(_) => {
            let path = table.reconstruct(start);
            PlanResult::from_path(algorithm, map, path, request.threshold, table.expanded)
        }
        None => {
            let mut r = PlanResult::not_found(algorithm, table.expanded);
            r.best_avg_gain = best;
            r
        }
    };
    result.horizon = Some(horizon);
    result.pruned_states = Some(table.pruned);
    result.runtime_s = t0.elapsed().as_secs_f64();
    Ok(result)
}

/// Shortest path whose average gain over all waypoints meets the threshold.
pub fn plan_dpwa(map: &GridMap, request: &PlanRequest, opts: &DpOptions) -> Result<PlanResult> {
    plan_on(map, request, &vec![true; map.len()], opts, Algorithm::DpWa)
}

/// DP-WA* restricted to the union of the focus areas.
pub fn plan_dpwa_masked(map: &GridMap, request: &PlanRequest, mask: &FocusAreaSet, opts: &DpOptions) -> Result<PlanResult> {
    if mask.areas().is_empty() {
        return Err(Error::Input("focus mask has no areas".into()));
    }
    let admitted = mask.mask_for(map);
    request.validate(map)?;
    for (endpoint, cell) in [("start", request.start), ("goal", request.goal)] {
        if !admitted[map.index(cell)] {
            return Err(Error::OutsideMask { endpoint, cell });
        }
    }
    plan_on(map, request, &admitted, opts, Algorithm::ScottDpWa)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_from_rows(rows: &[&[u8]]) -> GridMap {
        // rows given top (north) first
        let h = rows.len();
        let w = rows[0].len();
        let mut tenths = vec![0; w * h];
        for (i, r) in rows.iter().enumerate() {
            let row = h - 1 - i;
            tenths[row * w..(row + 1) * w].copy_from_slice(r);
        }
        GridMap::from_tenths(w, h, 1.0, [0.0, 0.0], tenths, vec![false; w * h]).unwrap()
    }

    #[test]
    fn state_count_examples() {
        let mut obstacles = vec![true; 9];
        obstacles[0] = false;
        obstacles[8] = false;
        let map = GridMap::from_tenths(3, 3, 1.0, [0.0, 0.0], vec![5; 9], obstacles).unwrap();
        assert_eq!(state_count(&map, 1), 84);
    }

    #[test]
    fn pruning_threshold_substitution() {
        // T = 4, k + 1 = 2, G = 0.5: W_2 + 2 >= 2.5  <=>  units >= 5
        assert!(!admits(4, 2, 4, 0.5));
        assert!(admits(5, 2, 4, 0.5));
    }

    #[test]
    fn boundary_condition_at_goal() {
        let map = map_from_rows(&[&[5, 5, 5]]);
        let req = PlanRequest::new(CellIndex::new(0, 0), CellIndex::new(2, 0), 0.5);
        let opts = DpOptions { pruning: false, retain_values: true, ..DpOptions::default() };
        let table = solve_table(&map, &req, &[true; 3], 3, &opts).unwrap();
        let goal = CellIndex::new(2, 0);
        // W/(k+1) >= G -> 0 at any k; below G at k = T -> inf
        let v = |k, w| table.value(&map, DpState { cell: goal, step: k, gain_units: w }).unwrap();
        assert_eq!(v(3, 20), Some(PathCost::ZERO));
        assert_eq!(v(3, 19), None);
        assert_eq!(v(1, 10), Some(PathCost::ZERO));
    }

    #[test]
    fn detours_through_high_gain_row() {
        let map = map_from_rows(&[&[10, 10, 10, 10], &[1, 1, 1, 1], &[1, 1, 1, 1], &[1, 1, 1, 1]]);
        let req = PlanRequest::new(CellIndex::new(0, 0), CellIndex::new(3, 0), 0.6);
        let astar = crate::planner::plan_astar(&map, &req).unwrap();
        // six low-gain waypoints are unavoidable and eight top-row visits
        // (13 steps) are needed: T = 12 is too short, auto doubles to 24 and
        // caps at the 16 admitted cells
        let short = plan_dpwa(&map, &req, &DpOptions::with_horizon(Horizon::Fixed(12))).unwrap();
        assert!(!short.found());
        let dp = plan_dpwa(&map, &req, &DpOptions::default()).unwrap();
        assert_eq!(dp.waypoints.len(), 14);
        assert_eq!(dp.horizon, Some(16));
        assert_eq!(astar.path_length, 3.0);
        assert!(dp.feasible, "{dp:?}");
        assert!(dp.avg_gain >= 0.6 - 1e-9);
        assert!(dp.waypoints.iter().any(|c| c.row == 3));
        assert!(dp.path_length > astar.path_length);
    }

    #[test]
    fn horizon_too_short_is_infeasible() {
        let map = map_from_rows(&[&[5, 5, 5, 5, 5]]);
        let req = PlanRequest::new(CellIndex::new(0, 0), CellIndex::new(4, 0), 0.1);
        let r = plan_dpwa(&map, &req, &DpOptions::with_horizon(Horizon::Fixed(3))).unwrap();
        assert!(!r.found());
        assert_eq!(r.horizon, Some(3));
    }

    #[test]
    fn unreachable_threshold_reports_best_average() {
        let map = map_from_rows(&[&[2, 3, 2]]);
        let req = PlanRequest::new(CellIndex::new(0, 0), CellIndex::new(2, 0), 0.9);
        let r = plan_dpwa(&map, &req, &DpOptions::default()).unwrap();
        assert!(!r.feasible);
        let best = r.best_avg_gain.unwrap();
        assert!((0.7 / 3.0 - 1e-12..0.9).contains(&best), "{best}");
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let map = map_from_rows(&[&[9, 2, 8, 4, 7], &[3, 1, 1, 6, 2], &[5, 8, 2, 1, 9], &[1, 4, 6, 3, 2]]);
        let req = PlanRequest::new(CellIndex::new(0, 0), CellIndex::new(4, 3), 0.55);
        let par = plan_dpwa(&map, &req, &DpOptions::default()).unwrap();
        let seq = plan_dpwa(&map, &req, &DpOptions { parallel: false, ..DpOptions::default() }).unwrap();
        assert_eq!(par.waypoints, seq.waypoints);
        assert_eq!(par.expanded_states, seq.expanded_states);
        assert_eq!(par.pruned_states, seq.pruned_states);
    }

    #[test]
    fn ties_prefer_terminate_then_compass_order() {
        // empty 2x2: from (0,0) to (1,1) diagonal is strictly shortest; from
        // (0,0) to (1,0) going E is the only 1-step option.
        let map = map_from_rows(&[&[5, 5], &[5, 5]]);
        let req = PlanRequest::new(CellIndex::new(0, 0), CellIndex::new(0, 1), 0.0);
        let r = plan_dpwa(&map, &req, &DpOptions::with_horizon(Horizon::Fixed(4))).unwrap();
        assert_eq!(r.waypoints, vec![CellIndex::new(0, 0), CellIndex::new(0, 1)]);
    }
}
