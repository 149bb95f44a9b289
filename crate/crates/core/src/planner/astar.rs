use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::{Algorithm, PathCost, PlanRequest, PlanResult};
use crate::error::Result;
use crate::grid::{CellIndex, GridMap};

/// Accumulated-cost model for the best-first search.
trait Objective {
    type Cost: Copy + PartialOrd;

    fn zero(&self) -> Self::Cost;
    fn extend(&self, g: Self::Cost, to: CellIndex, diagonal: bool) -> Self::Cost;
    fn value(&self, g: Self::Cost) -> f64;
}

/// Plain Euclidean length.
struct Distance {
    cell_size: f64,
}

impl Objective for Distance {
    type Cost = PathCost;

    fn zero(&self) -> PathCost {
        PathCost::ZERO
    }

    fn extend(&self, g: PathCost, _to: CellIndex, diagonal: bool) -> PathCost {
        g + PathCost::step(diagonal)
    }

    fn value(&self, g: PathCost) -> f64 {
        g.meters(self.cell_size)
    }
}

/// Length plus `1 / (gain + ε)` charged on each entered cell.
struct InverseGain<'a> {
    map: &'a GridMap,
    epsilon: f64,
}

impl Objective for InverseGain<'_> {
    type Cost = f64;

    fn zero(&self) -> f64 {
        0.0
    }

    fn extend(&self, g: f64, to: CellIndex, diagonal: bool) -> f64 {
        g + nwa_step_cost(self.map, to, diagonal, self.epsilon)
    }

    fn value(&self, g: f64) -> f64 {
        g
    }
}

fn nwa_step_cost(map: &GridMap, to: CellIndex, diagonal: bool, epsilon: f64) -> f64 {
    let c = if diagonal { std::f64::consts::SQRT_2 } else { 1.0 } * map.cell_size();
    c + 1.0 / (map.gain(to) + epsilon)
}

/// N-WA* objective of an arbitrary path: the start cell is free, every
/// entered cell pays its movement cost plus the inverse-gain term.
pub fn nwa_path_cost(map: &GridMap, waypoints: &[CellIndex], epsilon: f64) -> f64 {
    waypoints
        .windows(2)
        .map(|w| {
            let diagonal = w[0].col != w[1].col && w[0].row != w[1].row;
            nwa_step_cost(map, w[1], diagonal, epsilon)
        })
        .sum()
}

struct Frontier {
    f: f64,
    g: f64,
    index: usize,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

impl Ord for Frontier {
    // BinaryHeap is a max-heap: the "greatest" entry pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct SearchOutcome {
    path: Option<Vec<CellIndex>>,
    expanded: u64,
}

/// Best-first search with a Euclidean heuristic. Among equal-f entries the
/// deeper one (larger g) pops first, then the lower row-major index.
fn best_first<O: Objective>(map: &GridMap, start: CellIndex, goal: CellIndex, objective: &O) -> SearchOutcome {
    let n = map.len();
    let mut best: Vec<Option<O::Cost>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    let h = |c: CellIndex| c.euclidean(goal) * map.cell_size();

    let s = map.index(start);
    let zero = objective.zero();
    best[s] = Some(zero);
    heap.push(Frontier { f: h(start), g: objective.value(zero), index: s });
    let mut expanded = 0;

    while let Some(Frontier { index, .. }) = heap.pop() {
        if closed[index] {
            continue;
        }
        closed[index] = true;
        expanded += 1;
        let cell = map.cell_at(index);
        if cell == goal {
            let mut path = vec![cell];
            let mut at = index;
            while parent[at] != usize::MAX {
                at = parent[at];
                path.push(map.cell_at(at));
            }
            path.reverse();
            return SearchOutcome { path: Some(path), expanded };
        }
        let g = best[index].expect("closed node has a cost");
        for (mv, next) in map.neighbors(cell) {
            if !map.step_allowed(cell, next) {
                continue;
            }
            let ni = map.index(next);
            if closed[ni] {
                continue;
            }
            let ng = objective.extend(g, next, mv.is_diagonal());
            if best[ni].is_none_or(|old| ng < old) {
                best[ni] = Some(ng);
                parent[ni] = index;
                let gv = objective.value(ng);
                heap.push(Frontier { f: gv + h(next), g: gv, index: ni });
            }
        }
    }
    SearchOutcome { path: None, expanded }
}

fn finish(algorithm: Algorithm, map: &GridMap, request: &PlanRequest, out: SearchOutcome, t0: Instant) -> PlanResult {
    let mut result = match out.path {
        Some(path) => PlanResult::from_path(algorithm, map, path, request.threshold, out.expanded),
        None => PlanResult::not_found(algorithm, out.expanded),
    };
    result.runtime_s = t0.elapsed().as_secs_f64();
    result
}

/// Shortest 8-connected path by Euclidean length. The gain threshold is
/// reported through `feasible` but never enforced.
pub fn plan_astar(map: &GridMap, request: &PlanRequest) -> Result<PlanResult> {
    request.validate(map)?;
    let t0 = Instant::now();
    let objective = Distance { cell_size: map.cell_size() };
    let out = best_first(map, request.start, request.goal, &objective);
    Ok(finish(Algorithm::AStar, map, request, out, t0))
}

/// Naive wireless-aware A*: minimizes length plus the inverse gain of every
/// entered cell. Biases toward high gain without enforcing the threshold.
pub fn plan_nwa(map: &GridMap, request: &PlanRequest) -> Result<PlanResult> {
    request.validate(map)?;
    let t0 = Instant::now();
    let objective = InverseGain { map, epsilon: request.epsilon };
    let out = best_first(map, request.start, request.goal, &objective);
    Ok(finish(Algorithm::NWa, map, request, out, t0))
}
