//! Brute-force reference implementations used to check the planners.
//!
//! None of these call into the planners; movement legality is re-derived
//! here from the map's raw obstacle and gain arrays.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wanav_core::grid::{synthesize_map, SyntheticSpec};
use wanav_core::planner::PathCost;
use wanav_core::{CellIndex, GridMap, PlanRequest};

/// Random map with gains uniform in tenths and obstacles with probability
/// `obstacle_p`.
pub fn random_map(seed: u64, width: usize, height: usize, obstacle_p: f64) -> GridMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = width * height;
    let tenths: Vec<u8> = (0..n).map(|_| rng.random_range(0..=10)).collect();
    let obstacles: Vec<bool> = (0..n).map(|_| rng.random_bool(obstacle_p)).collect();
    GridMap::from_tenths(width, height, 1.0, [0.0, 0.0], tenths, obstacles).unwrap()
}

/// Random distinct traversable start and goal, if the map has two such cells.
pub fn random_endpoints(map: &GridMap, seed: u64) -> Option<(CellIndex, CellIndex)> {
    let free: Vec<CellIndex> = map.traversable_cells().collect();
    if free.len() < 2 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let a = rng.random_range(0..free.len());
    let mut b = rng.random_range(0..free.len() - 1);
    if b >= a {
        b += 1;
    }
    Some((free[a], free[b]))
}

/// Open `n × n` map with uniform gain.
pub fn empty_square(n: usize) -> GridMap {
    GridMap::from_tenths(n, n, 1.0, [0.0, 0.0], vec![5; n * n], vec![false; n * n]).unwrap()
}

/// A wall-and-access-point map in the style of the shipped scenarios.
pub fn synthetic(width: usize, height: usize, seed: u64) -> GridMap {
    let mut spec = SyntheticSpec::new(width, height, vec![[width as f64 * 0.5, height as f64 * 0.8]]);
    spec.random_obstacles = 2;
    spec.seed = seed;
    synthesize_map(&spec).unwrap()
}

fn free(map: &GridMap, col: i64, row: i64) -> bool {
    col >= 0
        && row >= 0
        && (col as usize) < map.width()
        && (row as usize) < map.height()
        && !map.obstacle_slice()[row as usize * map.width() + col as usize]
}

/// Legal successors: in-bounds free cells, diagonals only when both
/// orthogonal side cells are free.
pub fn successors(map: &GridMap, c: CellIndex) -> Vec<(CellIndex, bool)> {
    let (col, row) = (c.col as i64, c.row as i64);
    let mut out = Vec::new();
    for dc in -1..=1 {
        for dr in -1..=1 {
            if (dc, dr) == (0, 0) || !free(map, col + dc, row + dr) {
                continue;
            }
            let diagonal = dc != 0 && dr != 0;
            if diagonal && !(free(map, col + dc, row) && free(map, col, row + dr)) {
                continue;
            }
            out.push((CellIndex::new((col + dc) as usize, (row + dr) as usize), diagonal));
        }
    }
    out
}

fn tenths(map: &GridMap, c: CellIndex) -> u64 {
    u64::from(map.gain_tenths_slice()[c.row * map.width() + c.col])
}

/// Exact length of a waypoint list, or `None` if any step is illegal.
pub fn walk_cost(map: &GridMap, path: &[CellIndex]) -> Option<PathCost> {
    if path.iter().any(|c| !free(map, c.col as i64, c.row as i64)) {
        return None;
    }
    path.windows(2).try_fold(PathCost::ZERO, |acc, w| {
        successors(map, w[0]).into_iter().find(|(n, _)| *n == w[1]).map(|(_, d)| acc + PathCost::step(d))
    })
}

/// Uniform-cost search over exact path costs.
pub fn dijkstra(map: &GridMap, start: CellIndex, goal: CellIndex) -> Option<PathCost> {
    let mut best: HashMap<CellIndex, PathCost> = HashMap::from([(start, PathCost::ZERO)]);
    let mut heap = BinaryHeap::from([Reverse((PathCost::ZERO, start.row, start.col))]);
    while let Some(Reverse((cost, row, col))) = heap.pop() {
        let c = CellIndex::new(col, row);
        if c == goal {
            return Some(cost);
        }
        if best.get(&c).is_some_and(|&b| b < cost) {
            continue;
        }
        for (n, diagonal) in successors(map, c) {
            let next = cost + PathCost::step(diagonal);
            if best.get(&n).is_none_or(|&b| next < b) {
                best.insert(n, next);
                heap.push(Reverse((next, n.row, n.col)));
            }
        }
    }
    None
}

/// Minimum of `Σ c(step) + 1/(g(entered) + ε)` over all simple paths,
/// by depth-first enumeration with branch and bound. A branch is also cut
/// when it reaches a cell more expensively than an earlier branch did.
pub fn nwa_brute_force(map: &GridMap, start: CellIndex, goal: CellIndex, epsilon: f64) -> Option<f64> {
    struct Search<'a> {
        map: &'a GridMap,
        goal: CellIndex,
        epsilon: f64,
        visited: Vec<bool>,
        reached: Vec<f64>,
        best: f64,
    }

    impl Search<'_> {
        fn step_cost(&self, to: CellIndex, diagonal: bool) -> f64 {
            let c = if diagonal { std::f64::consts::SQRT_2 } else { 1.0 } * self.map.cell_size();
            c + 1.0 / (tenths(self.map, to) as f64 / 10.0 + self.epsilon)
        }

        fn lower_bound(&self, from: CellIndex) -> f64 {
            from.euclidean(self.goal) * self.map.cell_size() + from.chebyshev(self.goal) as f64 / (1.0 + self.epsilon)
        }

        fn dfs(&mut self, c: CellIndex, cost: f64) {
            let i = c.row * self.map.width() + c.col;
            if cost > self.reached[i] * (1.0 + 1e-12) {
                return;
            }
            self.reached[i] = self.reached[i].min(cost);
            if c == self.goal {
                self.best = self.best.min(cost);
                return;
            }
            let mut next: Vec<(f64, CellIndex)> = successors(self.map, c)
                .into_iter()
                .filter(|(n, _)| !self.visited[n.row * self.map.width() + n.col])
                .map(|(n, d)| (cost + self.step_cost(n, d), n))
                .collect();
            next.sort_by(|a, b| (a.0 + self.lower_bound(a.1)).total_cmp(&(b.0 + self.lower_bound(b.1))));
            for (g, n) in next {
                if g + self.lower_bound(n) >= self.best {
                    continue;
                }
                let i = n.row * self.map.width() + n.col;
                self.visited[i] = true;
                self.dfs(n, g);
                self.visited[i] = false;
            }
        }
    }

    let mut search = Search { map, goal, epsilon, visited: vec![false; map.len()], reached: vec![f64::INFINITY; map.len()], best: f64::INFINITY };
    search.visited[start.row * map.width() + start.col] = true;
    search.dfs(start, 0.0);
    search.best.is_finite().then_some(search.best)
}

/// Cheapest walk of at most `horizon` steps from start to goal whose gain
/// over all waypoints is at least `threshold_tenths` per waypoint.
///
/// Forward enumeration over `(cell, accumulated tenths)` per step count,
/// keeping the cheapest walk per pair.
pub fn dp_enumeration(map: &GridMap, request: &PlanRequest, threshold_tenths: u64, horizon: usize) -> Option<PathCost> {
    let mut layer: HashMap<(CellIndex, u64), PathCost> = HashMap::from([((request.start, tenths(map, request.start)), PathCost::ZERO)]);
    let mut best: Option<PathCost> = None;
    for k in 0..=horizon {
        for (&(c, w), &cost) in &layer {
            if c == request.goal && w >= threshold_tenths * (k as u64 + 1) && best.is_none_or(|b| cost < b) {
                best = Some(cost);
            }
        }
        if k == horizon {
            break;
        }
        let mut next: HashMap<(CellIndex, u64), PathCost> = HashMap::new();
        for (&(c, w), &cost) in &layer {
            for (n, diagonal) in successors(map, c) {
                let key = (n, w + tenths(map, n));
                let val = cost + PathCost::step(diagonal);
                next.entry(key).and_modify(|v| *v = (*v).min(val)).or_insert(val);
            }
        }
        layer = next;
    }
    best
}

/// Same objective as [`dp_enumeration`] by listing every walk; only for
/// tiny maps and horizons.
pub fn dp_all_walks(map: &GridMap, request: &PlanRequest, threshold_tenths: u64, horizon: usize) -> Option<PathCost> {
    #[allow(clippy::too_many_arguments)]
    fn go(
        map: &GridMap,
        goal: CellIndex,
        gt: u64,
        left: usize,
        c: CellIndex,
        w: u64,
        n: u64,
        cost: PathCost,
        best: &mut Option<PathCost>,
    ) {
        if c == goal && w >= gt * n && best.is_none_or(|b| cost < b) {
            *best = Some(cost);
        }
        if left == 0 {
            return;
        }
        for (next, diagonal) in successors(map, c) {
            go(map, goal, gt, left - 1, next, w + tenths(map, next), n + 1, cost + PathCost::step(diagonal), best);
        }
    }
    let mut best = None;
    go(map, request.goal, threshold_tenths, horizon, request.start, tenths(map, request.start), 1, PathCost::ZERO, &mut best);
    best
}
