mod common;

use common::*;
use proptest::prelude::*;
use wanav_core::dpwa::DpOptions;
use wanav_core::focus::build_focus_areas;
use wanav_core::planner::{nwa_path_cost, DEFAULT_EPSILON};
use wanav_core::{plan_astar, plan_dpwa, plan_dpwa_masked, plan_nwa, CellIndex, GridMap, Horizon, PlanRequest, PlanResult};

fn request(map: &GridMap, seed: u64, threshold: f64) -> Option<PlanRequest> {
    random_endpoints(map, seed).map(|(s, g)| PlanRequest::new(s, g, threshold))
}

fn assert_well_formed(map: &GridMap, req: &PlanRequest, r: &PlanResult) {
    let path = &r.waypoints;
    assert_eq!(path.first(), Some(&req.start));
    assert_eq!(path.last(), Some(&req.goal));
    let cost = walk_cost(map, path).expect("every step is legal");
    assert!((cost.meters(map.cell_size()) - r.path_length).abs() < 1e-9);
    let mean = path.iter().map(|&c| map.gain(c)).sum::<f64>() / path.len() as f64;
    assert!((mean - r.avg_gain).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_oracles_agree(seed in any::<u64>(), g in 0u64..=8, horizon in 1usize..=6) {
        let map = random_map(seed, 3, 3, 0.15);
        let Some(req) = request(&map, seed, g as f64 / 10.0) else { return Ok(()) };
        prop_assert_eq!(dp_enumeration(&map, &req, g, horizon), dp_all_walks(&map, &req, g, horizon));
    }

    #[test]
    fn dpwa_matches_enumeration(seed in any::<u64>(), g in 0u64..=9, horizon in 1usize..=10) {
        let map = random_map(seed, 5, 5, 0.2);
        let Some(req) = request(&map, seed, g as f64 / 10.0) else { return Ok(()) };
        let r = plan_dpwa(&map, &req, &DpOptions::with_horizon(Horizon::Fixed(horizon))).unwrap();
        let oracle = dp_enumeration(&map, &req, g, horizon);
        prop_assert_eq!(r.feasible, oracle.is_some());
        if let Some(best) = oracle {
            assert_well_formed(&map, &req, &r);
            prop_assert_eq!(walk_cost(&map, &r.waypoints), Some(best));
            prop_assert!(r.waypoints.len() <= horizon + 1);
        } else {
            prop_assert!(r.waypoints.is_empty());
        }
    }

    #[test]
    fn auto_horizon_is_feasible_when_some_walk_is(seed in any::<u64>(), g in 0u64..=9) {
        let map = random_map(seed, 5, 4, 0.15);
        let Some(req) = request(&map, seed, g as f64 / 10.0) else { return Ok(()) };
        let r = plan_dpwa(&map, &req, &DpOptions::default()).unwrap();
        let cap = map.traversable_count();
        prop_assert_eq!(r.feasible, dp_enumeration(&map, &req, g, cap).is_some());
        if r.feasible {
            assert_well_formed(&map, &req, &r);
        }
    }

    #[test]
    fn astar_matches_dijkstra(seed in any::<u64>()) {
        let map = random_map(seed, 8, 8, 0.25);
        let Some(req) = request(&map, seed, 0.0) else { return Ok(()) };
        let r = plan_astar(&map, &req).unwrap();
        let oracle = dijkstra(&map, req.start, req.goal);
        prop_assert_eq!(r.found(), oracle.is_some());
        if r.found() {
            assert_well_formed(&map, &req, &r);
            prop_assert_eq!(walk_cost(&map, &r.waypoints), oracle);
        }
    }

    #[test]
    fn nwa_matches_brute_force(seed in any::<u64>()) {
        let map = random_map(seed, 5, 5, 0.2);
        let Some(req) = request(&map, seed, 0.5) else { return Ok(()) };
        let r = plan_nwa(&map, &req).unwrap();
        let oracle = nwa_brute_force(&map, req.start, req.goal, DEFAULT_EPSILON);
        prop_assert_eq!(r.found(), oracle.is_some());
        if let Some(best) = oracle {
            assert_well_formed(&map, &req, &r);
            let cost = nwa_path_cost(&map, &r.waypoints, DEFAULT_EPSILON);
            prop_assert!((cost - best).abs() <= 1e-9 * best.max(1.0), "{} vs {}", cost, best);
        }
    }

    #[test]
    fn euclidean_heuristic_is_admissible(seed in any::<u64>()) {
        let map = random_map(seed, 7, 7, 0.25);
        let Some(goal) = map.traversable_cells().last() else { return Ok(()) };
        for c in map.traversable_cells() {
            if let Some(d) = dijkstra(&map, c, goal) {
                prop_assert!(c.euclidean(goal) * map.cell_size() <= d.meters(map.cell_size()) + 1e-12);
            }
        }
    }

    #[test]
    fn full_mask_changes_nothing(seed in any::<u64>(), g in 0u64..=7) {
        let map = random_map(seed, 6, 5, 0.15);
        let Some(req) = request(&map, seed, g as f64 / 10.0) else { return Ok(()) };
        let opts = DpOptions::default();
        let mask = build_focus_areas(&map, &[req.start], 1, 100.0).unwrap();
        let mut plain = plan_dpwa(&map, &req, &opts).unwrap();
        let mut masked = plan_dpwa_masked(&map, &req, &mask, &opts).unwrap();
        plain.runtime_s = 0.0;
        masked.runtime_s = 0.0;
        masked.algorithm = plain.algorithm;
        prop_assert_eq!(plain, masked);
    }

    #[test]
    fn parallel_layers_match_sequential(seed in any::<u64>(), g in 0u64..=8) {
        let map = random_map(seed, 7, 6, 0.15);
        let Some(req) = request(&map, seed, g as f64 / 10.0) else { return Ok(()) };
        let mut par = plan_dpwa(&map, &req, &DpOptions { parallel: true, ..DpOptions::default() }).unwrap();
        let mut seq = plan_dpwa(&map, &req, &DpOptions { parallel: false, ..DpOptions::default() }).unwrap();
        par.runtime_s = 0.0;
        seq.runtime_s = 0.0;
        prop_assert_eq!(par, seq);
    }

    #[test]
    fn pruning_never_changes_the_optimum(seed in any::<u64>(), g in 1u64..=8, horizon in 2usize..=10) {
        let map = random_map(seed, 5, 5, 0.15);
        let Some(req) = request(&map, seed, g as f64 / 10.0) else { return Ok(()) };
        let on = plan_dpwa(&map, &req, &DpOptions { horizon: Horizon::Fixed(horizon), ..DpOptions::default() }).unwrap();
        let off = plan_dpwa(&map, &req, &DpOptions { horizon: Horizon::Fixed(horizon), pruning: false, ..DpOptions::default() }).unwrap();
        prop_assert_eq!(on.feasible, off.feasible);
        prop_assert_eq!(walk_cost(&map, &on.waypoints), walk_cost(&map, &off.waypoints));
        prop_assert!(on.expanded_states <= off.expanded_states);
    }
}

#[test]
fn uniform_gain_corridor_gives_astar_path() {
    let map = GridMap::from_tenths(9, 3, 1.0, [0.0, 0.0], vec![6; 27], vec![false; 27]).unwrap();
    let req = PlanRequest::new(CellIndex::new(0, 1), CellIndex::new(8, 1), 0.5);
    assert_eq!(plan_nwa(&map, &req).unwrap().waypoints, plan_astar(&map, &req).unwrap().waypoints);
}

#[test]
fn nwa_gain_dominates_astar_on_average() {
    let (mut nwa, mut astar, mut n) = (0.0, 0.0, 0);
    for seed in 0..100 {
        let map = synthetic(16, 12, seed);
        let Some(req) = request(&map, seed, 0.5) else { continue };
        let (a, b) = (plan_astar(&map, &req).unwrap(), plan_nwa(&map, &req).unwrap());
        if a.found() && b.found() {
            astar += a.avg_gain;
            nwa += b.avg_gain;
            n += 1;
        }
    }
    assert!(n >= 50, "only {n} solvable instances");
    assert!(nwa / n as f64 >= astar / n as f64, "N-WA* {} < A* {}", nwa / n as f64, astar / n as f64);
}

#[test]
fn dpwa_gain_dominates_nwa_when_both_feasible() {
    for seed in 0..40 {
        let map = synthetic(10, 8, seed);
        let Some(req) = request(&map, seed, 0.5) else { continue };
        let dp = plan_dpwa(&map, &req, &DpOptions::default()).unwrap();
        let nwa = plan_nwa(&map, &req).unwrap();
        if dp.feasible && nwa.feasible {
            assert!(dp.path_length <= nwa.path_length + 1e-9, "seed {seed}");
        }
        let astar = plan_astar(&map, &req).unwrap();
        if astar.found() && dp.found() {
            assert!(astar.path_length <= dp.path_length + 1e-9, "seed {seed}");
        }
    }
}
