use wanav_core::focus::{build_focus_areas, fit_max_distance, mask_stats};
use wanav_core::grid::{synthesize_map, CellRect, SyntheticSpec};
use wanav_core::{plan_astar, CellIndex, PlanRequest};

#[test]
fn fitted_radius_cuts_about_half_of_a_large_map() {
    let mut spec = SyntheticSpec::new(94, 41, vec![[20.0, 30.0], [70.0, 10.0]]);
    spec.obstacles = vec![CellRect { min: [30, 0], max: [31, 25] }, CellRect { min: [60, 15], max: [61, 40] }];
    let map = synthesize_map(&spec).unwrap();
    assert_eq!(map.len(), 3854);
    let req = PlanRequest::new(CellIndex::new(2, 5), CellIndex::new(91, 35), 0.5);
    let coarse = plan_astar(&map, &req).unwrap().waypoints;
    for n in 5..=7 {
        let radius = fit_max_distance(&map, &coarse, n, 0.48).unwrap();
        let mask = build_focus_areas(&map, &coarse, n, radius).unwrap();
        let stats = mask_stats(&map, &mask);
        assert!((stats.reduction_fraction - 0.48).abs() <= 0.15, "N = {n}: reduction {}", stats.reduction_fraction);
        let covered = coarse.iter().filter(|&&c| mask.contains(c)).count();
        assert!(covered * 20 >= coarse.len() * 19, "N = {n}: {covered}/{} waypoints covered", coarse.len());
        for c in mask.union() {
            assert!(map.is_traversable(c));
            let near = mask.areas().iter().any(|a| {
                let [x, y] = map.cell_center(c);
                (x - a.center()[0]).hypot(y - a.center()[1]) <= radius + 1e-9
            });
            assert!(near, "{c:?} is outside every area");
        }
    }
}
