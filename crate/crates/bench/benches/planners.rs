use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use wanav_bench::{corner_request, shipped_scenario, square_map};
use wanav_core::scenario::ScottSource;
use wanav_core::{build_focus_areas, plan_astar, plan_dpwa, plan_dpwa_masked, plan_nwa, run_scott, run_scenario, DpOptions, Horizon};

fn classic(c: &mut Criterion) {
    let mut group = c.benchmark_group("classic");
    for n in [16, 32, 64] {
        let map = square_map(n).unwrap();
        let req = corner_request(n, 0.5);
        group.bench_with_input(BenchmarkId::new("astar", n), &n, |b, _| b.iter(|| plan_astar(&map, &req).unwrap()));
        group.bench_with_input(BenchmarkId::new("nwa", n), &n, |b, _| b.iter(|| plan_nwa(&map, &req).unwrap()));
    }
    group.finish();
}

fn dynamic_programming(c: &mut Criterion) {
    let mut group = c.benchmark_group("dpwa");
    group.sample_size(10);
    for n in [8, 12, 16] {
        let map = square_map(n).unwrap();
        let req = corner_request(n, 0.4);
        let opts = DpOptions::with_horizon(Horizon::Fixed(2 * n));
        group.bench_with_input(BenchmarkId::new("fixed_horizon", n), &n, |b, _| b.iter(|| plan_dpwa(&map, &req, &opts).unwrap()));
    }
    group.finish();
}

fn masked(c: &mut Criterion) {
    let scenario = shipped_scenario("across_the_room").unwrap();
    let map = scenario.load_map().unwrap();
    let req = scenario.request(&map).unwrap();
    let opts = scenario.dp_options();
    let optimum = plan_dpwa(&map, &req, &opts).unwrap();
    let mask = build_focus_areas(&map, &optimum.waypoints, scenario.scott.n_areas, 2.0).unwrap();
    let mut group = c.benchmark_group("across_the_room");
    group.sample_size(10);
    group.bench_function("dpwa", |b| b.iter(|| plan_dpwa(&map, &req, &opts).unwrap()));
    group.bench_function("dpwa_masked", |b| b.iter(|| plan_dpwa_masked(&map, &req, &mask, &opts).unwrap()));
    group.bench_function("focus_areas", |b| {
        b.iter(|| build_focus_areas(&map, &optimum.waypoints, scenario.scott.n_areas, 2.0).unwrap())
    });
    let client = scenario.scripted_client(&map, &req, scenario.seed, None, Some(&optimum.waypoints)).unwrap();
    group.bench_function("scott_scripted", |b| b.iter(|| run_scott(&map, &req, &scenario.scott, &client).unwrap()));
    group.finish();
}

fn scenario_runner(c: &mut Criterion) {
    let mut scenario = shipped_scenario("wall_to_wall").unwrap();
    scenario.runs = 1;
    scenario.algorithms = vec!["astar".into(), "nwa".into(), "scott".into()];
    c.bench_function("run_scenario/wall_to_wall_without_dp", |b| {
        b.iter(|| run_scenario(&scenario, ScottSource::Scripted).unwrap())
    });
}

criterion_group!(benches, classic, dynamic_programming, masked, scenario_runner);
criterion_main!(benches);
