mod common;

use dualsource::exact::{simplify_params, SolverConfig};
use dualsource::heuristics::{
    bsp_solve, dual_index_solve, BaseStockPolicy, DualIndexConfig, DualIndexParams, DualIndexPolicy, Evaluator,
};
use dualsource::sim::{estimate_cost, EvalConfig};
use dualsource::Model;

#[test]
fn bsp_costs_by_simulation_match_exact_evaluation() {
    let p = common::micro();
    let model = Model::new(p.clone()).unwrap();
    let exact = bsp_solve(&p, &Evaluator::Exact(SolverConfig::default())).unwrap();
    let cfg = EvalConfig {
        replications: 50,
        periods: 21_000,
        warmup: 1_000,
        seed: 11,
    };
    for &(source, level, cost) in &exact.table {
        let est = estimate_cost(&model, &BaseStockPolicy::new(source, level, &p), &cfg).unwrap();
        let z = (est.mean - cost) / est.std_error.max(1e-12);
        assert!(z.abs() <= 3.0, "{source:?} level {level}: simulated {} vs exact {cost} ({z:.2} SE)", est.mean);
    }
}

#[test]
fn dual_index_search_is_near_the_exhaustive_grid() {
    let p = simplify_params(&common::micro(), 0.0).unwrap();
    let exact = Evaluator::Exact(SolverConfig::default());
    let model = Model::new(p.clone()).unwrap();
    let s = p.max_circulating;
    let mut best = f64::INFINITY;
    for delta in 0..=s {
        for z_a in 0..=s - delta {
            let cost = exact.cost(&model, &DualIndexPolicy::new(DualIndexParams { z_a, delta }, &p)).unwrap();
            best = best.min(cost);
        }
    }
    let found = dual_index_solve(&p, &DualIndexConfig::default()).unwrap();
    let cost = exact.cost(&model, &DualIndexPolicy::new(found.di, &p)).unwrap();
    assert!(cost <= 1.01 * best, "search {cost} vs grid {best} at {:?}", found.di);
}
