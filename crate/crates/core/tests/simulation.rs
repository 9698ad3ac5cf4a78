mod common;

use dualsource::config::{synthetic, Hyperparams};
use dualsource::exact::{policy_iteration, ExactPolicy, SolverConfig};
use dualsource::heuristics::{bsp_solve, BaseStockPolicy, Evaluator};
use dualsource::runner::Runner;
use dualsource::sim::report::breakdown_rows;
use dualsource::sim::{estimate_cost, paired_difference, run_replications, EvalConfig, Estimate};
use dualsource::{Model, Source};

fn cfg(replications: usize, periods: usize, warmup: usize, seed: u64) -> EvalConfig {
    EvalConfig {
        replications,
        periods,
        warmup,
        seed,
    }
}

#[test]
fn long_run_average_of_the_optimal_policy_is_g() {
    let p = common::micro();
    let model = Model::new(p).unwrap();
    let sol = policy_iteration(&model, &SolverConfig::default()).unwrap();
    let est = estimate_cost(&model, &ExactPolicy::new(&sol), &cfg(10, 101_000, 1_000, 5)).unwrap();
    let z = (est.mean - sol.g) / est.std_error;
    assert!(z.abs() <= 3.0, "simulated {} vs g {} ({z:.2} SE)", est.mean, sol.g);
}

#[test]
fn doubling_replications_shrinks_the_half_width() {
    let p = common::micro();
    let model = Model::new(p.clone()).unwrap();
    let policy = BaseStockPolicy::new(Source::Cm, 1, &p);
    let mean_hw = |r: usize| {
        let hws: Vec<f64> = (0..40)
            .map(|k| estimate_cost(&model, &policy, &cfg(r, 1_100, 100, 1000 + k)).unwrap().half_width)
            .collect();
        hws.iter().sum::<f64>() / hws.len() as f64
    };
    // The t quantile falls from 2.09 to 2.02 as well.
    let expected = (2.0f64).sqrt().recip() * 2.023 / 2.093;
    let ratio = mean_hw(40) / mean_hw(20);
    assert!((ratio - expected).abs() < 0.08, "ratio {ratio} vs {expected}");
}

#[test]
fn pairing_reduces_the_variance_of_a_difference() {
    let p = common::micro();
    let model = Model::new(p.clone()).unwrap();
    let a = BaseStockPolicy::new(Source::Cm, 1, &p);
    let b = BaseStockPolicy::new(Source::Cm, 2, &p);
    let c = cfg(30, 2_200, 200, 4);
    let paired = paired_difference(&model, &a, &b, &c).unwrap();
    let ra = run_replications(&model, &a, &c).unwrap();
    let rb = run_replications(&model, &b, &cfg(30, 2_200, 200, 5)).unwrap();
    let xs: Vec<f64> = ra.iter().zip(&rb).map(|(x, y)| x.average_cost() - y.average_cost()).collect();
    let unpaired = Estimate::from_samples(&xs);
    assert!(
        paired.std_error < unpaired.std_error,
        "paired {} vs unpaired {}",
        paired.std_error,
        unpaired.std_error
    );
}

#[test]
fn warmup_matters_less_as_runs_grow() {
    let p = synthetic(1).unwrap();
    let model = Model::new(p.clone()).unwrap();
    let policy = BaseStockPolicy::new(Source::Cm, 2, &p);
    let diff = |t: usize| {
        let cold = estimate_cost(&model, &policy, &cfg(20, t, 0, 8)).unwrap().mean;
        let warm = estimate_cost(&model, &policy, &cfg(20, t + 500, 500, 8)).unwrap().mean;
        (cold - warm).abs()
    };
    let short = diff(500);
    let long = diff(50_000);
    assert!(long < short, "difference {long} at 50000 periods vs {short} at 500");
}

#[test]
fn iwa_cuts_backorders_on_instance_three() {
    let p = synthetic(3).unwrap();
    let model = Model::new(p.clone()).unwrap();
    let runner = Runner::new(Hyperparams::default(), None).unwrap();
    let iwa = runner.iwa(&p).unwrap();
    let bsp = bsp_solve(&p, &Evaluator::Exact(SolverConfig::default())).unwrap();
    let c = cfg(10, 11_000, 1_000, 3);
    let (iwa_row, _) = breakdown_rows("3", "iwa", &run_replications(&model, &iwa.inner_policy, &c).unwrap());
    let (bsp_row, _) = breakdown_rows("3", "bsp", &run_replications(&model, &bsp.policy, &c).unwrap());
    assert!(
        iwa_row.backorder.mean + iwa_row.backorder.half_width < bsp_row.backorder.mean - bsp_row.backorder.half_width,
        "backorder cost {} under IWA vs {} under BSP",
        iwa_row.backorder.mean,
        bsp_row.backorder.mean
    );
}
