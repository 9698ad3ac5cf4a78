//! Solves a two-item instance exactly and compares the base-stock policy.

use dualsource::exact::{policy_iteration, SolverConfig};
use dualsource::heuristics::{bsp_solve, Evaluator};
use dualsource::sim::optimality_gap;
use dualsource::{DemandFamily, InstanceParams, Model, ModeParams};

fn main() -> dualsource::Result<()> {
    let params = InstanceParams {
        installed_base: 2,
        max_circulating: 2,
        cm: ModeParams {
            failure_mean: 0.05,
            failure_var: 0.05,
            lead_time: 2,
            unit_price: 100.0,
            order_cost: 20.0,
        },
        am: ModeParams {
            failure_mean: 0.1,
            failure_var: 0.1,
            lead_time: 1,
            unit_price: 150.0,
            order_cost: 0.0,
        },
        batch_size: 1,
        maintenance_cost: 50.0,
        holding_cost: 1.0,
        backorder_cost: 200.0,
        demand: DemandFamily::Poisson,
    };
    let model = Model::new(params.clone())?;
    let sol = policy_iteration(&model, &SolverConfig::default())?;
    println!("optimal g {:.6} over {} states", sol.g, sol.space.len());
    let bsp = bsp_solve(&params, &Evaluator::Exact(SolverConfig::default()))?;
    println!(
        "base stock {:?} up to {}: cost {:.6}, gap {:.2}%",
        bsp.policy.source,
        bsp.policy.level,
        bsp.cost,
        optimality_gap(bsp.cost, sol.g)?
    );
    Ok(())
}
