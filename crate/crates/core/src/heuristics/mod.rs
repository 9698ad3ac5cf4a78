//! Rule-based policies: single-source base stock, the dual-index policy and
//! the iterative weight adjustment wrapper.

pub mod bsp;
pub mod dual_index;
pub mod iwa;

pub use bsp::{bsp_solve, BaseStockPolicy, BspResult};
pub use dual_index::{
    dual_index_decide, dual_index_solve, DualIndexConfig, DualIndexParams, DualIndexPolicy, DualIndexSolution,
};
pub use iwa::{
    gamma_from_rho, iwa, rho_from_gamma, trace_rows, DualIndexInner, ExactInner, InnerSolver, IwaConfig, IwaResult, IwaStep,
};

use crate::dynamics::Model;
use crate::error::Result;
use crate::exact::{evaluate_reachable, SolverConfig};
use crate::policy::Policy;
use crate::sim::{estimate_cost, EvalConfig};

/// How a candidate policy's long-run cost is measured.
#[derive(Debug, Clone)]
pub enum Evaluator {
    /// Exact evaluation on the states reachable from the initial state.
    Exact(SolverConfig),
    Simulation(EvalConfig),
}

impl Evaluator {
    pub fn cost(&self, model: &Model, policy: &impl Policy) -> Result<f64> {
        match self {
            Evaluator::Exact(cfg) => Ok(evaluate_reachable(model, |s| policy.decide(s), cfg)?.1.g),
            Evaluator::Simulation(cfg) => Ok(estimate_cost(model, policy, cfg)?.mean),
        }
    }
}
