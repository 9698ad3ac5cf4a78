//! Exact average-cost solution of small instances by policy iteration, on
//! either the full two-mode model or the single-rate simplification.
//!
//! ```
//! use dualsource::exact::{policy_iteration, SolverConfig};
//! use dualsource::{DemandFamily, InstanceParams, Model, ModeParams};
//!
//! let mode = |mu: f64, lead_time, unit_price, order_cost| ModeParams {
//!     failure_mean: mu,
//!     failure_var: mu,
//!     lead_time,
//!     unit_price,
//!     order_cost,
//! };
//! let params = InstanceParams {
//!     installed_base: 2,
//!     max_circulating: 2,
//!     cm: mode(0.05, 2, 100.0, 20.0),
//!     am: mode(0.1, 1, 150.0, 0.0),
//!     batch_size: 1,
//!     maintenance_cost: 50.0,
//!     holding_cost: 2.0,
//!     backorder_cost: 200.0,
//!     demand: DemandFamily::Poisson,
//! };
//! let model = Model::new(params)?;
//! let solution = policy_iteration(&model, &SolverConfig::default())?;
//! assert!(solution.g > 0.0);
//! assert!(solution.bellman_residual < 1e-9);
//! # Ok::<(), dualsource::Error>(())
//! ```

mod bound;
mod cache;
mod evaluation;
mod io;
mod iteration;
pub mod simplified;
pub mod space;
mod stationary;
mod transitions;

use std::hash::Hash;
use std::sync::Arc;

pub use bound::{determine_s, pipeline_exceedance};
pub use cache::{cache_path, solve_full_cached, SolvedInstance};
pub use evaluation::{evaluate_policy, evaluate_reachable, Evaluation};
pub use io::{read_policy, write_policy, PolicyFile};
pub use iteration::{bellman_residual, policy_iteration, q_values};
pub use simplified::{simplify_params, SimplifiedModel, SimplifiedState};
pub use space::{enumerate_full, StateSpace};
pub use stationary::{check_unichain, order_fractions, stationary_distribution, steady_state_am_fraction};
pub use transitions::Transitions;

use crate::dynamics::{advance, Model};
use crate::error::Result;
use crate::params::InstanceParams;
use crate::policy::Policy;
use crate::state::{feasible_decisions, Decision, FailureRealization, SystemState};

/// A finite MDP whose states can be listed and whose transitions can be
/// enumerated.
pub trait TabularModel: Sync {
    type State: Clone + Eq + Hash + Ord + Send + Sync + std::fmt::Debug;

    fn params(&self) -> &InstanceParams;

    /// Every admissible state, in a deterministic order.
    fn enumerate(&self, cap: usize) -> Result<Vec<Self::State>>;

    /// The state whose relative value is pinned to zero.
    fn reference_state(&self) -> Self::State;

    /// Feasible decisions, lexicographic by `(x_C, x_A)`.
    fn decisions(&self, s: &Self::State) -> Vec<Decision>;

    /// Expected one-period cost.
    fn expected_cost(&self, s: &Self::State, d: Decision) -> f64;

    /// Calls `f` once per failure outcome with the successor and its
    /// probability. Successors may repeat.
    fn for_each_successor(&self, s: &Self::State, d: Decision, f: &mut dyn FnMut(&Self::State, f64));
}

impl TabularModel for Model {
    type State = SystemState;

    fn params(&self) -> &InstanceParams {
        &self.params
    }

    fn enumerate(&self, cap: usize) -> Result<Vec<SystemState>> {
        space::enumerate_full(&self.params, cap)
    }

    fn reference_state(&self) -> SystemState {
        SystemState::initial(&self.params)
    }

    fn decisions(&self, s: &SystemState) -> Vec<Decision> {
        feasible_decisions(s, &self.params)
    }

    fn expected_cost(&self, s: &SystemState, d: Decision) -> f64 {
        Model::expected_cost(self, s, d)
    }

    fn for_each_successor(&self, s: &SystemState, d: Decision, f: &mut dyn FnMut(&SystemState, f64)) {
        let pc = self.failures.cm.pmf(s.cm_installed);
        let pa = self.failures.am.pmf(s.am_installed);
        let mut next = s.clone();
        for (kc, &qc) in pc.iter().enumerate() {
            for (ka, &qa) in pa.iter().enumerate() {
                next.clone_from(s);
                let failures = FailureRealization {
                    cm: kc as u32,
                    am: ka as u32,
                };
                advance(&mut next, d, failures, &self.params);
                f(&next, qc * qa);
            }
        }
    }
}

impl TabularModel for SimplifiedModel {
    type State = SimplifiedState;

    fn params(&self) -> &InstanceParams {
        &self.params
    }

    fn enumerate(&self, cap: usize) -> Result<Vec<SimplifiedState>> {
        space::enumerate_simplified(&self.params, cap)
    }

    fn reference_state(&self) -> SimplifiedState {
        SimplifiedState::initial(&self.params)
    }

    fn decisions(&self, s: &SimplifiedState) -> Vec<Decision> {
        SimplifiedModel::decisions(self, s)
    }

    fn expected_cost(&self, s: &SimplifiedState, d: Decision) -> f64 {
        SimplifiedModel::expected_cost(self, s, d)
    }

    fn for_each_successor(&self, s: &SimplifiedState, d: Decision, f: &mut dyn FnMut(&SimplifiedState, f64)) {
        let mut scratch = s.clone();
        SimplifiedModel::for_each_successor(self, s, d, &mut scratch, |next, q| f(next, q));
    }
}

/// Knobs of the exact solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Target max-norm Bellman residual of a policy evaluation.
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub max_rounds: usize,
    /// Below this many states evaluation uses a dense linear solve.
    pub dense_threshold: usize,
    pub state_cap: usize,
    /// Self-loop weight `1 - tau` added to make every chain aperiodic.
    pub tau: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-9,
            max_sweeps: 1_000_000,
            max_rounds: 500,
            dense_threshold: 2000,
            state_cap: 5_000_000,
            tau: 0.99,
        }
    }
}

/// One decision per state ordinal.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    pub decisions: Vec<Decision>,
}

/// Outcome of [`policy_iteration`].
#[derive(Debug, Clone)]
pub struct ExactSolution<S> {
    pub space: Arc<StateSpace<S>>,
    pub policy: TabularPolicy,
    /// Long-run average cost per period.
    pub g: f64,
    /// Relative values, zero at `reference`.
    pub v: Vec<f64>,
    pub reference: usize,
    /// Average cost after each evaluation, in order.
    pub g_history: Vec<f64>,
    pub rounds: usize,
    /// Max-norm residual of the Bellman optimality equation at the returned
    /// `(g, v)`.
    pub bellman_residual: f64,
}

impl<S: Clone + Eq + Hash> ExactSolution<S> {
    pub fn decision(&self, s: &S) -> Option<Decision> {
        self.space.index_of(s).map(|i| self.policy.decisions[i])
    }

    /// True when no evaluation raised the average cost by more than `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.g_history.windows(2).all(|w| w[1] <= w[0] + slack)
    }
}

/// A solved full-model policy usable by the simulator.
#[derive(Debug, Clone)]
pub struct ExactPolicy {
    space: Arc<StateSpace<SystemState>>,
    decisions: Arc<Vec<Decision>>,
}

impl ExactPolicy {
    pub fn new(solution: &ExactSolution<SystemState>) -> Self {
        ExactPolicy {
            space: solution.space.clone(),
            decisions: Arc::new(solution.policy.decisions.clone()),
        }
    }

    pub fn from_parts(space: Arc<StateSpace<SystemState>>, policy: TabularPolicy) -> Self {
        ExactPolicy {
            space,
            decisions: Arc::new(policy.decisions),
        }
    }
}

impl Policy for ExactPolicy {
    fn decide(&self, state: &SystemState) -> Decision {
        match self.space.index_of(state) {
            Some(i) => self.decisions[i],
            None => panic!("state {state} is outside the solved state space"),
        }
    }
}

/// A single-rate policy applied to the full model by forgetting which mode
/// each installed or stocked item came from.
#[derive(Debug, Clone)]
pub struct SimplifiedPolicy {
    space: Arc<StateSpace<SimplifiedState>>,
    decisions: Arc<Vec<Decision>>,
}

impl SimplifiedPolicy {
    pub fn new(solution: &ExactSolution<SimplifiedState>) -> Self {
        SimplifiedPolicy {
            space: solution.space.clone(),
            decisions: Arc::new(solution.policy.decisions.clone()),
        }
    }
}

impl Policy for SimplifiedPolicy {
    fn decide(&self, state: &SystemState) -> Decision {
        let s = SimplifiedState::from_full(state);
        match self.space.index_of(&s) {
            Some(i) => self.decisions[i],
            None => panic!("state {state} is outside the solved state space"),
        }
    }
}
