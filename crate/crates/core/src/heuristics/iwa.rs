//! Iterative weight adjustment: repeatedly solve the single-rate model at an
//! installed-base AM fraction `gamma`, measure the AM sourcing fraction `rho`
//! of the result and map it back to the `gamma` it would sustain.

use crate::dynamics::Model;
use crate::error::{Error, Result};
use crate::exact::{
    policy_iteration, simplify_params, steady_state_am_fraction, SimplifiedModel, SimplifiedPolicy, SolverConfig,
};
use crate::params::InstanceParams;
use crate::policy::Policy;
use crate::sim::simulate_episode;

use super::dual_index::{dual_index_solve, DualIndexConfig, DualIndexPolicy};
use super::Evaluator;

/// Installed-base AM fraction sustained by sourcing fraction `rho`.
pub fn gamma_from_rho(rho: f64, mu_c: f64, mu_a: f64) -> f64 {
    let den = (1.0 - rho) * mu_a + rho * mu_c;
    if den == 0.0 {
        return 0.0;
    }
    rho * mu_c / den
}

/// Share of failures, and so of replacements, coming from AM items when a
/// fraction `gamma` of the base is AM.
pub fn rho_from_gamma(gamma: f64, mu_c: f64, mu_a: f64) -> f64 {
    let den = gamma * mu_a + (1.0 - gamma) * mu_c;
    if den == 0.0 {
        return 0.0;
    }
    gamma * mu_a / den
}

/// A dual-sourcing solver for single-rate instances that also reports the
/// AM sourcing fraction of its answer.
pub trait InnerSolver {
    type Policy: Policy + Clone;

    fn solve(&self, single_rate: &InstanceParams) -> Result<(Self::Policy, f64)>;
}

/// Policy iteration on the single-rate model; `rho` from its stationary
/// distribution.
#[derive(Debug, Clone, Default)]
pub struct ExactInner {
    pub config: SolverConfig,
}

impl InnerSolver for ExactInner {
    type Policy = SimplifiedPolicy;

    fn solve(&self, single_rate: &InstanceParams) -> Result<(SimplifiedPolicy, f64)> {
        let model = SimplifiedModel::new(single_rate.clone())?;
        let solution = policy_iteration(&model, &self.config)?;
        let rho = steady_state_am_fraction(&model, &solution, &self.config)?;
        Ok((SimplifiedPolicy::new(&solution), rho))
    }
}

/// The dual-index policy; `rho` from a long simulation of the single-rate
/// system.
#[derive(Debug, Clone)]
pub struct DualIndexInner {
    pub config: DualIndexConfig,
    pub rho_periods: usize,
    pub rho_warmup: usize,
}

impl Default for DualIndexInner {
    fn default() -> Self {
        DualIndexInner {
            config: DualIndexConfig::default(),
            rho_periods: 100_000,
            rho_warmup: 1_000,
        }
    }
}

impl InnerSolver for DualIndexInner {
    type Policy = DualIndexPolicy;

    fn solve(&self, single_rate: &InstanceParams) -> Result<(DualIndexPolicy, f64)> {
        let sol = dual_index_solve(single_rate, &self.config)?;
        let policy = DualIndexPolicy::new(sol.di, single_rate);
        let model = Model::new(single_rate.clone())?;
        let stats = simulate_episode(
            &model,
            &policy,
            self.rho_warmup + self.rho_periods,
            self.rho_warmup,
            self.config.seed,
            0,
        )?;
        Ok((policy, stats.am_order_fraction(single_rate.batch_size)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IwaStep {
    pub iteration: usize,
    pub gamma: f64,
    pub rho: f64,
    /// Cost of this iterate's policy in the two-mode model.
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct IwaResult<P> {
    pub gamma_star: f64,
    pub rho_star: f64,
    pub iterations: usize,
    pub inner_policy: P,
    pub cost: f64,
    pub converged: bool,
    pub trace: Vec<IwaStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IwaConfig {
    pub psi: f64,
    pub max_iterations: usize,
}

impl Default for IwaConfig {
    fn default() -> Self {
        IwaConfig {
            psi: 0.2,
            max_iterations: 50,
        }
    }
}

/// Runs the fixed-point iteration from `gamma = 0`. Iteration `j` solves at
/// `gamma_j`; from the second iteration on it stops once
/// `|gamma_j - gamma_{j-1}| < psi` and returns that iterate. When the cap is
/// hit, or a `gamma` repeats without converging, the cheapest iterate is
/// returned instead.
pub fn iwa<I: InnerSolver>(
    params: &InstanceParams,
    inner: &I,
    config: &IwaConfig,
    evaluator: &Evaluator,
) -> Result<IwaResult<I::Policy>> {
    if !(config.psi > 0.0 && config.psi < 1.0) {
        return Err(Error::InvalidArgument(format!("psi {} must lie in (0, 1)", config.psi)));
    }
    if config.max_iterations == 0 {
        return Err(Error::InvalidArgument("at least one iteration is needed".into()));
    }
    let model = Model::new(params.clone())?;
    let (mu_c, mu_a) = (params.cm.failure_mean, params.am.failure_mean);
    let mut trace: Vec<IwaStep> = Vec::new();
    let mut policies: Vec<I::Policy> = Vec::new();
    let mut gamma = 0.0;
    let finish = |trace: Vec<IwaStep>, policies: Vec<I::Policy>, pick: usize, converged| {
        let step = trace[pick];
        IwaResult {
            gamma_star: step.gamma,
            rho_star: step.rho,
            iterations: trace.len(),
            inner_policy: policies[pick].clone(),
            cost: step.cost,
            converged,
            trace,
        }
    };
    let cheapest = |trace: &[IwaStep]| {
        (0..trace.len())
            .min_by(|&a, &b| trace[a].cost.total_cmp(&trace[b].cost))
            .unwrap()
    };
    for j in 1..=config.max_iterations {
        let single = simplify_params(params, gamma)?;
        let (policy, rho) = inner.solve(&single)?;
        let rho = rho.clamp(0.0, 1.0);
        let cost = evaluator.cost(&model, &policy)?;
        trace.push(IwaStep {
            iteration: j,
            gamma,
            rho,
            cost,
        });
        policies.push(policy);
        if j >= 2 && (gamma - trace[j - 2].gamma).abs() < config.psi {
            return Ok(finish(trace, policies, j - 1, true));
        }
        let next = gamma_from_rho(rho, mu_c, mu_a).clamp(0.0, 1.0);
        if trace.iter().any(|s| (s.gamma - next).abs() < 1e-6) && (next - gamma).abs() >= config.psi {
            let pick = cheapest(&trace);
            return Ok(finish(trace, policies, pick, false));
        }
        gamma = next;
    }
    let pick = cheapest(&trace);
    Ok(finish(trace, policies, pick, false))
}

/// Trace rows in the shape the CSV report expects.
pub fn trace_rows(trace: &[IwaStep]) -> Vec<(usize, f64, f64, f64)> {
    trace.iter().map(|s| (s.iteration, s.gamma, s.rho, s.cost)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristics::bsp::BaseStockPolicy;
    use crate::params::{fixtures, Source};

    #[test]
    fn gamma_formula_cases() {
        assert_eq!(gamma_from_rho(0.0, 0.01, 0.02), 0.0);
        assert_eq!(gamma_from_rho(1.0, 0.01, 0.02), 1.0);
        assert!((gamma_from_rho(0.5, 0.01, 0.02) - 1.0 / 3.0).abs() < 1e-15);
        for g in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let back = gamma_from_rho(rho_from_gamma(g, 0.01, 0.02), 0.01, 0.02);
            assert!((back - g).abs() < 1e-12);
        }
    }

    /// Orders CM only, whatever the single-rate instance.
    struct CmOnly;

    impl InnerSolver for CmOnly {
        type Policy = BaseStockPolicy;

        fn solve(&self, p: &InstanceParams) -> Result<(BaseStockPolicy, f64)> {
            Ok((BaseStockPolicy::new(Source::Cm, p.max_circulating, p), 0.0))
        }
    }

    #[test]
    fn never_am_converges_at_zero() {
        let p = fixtures::micro();
        let r = iwa(&p, &CmOnly, &IwaConfig::default(), &Evaluator::Exact(SolverConfig::default())).unwrap();
        assert_eq!(r.iterations, 2);
        assert_eq!(r.gamma_star, 0.0);
        assert!(r.converged);
    }

    /// Alternates between all-CM and all-AM sourcing.
    struct Flip;

    impl InnerSolver for Flip {
        type Policy = BaseStockPolicy;

        fn solve(&self, p: &InstanceParams) -> Result<(BaseStockPolicy, f64)> {
            let base = fixtures::micro();
            let am = p.cm.failure_mean == base.cm.failure_mean;
            let src = if am { Source::Am } else { Source::Cm };
            Ok((BaseStockPolicy::new(src, p.max_circulating, p), am as u8 as f64))
        }
    }

    #[test]
    fn cycling_returns_the_cheapest_iterate() {
        let p = fixtures::micro();
        let r = iwa(&p, &Flip, &IwaConfig::default(), &Evaluator::Exact(SolverConfig::default())).unwrap();
        assert!(!r.converged);
        assert!(r.iterations <= 3);
        let best = r.trace.iter().map(|s| s.cost).fold(f64::INFINITY, f64::min);
        assert_eq!(r.cost, best);
    }

    #[test]
    fn exact_inner_on_micro() {
        let p = fixtures::micro();
        let r = iwa(&p, &ExactInner::default(), &IwaConfig::default(), &Evaluator::Exact(SolverConfig::default())).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 50);
        for s in &r.trace {
            assert!((0.0..=1.0).contains(&s.gamma) && (0.0..=1.0).contains(&s.rho));
        }
        let mut buf = Vec::new();
        crate::sim::report::write_iwa_trace_csv(&mut buf, "micro", &trace_rows(&r.trace)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2 + r.trace.len());
    }
}
