//! Monte-Carlo evaluation of policies.
//!
//! Every random number comes from a ChaCha stream selected by
//! `(master seed, replication, purpose)`, and each simulated period consumes
//! exactly two uniforms. Two policies simulated with the same seed therefore
//! face the same failure scenario period by period (common random numbers).
//!
//! ```
//! use dualsource::config::synthetic;
//! use dualsource::policy::NeverOrder;
//! use dualsource::sim::{estimate_cost, EvalConfig};
//! use dualsource::Model;
//!
//! let model = Model::new(synthetic(1)?)?;
//! let cfg = EvalConfig { replications: 4, periods: 200, warmup: 20, seed: 7 };
//! let a = estimate_cost(&model, &NeverOrder, &cfg)?;
//! let b = estimate_cost(&model, &NeverOrder, &cfg)?;
//! assert_eq!(a, b);
//! # Ok::<(), dualsource::Error>(())
//! ```

pub mod report;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cost::CostBreakdown;
use crate::dynamics::Model;
use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::state::{is_feasible, SystemState};

pub use report::{
    breakdown_rows, write_breakdown_csv, write_gaps_csv, write_iwa_trace_csv, write_orders_csv, BreakdownRow,
    GapRow, OrderRow,
};

/// Independent uses of randomness. Distinct purposes never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Failures = 0,
    Exploration = 1,
    Rollout = 2,
    Sampling = 3,
    Training = 4,
    Overshoot = 5,
    Parameters = 6,
}

/// The generator for one `(seed, replication, purpose)` triple.
pub fn stream(seed: u64, replication: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((replication << 8) | purpose as u64);
    rng
}

/// Statistics of one simulated trajectory, after warmup.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeStats {
    /// Cost totals over the measured periods.
    pub cost: CostBreakdown,
    pub periods: u64,
    pub cm_batches: u64,
    pub am_items: u64,
    /// Time average of `n_A / (n_C + n_A)`; periods with nothing installed
    /// count as zero.
    pub am_installed_fraction: f64,
    /// Number of orders of each size, in items, per source.
    pub cm_order_sizes: BTreeMap<u32, u64>,
    pub am_order_sizes: BTreeMap<u32, u64>,
}

impl EpisodeStats {
    pub fn average_cost(&self) -> f64 {
        if self.periods == 0 {
            0.0
        } else {
            self.cost.total() / self.periods as f64
        }
    }

    /// Fraction of ordered items that came from AM.
    pub fn am_order_fraction(&self, batch_size: u32) -> f64 {
        let cm = self.cm_batches as f64 * batch_size as f64;
        let am = self.am_items as f64;
        if cm + am == 0.0 {
            0.0
        } else {
            am / (cm + am)
        }
    }
}

/// Simulates `periods` periods from `start`, drawing each period's two
/// uniforms from `draw`. Only periods at or after `warmup` are recorded.
pub fn simulate_with(
    model: &Model,
    policy: &impl Policy,
    start: SystemState,
    periods: usize,
    warmup: usize,
    mut draw: impl FnMut() -> (f64, f64),
) -> Result<EpisodeStats> {
    if periods <= warmup {
        return Err(Error::InvalidArgument(format!(
            "episode of {periods} periods leaves nothing after a warmup of {warmup}"
        )));
    }
    let p = &model.params;
    let mut state = start;
    let mut stats = EpisodeStats::default();
    let mut am_share = 0.0;
    for t in 0..periods {
        let d = policy.decide(&state);
        if !is_feasible(d, &state, p) {
            return Err(Error::Contract(format!("policy chose infeasible {d} in {state}")));
        }
        let installed = state.installed();
        let am_installed = state.am_installed;
        let (u_cm, u_am) = draw();
        let (cost, _) = model.step(&mut state, d, u_cm, u_am);
        if t >= warmup {
            stats.cost += cost;
            stats.periods += 1;
            stats.cm_batches += d.cm_batches as u64;
            stats.am_items += d.am_items as u64;
            if installed > 0 {
                am_share += am_installed as f64 / installed as f64;
            }
            if d.cm_batches > 0 {
                *stats.cm_order_sizes.entry(d.cm_batches * p.batch_size).or_default() += 1;
            }
            if d.am_items > 0 {
                *stats.am_order_sizes.entry(d.am_items).or_default() += 1;
            }
        }
    }
    stats.am_installed_fraction = am_share / stats.periods as f64;
    Ok(stats)
}

/// One replication from the initial state with the failure stream of
/// `(seed, replication)`.
pub fn simulate_episode(
    model: &Model,
    policy: &impl Policy,
    periods: usize,
    warmup: usize,
    seed: u64,
    replication: u64,
) -> Result<EpisodeStats> {
    let mut rng = stream(seed, replication, Purpose::Failures);
    let start = SystemState::initial(&model.params);
    simulate_with(model, policy, start, periods, warmup, || (rng.random(), rng.random()))
}

/// Evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalConfig {
    pub replications: usize,
    pub periods: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            replications: 100,
            periods: 10_000,
            warmup: 1_000,
            seed: 0,
        }
    }
}

/// A replication mean with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    pub replications: usize,
}

impl Estimate {
    /// From per-replication values. A single replication yields a zero
    /// half width; see [`Estimate::is_degenerate`].
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_error = if n < 2 {
            0.0
        } else {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Estimate {
            mean,
            half_width: 1.96 * std_error,
            std_error,
            replications: n,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.replications < 2
    }
}

/// Runs every replication of `cfg` and returns their statistics in
/// replication order.
pub fn run_replications(model: &Model, policy: &impl Policy, cfg: &EvalConfig) -> Result<Vec<EpisodeStats>> {
    if cfg.replications == 0 {
        return Err(Error::InvalidArgument("at least one replication is needed".into()));
    }
    (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| simulate_episode(model, policy, cfg.periods, cfg.warmup, cfg.seed, r))
        .collect()
}

/// Long-run average cost of `policy`.
pub fn estimate_cost(model: &Model, policy: &impl Policy, cfg: &EvalConfig) -> Result<Estimate> {
    let runs = run_replications(model, policy, cfg)?;
    let xs: Vec<f64> = runs.iter().map(EpisodeStats::average_cost).collect();
    Ok(Estimate::from_samples(&xs))
}

/// Average cost of `a` minus that of `b`, replication by replication under
/// common random numbers.
pub fn paired_difference(model: &Model, a: &impl Policy, b: &impl Policy, cfg: &EvalConfig) -> Result<Estimate> {
    let ra = run_replications(model, a, cfg)?;
    let rb = run_replications(model, b, cfg)?;
    let xs: Vec<f64> = ra.iter().zip(&rb).map(|(x, y)| x.average_cost() - y.average_cost()).collect();
    Ok(Estimate::from_samples(&xs))
}

/// `(v_pi - v_star) / v_star * 100`.
pub fn optimality_gap(v_pi: f64, v_star: f64) -> Result<f64> {
    if !(v_star > 0.0) {
        return Err(Error::InvalidArgument(format!("optimal cost {v_star} must be positive")));
    }
    Ok((v_pi - v_star) / v_star * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::fixtures;
    use crate::policy::{FnPolicy, NeverOrder};
    use crate::state::Decision;

    #[test]
    fn zero_failures_accumulate_in_closed_form() {
        let p = fixtures::instance1();
        let model = Model::new(p.clone()).unwrap();
        let mut start = SystemState::initial(&p);
        start.cm_stock = 2;
        let stats = simulate_with(&model, &NeverOrder, start, 50, 0, || (0.0, 0.0)).unwrap();
        let per_period = 2.0 * p.holding_cost + p.maintenance_cost * p.cm.failure_mean * 7.0;
        assert!((stats.cost.total() - 50.0 * per_period).abs() < 1e-9);
        assert_eq!(stats.periods, 50);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let model = Model::new(fixtures::instance1()).unwrap();
        let policy = FnPolicy(|s: &SystemState| Decision::new(0, (s.installed() < 7 && s.am_pipeline.iter().sum::<u32>() == 0) as u32));
        let a = simulate_episode(&model, &policy, 2000, 100, 3, 5).unwrap();
        let b = simulate_episode(&model, &policy, 2000, 100, 3, 5).unwrap();
        assert_eq!(a, b);
        let c = simulate_episode(&model, &policy, 2000, 100, 3, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn self_comparison_is_exactly_zero() {
        let model = Model::new(fixtures::micro()).unwrap();
        let cfg = EvalConfig {
            replications: 5,
            periods: 300,
            warmup: 10,
            seed: 1,
        };
        let d = paired_difference(&model, &NeverOrder, &NeverOrder, &cfg).unwrap();
        assert_eq!((d.mean, d.half_width), (0.0, 0.0));
    }

    #[test]
    fn single_replication_is_degenerate() {
        let e = Estimate::from_samples(&[3.0]);
        assert!(e.is_degenerate());
        assert_eq!(e.half_width, 0.0);
    }

    #[test]
    fn gap_examples() {
        assert_eq!(optimality_gap(100.0, 100.0).unwrap(), 0.0);
        assert!((optimality_gap(105.0, 100.0).unwrap() - 5.0).abs() < 1e-12);
        assert!(optimality_gap(1.0, 0.0).is_err());
    }

    #[test]
    fn streams_are_separated_by_purpose_and_replication() {
        let mut a = stream(1, 0, Purpose::Failures);
        let mut b = stream(1, 0, Purpose::Rollout);
        let mut c = stream(1, 1, Purpose::Failures);
        let x: u64 = a.random();
        assert_ne!(x, b.random::<u64>());
        assert_ne!(x, c.random::<u64>());
    }
}
