//! Rollout-based approximate policy iteration with a classifier policy.
//!
//! Each round walks a trajectory, labels every visited state with the first
//! decision whose simulated cost over a fixed horizon, followed by the
//! incumbent policy, is lowest, moves on with that decision, and finally fits
//! a classifier to the labels. The classifier is the next incumbent.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::dynamics::Model;
use crate::error::{Error, Result};
use crate::params::InstanceParams;
use crate::policy::{Cached, Policy};
use crate::sim::{estimate_cost, stream, EvalConfig, Purpose};
use crate::state::{feasible_decisions, Decision, SystemState};

use super::classifier::{Classifier, DecisionGrid};
use super::features::FeatureSchema;
use super::mlp::{train_classifier, Mlp, TrainConfig, TrainReport};

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutConfig {
    pub iterations: usize,
    /// States labelled per round.
    pub samples: usize,
    /// Scenarios per state and first decision.
    pub scenarios: usize,
    pub horizon: usize,
    /// Periods run under the incumbent before collecting.
    pub warmup: usize,
    pub seed: u64,
}

impl RolloutConfig {
    /// Full settings for the synthetic instances.
    pub fn paper() -> Self {
        RolloutConfig {
            iterations: 3,
            samples: 5000,
            scenarios: 2000,
            horizon: 500,
            warmup: 10,
            seed: 0,
        }
    }

    /// Reduced settings for a single-core desk run: 40% of the samples and
    /// of the horizon, 10% of the scenarios.
    pub fn desk() -> Self {
        RolloutConfig {
            samples: 2000,
            scenarios: 200,
            horizon: 200,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.iterations, self.samples, self.scenarios, self.horizon].contains(&0) {
            return Err(Error::InvalidArgument("rollout settings must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self::paper()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            hidden: vec![32, 32],
            train: TrainConfig::default(),
        }
    }
}

/// Mean cost over `scenarios` runs of `horizon` periods that apply `first`
/// and then follow `policy`. Scenario `j` draws its failures from stream `j`
/// of `seed`, so every first decision sees the same scenarios.
pub fn rollout_estimate(
    model: &Model,
    state: &SystemState,
    first: Decision,
    policy: &dyn Policy,
    scenarios: usize,
    horizon: usize,
    seed: u64,
) -> f64 {
    let mut total = 0.0;
    let mut s = state.clone();
    for j in 0..scenarios {
        let mut rng = stream(seed, j as u64, Purpose::Rollout);
        s.clone_from(state);
        let mut d = first;
        for t in 0..horizon {
            if t > 0 {
                d = policy.decide(&s);
            }
            let (cost, _) = model.step(&mut s, d, rng.random(), rng.random());
            total += cost.total();
        }
    }
    total / scenarios as f64
}

/// The feasible first decision with the lowest rollout estimate, earliest
/// on ties, with every estimate.
pub fn rollout_argmin(
    model: &Model,
    state: &SystemState,
    policy: &dyn Policy,
    scenarios: usize,
    horizon: usize,
    seed: u64,
) -> (Decision, Vec<(Decision, f64)>) {
    let options = feasible_decisions(state, &model.params);
    if options.len() == 1 {
        return (options[0], vec![(options[0], f64::NAN)]);
    }
    let estimates: Vec<(Decision, f64)> = options
        .par_iter()
        .map(|&d| (d, rollout_estimate(model, state, d, policy, scenarios, horizon, seed)))
        .collect();
    let mut best = 0;
    for (i, e) in estimates.iter().enumerate() {
        if e.1 < estimates[best].1 {
            best = i;
        }
    }
    (estimates[best].0, estimates)
}

/// Seed of the rollouts for sample `k` of round `round`.
fn sample_seed(seed: u64, round: usize, k: usize) -> u64 {
    seed ^ ((round as u64 + 1) << 40) ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// One environment the trainer can collect from.
pub struct Task {
    pub params: InstanceParams,
    pub model: Model,
    pub incumbent: Arc<dyn Policy>,
    /// Round the incumbent was last replaced in.
    pub(crate) incumbent_round: usize,
}

impl Task {
    pub fn new(params: InstanceParams, incumbent: Arc<dyn Policy>) -> Result<Self> {
        Ok(Task {
            model: Model::new(params.clone())?,
            params,
            incumbent,
            incumbent_round: 0,
        })
    }
}

/// Labelled states of one round.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

/// Walks one segment of `len` labelled states on `task`, starting from the
/// initial state after `warmup` incumbent periods.
#[allow(clippy::too_many_arguments)]
pub(crate) fn collect_segment(
    task: &Task,
    schema: &FeatureSchema,
    grid: &DecisionGrid,
    cfg: &RolloutConfig,
    round: usize,
    first_sample: usize,
    len: usize,
    data: &mut Dataset,
) -> Result<()> {
    let mut rng = stream(cfg.seed, (round * 1_000_003 + first_sample) as u64, Purpose::Sampling);
    let mut state = SystemState::initial(&task.params);
    for _ in 0..cfg.warmup {
        let d = task.incumbent.decide(&state);
        task.model.step(&mut state, d, rng.random(), rng.random());
    }
    for k in first_sample..first_sample + len {
        let seed = sample_seed(cfg.seed, round, k);
        let (d, _) = rollout_argmin(&task.model, &state, &*task.incumbent, cfg.scenarios, cfg.horizon, seed);
        let label = grid
            .index_of(d)
            .ok_or_else(|| Error::Contract(format!("decision {d} missing from the grid")))?;
        data.inputs.push(schema.encode(&state, &task.params));
        data.labels.push(label);
        task.model.step(&mut state, d, rng.random(), rng.random());
    }
    Ok(())
}

pub(crate) fn fit(
    data: &Dataset,
    schema: &FeatureSchema,
    grid: &DecisionGrid,
    net: &NetConfig,
    seed: u64,
) -> Result<(Classifier, TrainReport)> {
    let mut widths = vec![schema.len()];
    widths.extend(&net.hidden);
    widths.push(grid.len());
    let mut mlp = Mlp::new(&widths, seed)?;
    let train = TrainConfig {
        seed,
        ..net.train.clone()
    };
    let report = train_classifier(&mut mlp, &data.inputs, &data.labels, &train)?;
    Ok((Classifier::new(mlp, schema.clone(), grid.clone())?, report))
}

#[derive(Debug, Clone)]
pub struct DclRound {
    pub classifier: Arc<Classifier>,
    pub report: TrainReport,
    /// Share of labels other than ordering nothing.
    pub order_share: f64,
    pub validation_cost: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct DclResult {
    pub rounds: Vec<DclRound>,
    /// Round with the lowest validation cost.
    pub best: usize,
    pub seconds: f64,
}

impl DclResult {
    pub fn best_classifier(&self) -> Arc<Classifier> {
        self.rounds[self.best].classifier.clone()
    }
}

/// Trains on one instance from `initial`. Each round's classifier is
/// validated by simulation; the cheapest round is marked best.
pub fn dcl_train(
    params: &InstanceParams,
    initial: Arc<dyn Policy>,
    cfg: &RolloutConfig,
    net: &NetConfig,
    validation: &EvalConfig,
) -> Result<DclResult> {
    cfg.validate()?;
    let start = Instant::now();
    let schema = FeatureSchema::for_instance(params);
    let grid = DecisionGrid::for_instance(params);
    let mut incumbent = initial;
    let mut rounds = Vec::new();
    for round in 0..cfg.iterations {
        let t = Instant::now();
        let task = Task::new(params.clone(), incumbent.clone())?;
        let mut data = Dataset::default();
        collect_segment(&task, &schema, &grid, cfg, round, 0, cfg.samples, &mut data)?;
        let (classifier, report) = fit(&data, &schema, &grid, net, cfg.seed.wrapping_add(round as u64))?;
        let classifier = Arc::new(classifier);
        let policy = Arc::new(Cached::new(classifier.bind(params)?));
        let validation_cost = estimate_cost(&task.model, &policy, validation)?.mean;
        rounds.push(DclRound {
            classifier,
            report,
            order_share: order_share(&data, &grid),
            validation_cost,
            seconds: t.elapsed().as_secs_f64(),
        });
        incumbent = policy;
    }
    let best = cheapest(&rounds);
    Ok(DclResult {
        rounds,
        best,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub(crate) fn order_share(data: &Dataset, grid: &DecisionGrid) -> f64 {
    let none = grid.index_of(Decision::NONE);
    let orders = data.labels.iter().filter(|&&l| Some(l) != none).count();
    orders as f64 / data.labels.len().max(1) as f64
}

pub(crate) fn cheapest(rounds: &[DclRound]) -> usize {
    (0..rounds.len())
        .min_by(|&a, &b| rounds[a].validation_cost.total_cmp(&rounds[b].validation_cost))
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::fixtures;
    use crate::policy::NeverOrder;

    #[test]
    fn horizon_one_is_the_immediate_cost() {
        let p = fixtures::micro();
        let model = Model::new(p.clone()).unwrap();
        let s = SystemState::initial(&p);
        let d = Decision::new(1, 0);
        let est = rollout_estimate(&model, &s, d, &NeverOrder, 20_000, 1, 3);
        let exact = model.expected_cost(&s, d);
        assert!((est - exact).abs() < 0.02 * exact, "{est} vs {exact}");
    }

    #[test]
    fn common_scenarios_make_equal_decisions_equal() {
        let p = fixtures::instance1();
        let model = Model::new(p.clone()).unwrap();
        let s = SystemState::initial(&p);
        let a = rollout_estimate(&model, &s, Decision::new(0, 1), &NeverOrder, 50, 30, 9);
        let b = rollout_estimate(&model, &s, Decision::new(0, 1), &NeverOrder, 50, 30, 9);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn constant_labels_give_a_never_order_policy() {
        // Ordering is prohibitively expensive, so the rollouts always pick
        // ordering nothing.
        let mut p = fixtures::micro();
        p.cm.unit_price = 1e9;
        p.am.unit_price = 1e9;
        let cfg = RolloutConfig {
            iterations: 1,
            samples: 40,
            scenarios: 5,
            horizon: 5,
            warmup: 2,
            seed: 1,
        };
        let net = NetConfig {
            hidden: vec![8],
            train: TrainConfig {
                epochs: 300,
                learning_rate: 1e-2,
                ..TrainConfig::default()
            },
        };
        let val = EvalConfig {
            replications: 2,
            periods: 200,
            warmup: 10,
            seed: 0,
        };
        let r = dcl_train(&p, Arc::new(NeverOrder), &cfg, &net, &val).unwrap();
        assert_eq!(r.rounds[0].order_share, 0.0);
        assert_eq!(r.rounds[0].report.accuracy, 1.0);
        let policy = r.best_classifier().bind(&p).unwrap();
        let model = Model::new(p.clone()).unwrap();
        let mut s = SystemState::initial(&p);
        for _ in 0..50 {
            assert_eq!(policy.decide(&s), Decision::NONE);
            model.step(&mut s, Decision::NONE, 0.3, 0.3);
        }
    }
}
