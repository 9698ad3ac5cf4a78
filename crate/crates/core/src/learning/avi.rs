//! Approximate value iteration with a linear value function of the
//! post-decision state, fitted online by recursive least squares.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dynamics::Model;
use crate::error::{Error, Result};
use crate::params::InstanceParams;
use crate::policy::{Cached, Policy};
use crate::sim::{estimate_cost, stream, EvalConfig, Purpose};
use crate::state::{feasible_decisions, Decision, SystemState};

use super::features::FeatureSchema;

/// Recursive least squares with a ridge prior: after any sequence of
/// updates the weights equal `(delta I + X'X)^-1 X'y`.
#[derive(Debug, Clone)]
pub struct Rls {
    w: DVector<f64>,
    p: DMatrix<f64>,
}

impl Rls {
    pub fn new(dim: usize, delta: f64) -> Self {
        Rls {
            w: DVector::zeros(dim),
            p: DMatrix::identity(dim, dim) / delta,
        }
    }

    pub fn update(&mut self, x: &[f64], y: f64) {
        let x = DVector::from_column_slice(x);
        let px = &self.p * &x;
        let denom = 1.0 + x.dot(&px);
        let gain = &px / denom;
        let err = y - x.dot(&self.w);
        self.w += &gain * err;
        self.p -= &gain * px.transpose();
        // Keep P symmetric against rounding drift.
        self.p = (&self.p + self.p.transpose()) * 0.5;
    }

    /// Restarts the fit with a ridge prior centred on the current weights.
    pub fn restart(&mut self, delta: f64) {
        let n = self.w.len();
        self.p = DMatrix::identity(n, n) / delta;
    }

    pub fn weights(&self) -> &[f64] {
        self.w.as_slice()
    }
}

/// Batch ridge regression, the closed form [`Rls`] tracks.
pub fn ridge_fit(xs: &[Vec<f64>], ys: &[f64], delta: f64) -> Result<Vec<f64>> {
    let dim = xs.first().map_or(0, Vec::len);
    let mut a = DMatrix::<f64>::identity(dim, dim) * delta;
    let mut b = DVector::<f64>::zeros(dim);
    for (x, &y) in xs.iter().zip(ys) {
        let x = DVector::from_column_slice(x);
        a += &x * x.transpose();
        b += &x * y;
    }
    a.cholesky()
        .map(|c| c.solve(&b).as_slice().to_vec())
        .ok_or_else(|| Error::InvalidArgument("normal equations are not positive definite".into()))
}

/// `V(s) = w . [phi(s), 1]` over post-decision features.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearVfa {
    pub schema: FeatureSchema,
    /// One weight per feature, then the intercept.
    pub weights: Vec<f64>,
    pub discount: f64,
}

impl LinearVfa {
    /// Post-decision schema for `params`: one spare pipeline slot per source
    /// holds the order being placed.
    pub fn schema_for(params: &InstanceParams) -> FeatureSchema {
        FeatureSchema {
            cm_slots: params.cm.lead_time + 1,
            am_slots: params.am.lead_time + 1,
            epl: None,
        }
    }

    pub fn zero(schema: FeatureSchema, discount: f64) -> Self {
        let weights = vec![0.0; schema.len() + 1];
        LinearVfa {
            schema,
            weights,
            discount,
        }
    }

    fn design(&self, state: &SystemState, d: Decision, params: &InstanceParams) -> Vec<f64> {
        let mut x = self.schema.encode_post(state, d, params);
        x.push(1.0);
        x
    }

    pub fn value(&self, state: &SystemState, d: Decision, params: &InstanceParams) -> f64 {
        self.design(state, d, params)
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| x * w)
            .sum()
    }
}

/// Feasible decision minimizing `C(s, a) + discount * post(s, a)`, the
/// earliest on ties, with the minimum.
pub fn greedy_decision(
    model: &Model,
    state: &SystemState,
    discount: f64,
    post: impl Fn(&SystemState, Decision) -> f64,
) -> (Decision, f64) {
    let mut best = (Decision::NONE, f64::INFINITY);
    for d in feasible_decisions(state, &model.params) {
        let q = model.expected_cost(state, d) + discount * post(state, d);
        if q < best.1 {
            best = (d, q);
        }
    }
    best
}

/// Greedy policy with respect to a linear value function.
#[derive(Debug, Clone)]
pub struct VfaPolicy {
    vfa: Arc<LinearVfa>,
    model: Arc<Model>,
}

impl VfaPolicy {
    pub fn new(vfa: LinearVfa, params: &InstanceParams) -> Result<Self> {
        vfa.schema.check(params)?;
        if vfa.schema.cm_slots <= params.cm.lead_time || vfa.schema.am_slots <= params.am.lead_time {
            return Err(Error::InvalidArgument("value function lacks post-decision slots".into()));
        }
        Ok(VfaPolicy {
            vfa: Arc::new(vfa),
            model: Arc::new(Model::new(params.clone())?),
        })
    }

    pub fn vfa(&self) -> &LinearVfa {
        &self.vfa
    }
}

impl Policy for VfaPolicy {
    fn decide(&self, state: &SystemState) -> Decision {
        let p = &self.model.params;
        greedy_decision(&self.model, state, self.vfa.discount, |s, d| self.vfa.value(s, d, p)).0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AviConfig {
    /// Forward passes, each restarting from the initial state.
    pub episodes: usize,
    /// Periods per pass.
    pub horizon: usize,
    pub epsilon: f64,
    pub discount: f64,
    /// Strength of the ridge prior of the least-squares fit.
    pub ridge: f64,
    /// Restart the fit at every episode with the prior centred on the current
    /// weights. Without restarts the fit averages targets bootstrapped from
    /// every earlier value function and lags far behind.
    pub restart: bool,
    /// Training stops with an error once a weight exceeds this magnitude.
    pub weight_bound: f64,
    /// Snapshots of the fit, evenly spaced over training, that are scored
    /// by simulating their greedy policy; the cheapest is returned. Zero
    /// returns the final fit unscored.
    pub checkpoints: usize,
    pub validation: EvalConfig,
    pub seed: u64,
}

impl Default for AviConfig {
    fn default() -> Self {
        AviConfig {
            episodes: 2000,
            horizon: 250,
            epsilon: 0.1,
            discount: 0.99,
            ridge: 100.0,
            restart: true,
            weight_bound: 1e12,
            checkpoints: 20,
            validation: EvalConfig {
                replications: 2,
                periods: 5000,
                warmup: 500,
                seed: 1,
            },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AviResult {
    /// The selected fit.
    pub vfa: LinearVfa,
    /// Episodes completed and validation cost of each snapshot.
    pub checkpoints: Vec<(usize, f64)>,
    pub updates: usize,
    pub seconds: f64,
}

/// Forward-pass approximate value iteration with epsilon-greedy exploration.
/// Each step values the current state greedily under the current fit, uses
/// that value as the target of the previous post-decision state, and moves
/// on by a random feasible decision with probability `epsilon`.
pub fn avi_train(params: &InstanceParams, cfg: &AviConfig) -> Result<AviResult> {
    let model = Model::new(params.clone())?;
    let validate = |vfa: &LinearVfa| -> Result<f64> {
        let policy = Cached::new(VfaPolicy::new(vfa.clone(), params)?);
        Ok(estimate_cost(&model, &policy, &cfg.validation)?.mean)
    };
    avi_fit(LinearVfa::schema_for(params), cfg, |_| Ok(model.clone()), &validate)
}

/// The training loop behind [`avi_train`]; `episode_model(e)` supplies the
/// instance of episode `e` and `validate` scores a snapshot, lower is better.
pub(crate) fn avi_fit(
    schema: FeatureSchema,
    cfg: &AviConfig,
    mut episode_model: impl FnMut(usize) -> Result<Model>,
    validate: &dyn Fn(&LinearVfa) -> Result<f64>,
) -> Result<AviResult> {
    if !(0.0..=1.0).contains(&cfg.epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon {} outside [0, 1]", cfg.epsilon)));
    }
    if !(cfg.discount > 0.0 && cfg.discount < 1.0) {
        return Err(Error::InvalidArgument(format!("discount {} outside (0, 1)", cfg.discount)));
    }
    let start = Instant::now();
    let mut vfa = LinearVfa::zero(schema, cfg.discount);
    let mut rls = Rls::new(vfa.weights.len(), cfg.ridge);
    let mut updates = 0;
    let every = if cfg.checkpoints == 0 {
        usize::MAX
    } else {
        cfg.episodes.div_ceil(cfg.checkpoints).max(1)
    };
    let mut checkpoints = Vec::new();
    let mut best: Option<(f64, LinearVfa)> = None;
    for episode in 0..cfg.episodes {
        let model = episode_model(episode)?;
        let params = &model.params;
        vfa.schema.check(params)?;
        if cfg.restart && episode > 0 {
            rls.restart(cfg.ridge);
        }
        let mut rng = stream(cfg.seed, episode as u64, Purpose::Exploration);
        let mut state = SystemState::initial(params);
        let mut previous: Option<Vec<f64>> = None;
        for _ in 0..cfg.horizon {
            let (greedy, v_hat) = greedy_decision(&model, &state, cfg.discount, |s, d| vfa.value(s, d, params));
            if let Some(x) = previous.take() {
                rls.update(&x, v_hat);
                vfa.weights.copy_from_slice(rls.weights());
                updates += 1;
                if let Some(w) = vfa.weights.iter().find(|w| !w.is_finite() || w.abs() > cfg.weight_bound) {
                    return Err(Error::Training(format!("value weights diverged ({w:e}) after {updates} updates")));
                }
            }
            let d = if rng.random::<f64>() < cfg.epsilon {
                let options = feasible_decisions(&state, params);
                options[rng.random_range(0..options.len())]
            } else {
                greedy
            };
            previous = Some(vfa.design(&state, d, params));
            model.step(&mut state, d, rng.random(), rng.random());
        }
        let done = episode + 1;
        if done % every == 0 || (cfg.checkpoints > 0 && done == cfg.episodes) {
            let cost = validate(&vfa)?;
            checkpoints.push((done, cost));
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, vfa.clone()));
            }
        }
    }
    Ok(AviResult {
        vfa: best.map_or(vfa, |(_, v)| v),
        checkpoints,
        updates,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::fixtures;

    #[test]
    fn rls_equals_batch_ridge() {
        let mut rng = stream(4, 0, Purpose::Training);
        let xs: Vec<Vec<f64>> = (0..300)
            .map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).chain([1.0]).collect())
            .collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| 3.0 * x[0] - 2.0 * x[3] + 7.0 + rng.random_range(-0.1..0.1))
            .collect();
        let mut rls = Rls::new(6, 1e-6);
        for (x, &y) in xs.iter().zip(&ys) {
            rls.update(x, y);
        }
        let batch = ridge_fit(&xs, &ys, 1e-6).unwrap();
        for (a, b) in rls.weights().iter().zip(&batch) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_cost_environment_learns_nothing() {
        let mut p = fixtures::micro();
        p.cm.unit_price = 0.0;
        p.am.unit_price = 0.0;
        p.cm.order_cost = 0.0;
        p.am.order_cost = 0.0;
        p.maintenance_cost = 0.0;
        p.holding_cost = 0.0;
        p.backorder_cost = 0.0;
        let cfg = AviConfig {
            episodes: 20,
            horizon: 50,
            checkpoints: 0,
            ..AviConfig::default()
        };
        let r = avi_train(&p, &cfg).unwrap();
        assert!(r.vfa.weights.iter().all(|w| w.abs() < 1e-9));
        assert_eq!(r.updates, 20 * 49);
    }

    #[test]
    fn zero_value_picks_the_cheapest_immediate_decision() {
        let p = fixtures::instance1();
        let model = Model::new(p.clone()).unwrap();
        let s = SystemState::initial(&p);
        let (d, _) = greedy_decision(&model, &s, 0.99, |_, _| 0.0);
        assert_eq!(d, Decision::NONE);
        let mut full = s.clone();
        full.cm_stock = p.max_circulating;
        let (d, _) = greedy_decision(&model, &full, 0.99, |_, _| 1e6);
        assert_eq!(d, Decision::NONE);
    }
}
