//! Average-cost evaluation of a fixed policy: `v = c - g + P v` with the
//! reference state's value pinned to zero.

use std::collections::{HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::state::Decision;

use super::space::StateSpace;
use super::transitions::{successor_row, PolicyChain};
use super::{SolverConfig, TabularModel, TabularPolicy};

#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Long-run average cost per period.
    pub g: f64,
    /// Relative values, zero at the reference state.
    pub v: Vec<f64>,
    /// Max-norm residual of `c - g + P v - v`.
    pub residual: f64,
    /// Value-iteration sweeps used; zero for a direct solve.
    pub sweeps: usize,
}

pub(crate) fn residual(chain: &PolicyChain, g: f64, v: &[f64]) -> f64 {
    (0..chain.len())
        .into_par_iter()
        .map(|i| (chain.cost[i] - g + chain.expect(i, v) - v[i]).abs())
        .reduce(|| 0.0, f64::max)
}

/// Direct solve with the reference column of `I - P` replaced by the
/// coefficient of `g`.
fn dense(chain: &PolicyChain, reference: usize) -> Option<(f64, Vec<f64>)> {
    let n = chain.len();
    let mut a = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for (j, q) in chain.successors(i) {
            a[(i, j)] -= q;
        }
    }
    a.column_mut(reference).fill(1.0);
    let x = a.lu().solve(&DVector::from_column_slice(&chain.cost))?;
    let g = x[reference];
    let mut v: Vec<f64> = x.iter().copied().collect();
    v[reference] = 0.0;
    Some((g, v))
}

/// Relative value iteration on the aperiodic transform
/// `tau P + (1 - tau) I`, which keeps the relative values and scales the
/// average cost by `tau`. Stops on the span of successive differences.
fn relative_value_iteration(
    chain: &PolicyChain,
    reference: usize,
    config: &SolverConfig,
    mut h: Vec<f64>,
) -> Result<Evaluation> {
    let n = chain.len();
    let tau = config.tau;
    let r = h[reference];
    h.iter_mut().for_each(|x| *x -= r);
    let mut w = vec![0.0; n];
    let cost_scale = chain.cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    for sweep in 1..=config.max_sweeps {
        w.par_iter_mut().enumerate().for_each(|(i, wi)| {
            *wi = tau * (chain.cost[i] + chain.expect(i, &h)) + (1.0 - tau) * h[i];
        });
        let (lo, hi) = w
            .iter()
            .zip(&h)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
                let d = a - b;
                (lo.min(d), hi.max(d))
            });
        // Below this span the differences are rounding noise.
        let scale = h.iter().fold(cost_scale, |m, x| m.max(x.abs()));
        let floor = 64.0 * f64::EPSILON * scale;
        if hi - lo <= (2.0 * tau * config.tolerance).max(floor) {
            let g = 0.5 * (lo + hi) / tau;
            let res = residual(chain, g, &h);
            return Ok(Evaluation {
                g,
                v: h,
                residual: res,
                sweeps: sweep,
            });
        }
        let r = w[reference];
        for (hi, wi) in h.iter_mut().zip(&w) {
            *hi = wi - r;
        }
        if !h.iter().all(|x| x.is_finite()) {
            break;
        }
    }
    Err(Error::NotConverged {
        what: "relative value iteration",
        iterations: config.max_sweeps,
        residual: f64::NAN,
    })
}

pub(crate) fn evaluate_chain(
    chain: &PolicyChain,
    reference: usize,
    config: &SolverConfig,
    warm: Option<Vec<f64>>,
) -> Result<Evaluation> {
    if chain.len() < config.dense_threshold {
        if let Some((g, v)) = dense(chain, reference) {
            let res = residual(chain, g, &v);
            if res <= config.tolerance {
                return Ok(Evaluation {
                    g,
                    v,
                    residual: res,
                    sweeps: 0,
                });
            }
            // Polish a slightly inaccurate direct solve.
            return relative_value_iteration(chain, reference, config, v);
        }
    }
    let h = warm.unwrap_or_else(|| vec![0.0; chain.len()]);
    relative_value_iteration(chain, reference, config, h)
}

/// Evaluates `policy` on an enumerated state space.
pub fn evaluate_policy<M: TabularModel>(
    model: &M,
    space: &StateSpace<M::State>,
    policy: &TabularPolicy,
    config: &SolverConfig,
) -> Result<Evaluation> {
    let reference = space
        .index_of(&model.reference_state())
        .ok_or_else(|| Error::Contract("reference state not enumerated".into()))?;
    let rows: Vec<(f64, Vec<(u32, f64)>)> = space
        .states()
        .par_iter()
        .zip(&policy.decisions)
        .map(|(s, &d)| Ok((model.expected_cost(s, d), successor_row(model, space, s, d)?)))
        .collect::<Result<_>>()?;
    evaluate_chain(&chain_from_rows(rows), reference, config, None)
}

fn chain_from_rows(rows: Vec<(f64, Vec<(u32, f64)>)>) -> PolicyChain {
    let mut chain = PolicyChain {
        cost: Vec::with_capacity(rows.len()),
        start: vec![0],
        succ: Vec::new(),
        prob: Vec::new(),
    };
    for (c, row) in rows {
        chain.cost.push(c);
        for (j, q) in row {
            chain.succ.push(j);
            chain.prob.push(q);
        }
        chain.start.push(chain.succ.len());
    }
    chain
}

/// Evaluates a policy given as a function on the states reachable from the
/// model's reference state. Returns the reachable states (reference first)
/// with the evaluation. Much cheaper than [`evaluate_policy`] for policies
/// that confine the system to a small region, such as single-source rules.
pub fn evaluate_reachable<M: TabularModel>(
    model: &M,
    decide: impl Fn(&M::State) -> Decision,
    config: &SolverConfig,
) -> Result<(Vec<M::State>, Evaluation)> {
    let start = model.reference_state();
    let mut index: HashMap<M::State, u32> = HashMap::new();
    let mut states = vec![start.clone()];
    index.insert(start, 0);
    let mut queue = VecDeque::from([0usize]);
    let mut rows: Vec<(f64, Vec<(u32, f64)>)> = Vec::new();
    while let Some(i) = queue.pop_front() {
        let s = states[i].clone();
        let d = decide(&s);
        let mut row = Vec::new();
        model.for_each_successor(&s, d, &mut |next, q| {
            let j = match index.get(next) {
                Some(&j) => j,
                None => {
                    let j = states.len() as u32;
                    index.insert(next.clone(), j);
                    states.push(next.clone());
                    queue.push_back(j as usize);
                    j
                }
            };
            row.push((j, q));
        });
        if states.len() > config.state_cap {
            return Err(Error::StateSpaceTooLarge {
                count: states.len(),
                cap: config.state_cap,
            });
        }
        super::transitions::merge_row(&mut row);
        // BFS pops in index order, so rows line up with `states`.
        debug_assert_eq!(rows.len(), i);
        rows.push((model.expected_cost(&s, d), row));
    }
    let eval = evaluate_chain(&chain_from_rows(rows), 0, config, None)?;
    Ok((states, eval))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Model;
    use crate::params::fixtures;

    fn micro_space() -> (Model, StateSpace<crate::SystemState>) {
        let model = Model::new(fixtures::micro()).unwrap();
        let space = StateSpace::from_states(model.enumerate(usize::MAX).unwrap()).unwrap();
        (model, space)
    }

    #[test]
    fn single_state_chain() {
        let chain = PolicyChain {
            cost: vec![42.5],
            start: vec![0, 1],
            succ: vec![0],
            prob: vec![1.0],
        };
        let e = evaluate_chain(&chain, 0, &SolverConfig::default(), None).unwrap();
        assert_eq!(e.g, 42.5);
        assert_eq!(e.v, vec![0.0]);
    }

    #[test]
    fn iterative_and_direct_agree() {
        let (model, space) = micro_space();
        let policy = TabularPolicy {
            decisions: space
                .states()
                .iter()
                .map(|s| {
                    // Keep one CM and one AM item on order when possible.
                    let ds = model.decisions(s);
                    *ds.iter().rev().find(|d| d.cm_batches <= 1 && d.am_items <= 1).unwrap()
                })
                .collect(),
        };
        let dense = evaluate_policy(&model, &space, &policy, &SolverConfig::default()).unwrap();
        let iterative = evaluate_policy(
            &model,
            &space,
            &policy,
            &SolverConfig {
                dense_threshold: 0,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        assert_eq!(dense.sweeps, 0);
        assert!(iterative.sweeps > 0);
        assert!((dense.g - iterative.g).abs() < 1e-7);
        for (a, b) in dense.v.iter().zip(&iterative.v) {
            assert!((a - b).abs() < 1e-7);
        }
        assert!(dense.residual <= 1e-9 && iterative.residual <= 1e-9);
    }

    /// Ordering nothing ends with every part failed: the chain is absorbed in
    /// the empty state, where each period costs `b N` and nothing else.
    #[test]
    fn never_order_is_absorbed() {
        let (model, space) = micro_space();
        let policy = TabularPolicy {
            decisions: vec![Decision::NONE; space.len()],
        };
        let e = evaluate_policy(&model, &space, &policy, &SolverConfig::default()).unwrap();
        let p = fixtures::micro();
        assert!((e.g - p.backorder_cost * p.installed_base as f64).abs() < 1e-9);

        let (states, r) = evaluate_reachable(&model, |_| Decision::NONE, &SolverConfig::default()).unwrap();
        assert!((r.g - e.g).abs() < 1e-9);
        assert_eq!(states[0], model.reference_state());
        assert_eq!(r.v[0], 0.0);
    }
}
