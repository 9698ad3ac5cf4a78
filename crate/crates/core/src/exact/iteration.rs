use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::state::Decision;

use super::evaluation::evaluate_chain;
use super::space::StateSpace;
use super::transitions::{successor_row, PolicyChain, Transitions};
use super::{ExactSolution, SolverConfig, TabularModel, TabularPolicy};

/// Two action values closer than this are treated as tied.
fn tie_tolerance(config: &SolverConfig, scale: f64) -> f64 {
    10.0 * config.tolerance + 1e-13 * scale
}

/// Policy iteration from the order-nothing policy. Ties in the improvement
/// step keep the incumbent action, and otherwise go to the lexicographically
/// first minimizer.
pub fn policy_iteration<M: TabularModel>(model: &M, config: &SolverConfig) -> Result<ExactSolution<M::State>> {
    let space = StateSpace::from_states(model.enumerate(config.state_cap)?)?;
    policy_iteration_on(model, Arc::new(space), config)
}

/// [`policy_iteration`] on a caller-supplied enumeration, e.g. a permuted
/// one.
pub fn policy_iteration_on<M: TabularModel>(
    model: &M,
    space: Arc<StateSpace<M::State>>,
    config: &SolverConfig,
) -> Result<ExactSolution<M::State>> {
    let reference = space
        .index_of(&model.reference_state())
        .ok_or_else(|| Error::Contract("reference state not enumerated".into()))?;
    let t = Transitions::build(model, &space)?;
    let n = t.n_states();
    // The first action of every state is (0, 0).
    let mut choice: Vec<usize> = (0..n).map(|i| t.action_start[i]).collect();
    let mut warm: Option<Vec<f64>> = None;
    let mut g_history = Vec::new();

    for round in 1..=config.max_rounds {
        let chain = PolicyChain::from_transitions(&t, &choice);
        let eval = evaluate_chain(&chain, reference, config, warm.take())?;
        g_history.push(eval.g);
        let v = eval.v;
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let tie = tie_tolerance(config, scale);

        let improved: Vec<usize> = (0..n)
            .into_par_iter()
            .map(|i| {
                let current = choice[i];
                let q: Vec<f64> = t.actions(i).map(|a| t.cost[a] + t.expect(a, &v)).collect();
                let min = q.iter().copied().fold(f64::INFINITY, f64::min);
                if q[current - t.action_start[i]] <= min + tie {
                    return current;
                }
                let first = q.iter().position(|&x| x <= min + tie).unwrap();
                t.action_start[i] + first
            })
            .collect();

        if improved == choice {
            let residual = optimality_residual(&t, eval.g, &v);
            return Ok(ExactSolution {
                space,
                policy: TabularPolicy {
                    decisions: choice.iter().map(|&a| t.decisions[a]).collect(),
                },
                g: eval.g,
                v,
                reference,
                g_history,
                rounds: round,
                bellman_residual: residual,
            });
        }
        choice = improved;
        warm = Some(v);
    }
    Err(Error::NotConverged {
        what: "policy iteration",
        iterations: config.max_rounds,
        residual: f64::NAN,
    })
}

fn optimality_residual(t: &Transitions, g: f64, v: &[f64]) -> f64 {
    (0..t.n_states())
        .into_par_iter()
        .map(|i| {
            let best = t
                .actions(i)
                .map(|a| t.cost[a] + t.expect(a, v))
                .fold(f64::INFINITY, f64::min);
            (best - g - v[i]).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// `C(s, d) + sum P(s' | s, d) v(s')` for every feasible `d` of `s`.
pub fn q_values<M: TabularModel>(
    model: &M,
    space: &StateSpace<M::State>,
    v: &[f64],
    s: &M::State,
) -> Result<Vec<(Decision, f64)>> {
    model
        .decisions(s)
        .into_iter()
        .map(|d| {
            let row = successor_row(model, space, s, d)?;
            let ev: f64 = row.iter().map(|&(j, q)| q * v[j as usize]).sum();
            Ok((d, model.expected_cost(s, d) + ev))
        })
        .collect()
}

/// Max-norm residual of the Bellman optimality equation
/// `g + v(s) = min_d C(s, d) + sum P v`, recomputed from the model.
pub fn bellman_residual<M: TabularModel>(model: &M, solution: &ExactSolution<M::State>) -> Result<f64> {
    let space = &solution.space;
    space
        .states()
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let best = q_values(model, space, &solution.v, s)?
                .into_iter()
                .map(|(_, q)| q)
                .fold(f64::INFINITY, f64::min);
            Ok((best - solution.g - solution.v[i]).abs())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}
