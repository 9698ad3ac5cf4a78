//! Stationary behaviour of a solved policy.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};

use super::transitions::{successor_row, PolicyChain};
use super::{ExactSolution, SolverConfig, TabularModel};

fn policy_chain<M: TabularModel>(model: &M, solution: &ExactSolution<M::State>) -> Result<PolicyChain> {
    let space = &solution.space;
    let mut chain = PolicyChain {
        cost: Vec::with_capacity(space.len()),
        start: vec![0],
        succ: Vec::new(),
        prob: Vec::new(),
    };
    for (s, &d) in space.states().iter().zip(&solution.policy.decisions) {
        chain.cost.push(0.0);
        for (j, q) in successor_row(model, space, s, d)? {
            chain.succ.push(j);
            chain.prob.push(q);
        }
        chain.start.push(chain.succ.len());
    }
    Ok(chain)
}

/// Number of closed communicating classes of the chain.
fn closed_classes(chain: &PolicyChain) -> usize {
    let mut graph = DiGraph::<(), ()>::with_capacity(chain.len(), chain.succ.len());
    for _ in 0..chain.len() {
        graph.add_node(());
    }
    for i in 0..chain.len() {
        for (j, q) in chain.successors(i) {
            if q > 0.0 && i != j {
                graph.add_edge((i as u32).into(), (j as u32).into(), ());
            }
        }
    }
    let sccs = tarjan_scc(&graph);
    let mut component = vec![0usize; chain.len()];
    for (c, members) in sccs.iter().enumerate() {
        for node in members {
            component[node.index()] = c;
        }
    }
    sccs.iter()
        .enumerate()
        .filter(|(c, members)| {
            members.iter().all(|node| {
                chain
                    .successors(node.index())
                    .all(|(j, q)| q == 0.0 || component[j] == *c)
            })
        })
        .count()
}

/// Errors unless the policy's chain has exactly one closed class.
pub fn check_unichain<M: TabularModel>(model: &M, solution: &ExactSolution<M::State>) -> Result<()> {
    let chain = policy_chain(model, solution)?;
    match closed_classes(&chain) {
        1 => Ok(()),
        k => Err(Error::Multichain(format!("{k} closed classes"))),
    }
}

fn l1_residual(chain: &PolicyChain, pi: &[f64]) -> f64 {
    let mut next = vec![0.0; pi.len()];
    for (i, &p) in pi.iter().enumerate() {
        for (j, q) in chain.successors(i) {
            next[j] += p * q;
        }
    }
    next.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum()
}

fn dense_stationary(chain: &PolicyChain) -> Option<Vec<f64>> {
    let n = chain.len();
    // Rows of (P^T - I), last equation replaced by normalization.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] -= 1.0;
        for (j, q) in chain.successors(i) {
            a[(j, i)] += q;
        }
    }
    a.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let x = a.lu().solve(&rhs)?;
    Some(x.iter().map(|&p| p.max(0.0)).collect())
}

fn power_stationary(chain: &PolicyChain, start: usize, config: &SolverConfig) -> Result<Vec<f64>> {
    let n = chain.len();
    let tau = config.tau;
    let mut pi = vec![0.0; n];
    pi[start] = 1.0;
    let mut next = vec![0.0; n];
    for _ in 0..config.max_sweeps {
        next.iter_mut().zip(&pi).for_each(|(x, p)| *x = (1.0 - tau) * p);
        for (i, &p) in pi.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (j, q) in chain.successors(i) {
                next[j] += tau * p * q;
            }
        }
        let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if diff < 1e-13 {
            return Ok(pi);
        }
    }
    Err(Error::NotConverged {
        what: "stationary distribution",
        iterations: config.max_sweeps,
        residual: l1_residual(chain, &pi),
    })
}

/// Long-run state distribution under the solved policy, indexed like the
/// solution's state space. Errors on a multichain policy.
pub fn stationary_distribution<M: TabularModel>(
    model: &M,
    solution: &ExactSolution<M::State>,
    config: &SolverConfig,
) -> Result<Vec<f64>> {
    let chain = policy_chain(model, solution)?;
    let classes = closed_classes(&chain);
    if classes != 1 {
        return Err(Error::Multichain(format!("{classes} closed classes")));
    }
    let mut pi = match (chain.len() < config.dense_threshold).then(|| dense_stationary(&chain)).flatten() {
        Some(pi) => pi,
        None => power_stationary(&chain, solution.reference, config)?,
    };
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    let res = l1_residual(&chain, &pi);
    if res > 1e-10 {
        // A dense solve that lost accuracy; refine by iteration.
        let mut refined = power_stationary(&chain, solution.reference, config)?;
        let total: f64 = refined.iter().sum();
        refined.iter_mut().for_each(|p| *p /= total);
        return Ok(refined);
    }
    Ok(pi)
}

/// Long-run items ordered per period from each source, `(cm, am)`.
pub fn order_fractions<M: TabularModel>(
    model: &M,
    solution: &ExactSolution<M::State>,
    config: &SolverConfig,
) -> Result<(f64, f64)> {
    let pi = stationary_distribution(model, solution, config)?;
    let q = model.params().batch_size as f64;
    let mut cm = 0.0;
    let mut am = 0.0;
    for (p, d) in pi.iter().zip(&solution.policy.decisions) {
        cm += p * q * d.cm_batches as f64;
        am += p * d.am_items as f64;
    }
    Ok((cm, am))
}

/// Fraction of ordered items sourced from AM in steady state; zero when the
/// policy never orders.
pub fn steady_state_am_fraction<M: TabularModel>(
    model: &M,
    solution: &ExactSolution<M::State>,
    config: &SolverConfig,
) -> Result<f64> {
    let (cm, am) = order_fractions(model, solution, config)?;
    if cm + am <= 0.0 {
        return Ok(0.0);
    }
    Ok((am / (cm + am)).clamp(0.0, 1.0))
}
