use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::state::Decision;

use super::space::StateSpace;
use super::TabularModel;

/// Every state's feasible actions with their expected cost and successor
/// distribution, in compressed sparse rows.
///
/// Actions of state `i` occupy `action_start[i]..action_start[i + 1]`; the
/// successors of action `a` occupy `succ_start[a]..succ_start[a + 1]`.
#[derive(Debug, Clone)]
pub struct Transitions {
    pub action_start: Vec<usize>,
    pub decisions: Vec<Decision>,
    pub cost: Vec<f64>,
    pub succ_start: Vec<usize>,
    pub succ: Vec<u32>,
    pub prob: Vec<f64>,
}

struct StateRows {
    decisions: Vec<Decision>,
    cost: Vec<f64>,
    lens: Vec<usize>,
    succ: Vec<u32>,
    prob: Vec<f64>,
}

/// Merges repeated successor indices, summing their probabilities.
pub(crate) fn merge_row(row: &mut Vec<(u32, f64)>) {
    row.sort_unstable_by_key(|&(j, _)| j);
    let mut w = 0;
    for r in 0..row.len() {
        if w > 0 && row[w - 1].0 == row[r].0 {
            row[w - 1].1 += row[r].1;
        } else {
            row[w] = row[r];
            w += 1;
        }
    }
    row.truncate(w);
}

/// Successor distribution of one state-action pair as state ordinals.
pub(crate) fn successor_row<M: TabularModel>(
    model: &M,
    space: &StateSpace<M::State>,
    s: &M::State,
    d: Decision,
) -> Result<Vec<(u32, f64)>> {
    let mut row = Vec::new();
    let mut missing = None;
    model.for_each_successor(s, d, &mut |next, q| match space.index_of(next) {
        Some(j) => row.push((j as u32, q)),
        None => missing = Some(format!("{next:?}")),
    });
    if let Some(m) = missing {
        return Err(Error::Contract(format!("successor {m} of {s:?} under {d} is not enumerated")));
    }
    merge_row(&mut row);
    Ok(row)
}

impl Transitions {
    pub fn build<M: TabularModel>(model: &M, space: &StateSpace<M::State>) -> Result<Self> {
        let rows: Vec<StateRows> = space
            .states()
            .par_iter()
            .map(|s| {
                let decisions = model.decisions(s);
                let mut out = StateRows {
                    cost: decisions.iter().map(|&d| model.expected_cost(s, d)).collect(),
                    lens: Vec::with_capacity(decisions.len()),
                    succ: Vec::new(),
                    prob: Vec::new(),
                    decisions,
                };
                for &d in &out.decisions {
                    let row = successor_row(model, space, s, d)?;
                    out.lens.push(row.len());
                    for (j, q) in row {
                        out.succ.push(j);
                        out.prob.push(q);
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;

        let n_actions: usize = rows.iter().map(|r| r.decisions.len()).sum();
        let n_succ: usize = rows.iter().map(|r| r.succ.len()).sum();
        let mut t = Transitions {
            action_start: Vec::with_capacity(space.len() + 1),
            decisions: Vec::with_capacity(n_actions),
            cost: Vec::with_capacity(n_actions),
            succ_start: Vec::with_capacity(n_actions + 1),
            succ: Vec::with_capacity(n_succ),
            prob: Vec::with_capacity(n_succ),
        };
        t.action_start.push(0);
        t.succ_start.push(0);
        for r in rows {
            t.decisions.extend_from_slice(&r.decisions);
            t.cost.extend_from_slice(&r.cost);
            for len in r.lens {
                t.succ_start.push(t.succ_start.last().unwrap() + len);
            }
            t.succ.extend_from_slice(&r.succ);
            t.prob.extend_from_slice(&r.prob);
            t.action_start.push(t.decisions.len());
        }
        Ok(t)
    }

    pub fn n_states(&self) -> usize {
        self.action_start.len() - 1
    }

    pub fn actions(&self, i: usize) -> std::ops::Range<usize> {
        self.action_start[i]..self.action_start[i + 1]
    }

    /// `sum_j P(j | a) v[j]`.
    #[inline]
    pub fn expect(&self, a: usize, v: &[f64]) -> f64 {
        let r = self.succ_start[a]..self.succ_start[a + 1];
        self.succ[r.clone()]
            .iter()
            .zip(&self.prob[r])
            .map(|(&j, &q)| q * v[j as usize])
            .sum()
    }

    pub fn successors(&self, a: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.succ_start[a]..self.succ_start[a + 1];
        self.succ[r.clone()].iter().map(|&j| j as usize).zip(self.prob[r].iter().copied())
    }

    /// Global action index of `d` in state `i`.
    pub fn action_of(&self, i: usize, d: Decision) -> Option<usize> {
        self.actions(i).find(|&a| self.decisions[a] == d)
    }
}

/// Transitions of one fixed policy only: one action per state.
#[derive(Debug, Clone)]
pub(crate) struct PolicyChain {
    pub cost: Vec<f64>,
    pub start: Vec<usize>,
    pub succ: Vec<u32>,
    pub prob: Vec<f64>,
}

impl PolicyChain {
    pub fn from_transitions(t: &Transitions, choice: &[usize]) -> Self {
        let mut chain = PolicyChain {
            cost: Vec::with_capacity(choice.len()),
            start: vec![0],
            succ: Vec::new(),
            prob: Vec::new(),
        };
        for &a in choice {
            chain.cost.push(t.cost[a]);
            for (j, q) in t.successors(a) {
                chain.succ.push(j as u32);
                chain.prob.push(q);
            }
            chain.start.push(chain.succ.len());
        }
        chain
    }

    pub fn len(&self) -> usize {
        self.cost.len()
    }

    #[inline]
    pub fn expect(&self, i: usize, v: &[f64]) -> f64 {
        let r = self.start[i]..self.start[i + 1];
        self.succ[r.clone()]
            .iter()
            .zip(&self.prob[r])
            .map(|(&j, &q)| q * v[j as usize])
            .sum()
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.start[i]..self.start[i + 1];
        self.succ[r.clone()].iter().map(|&j| j as usize).zip(self.prob[r].iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Model;
    use crate::params::fixtures;

    #[test]
    fn rows_are_distributions() {
        let model = Model::new(fixtures::micro()).unwrap();
        let space = StateSpace::from_states(model.enumerate(usize::MAX).unwrap()).unwrap();
        let t = Transitions::build(&model, &space).unwrap();
        assert_eq!(t.n_states(), space.len());
        for i in 0..t.n_states() {
            let acts = t.actions(i);
            assert!(!acts.is_empty());
            assert_eq!(t.decisions[acts.start], Decision::NONE);
            for a in acts {
                let total: f64 = t.successors(a).map(|(_, q)| q).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn merge_sums_duplicates() {
        let mut row = vec![(3, 0.25), (1, 0.25), (3, 0.5)];
        merge_row(&mut row);
        assert_eq!(row, vec![(1, 0.25), (3, 0.75)]);
    }
}
