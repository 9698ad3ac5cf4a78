//! Network policies that score a fixed list of decisions and pick the best
//! feasible one.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::params::InstanceParams;
use crate::policy::Policy;
use crate::state::{decisions_within, is_feasible, Decision, SystemState};

use super::features::FeatureSchema;
use super::mlp::Mlp;

/// The classes of a classifier policy, lexicographic by `(x_C, x_A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionGrid {
    pub decisions: Vec<Decision>,
}

impl DecisionGrid {
    /// Every `(x_C, x_A)` with `x_C Q + x_A <= S + N`, the largest budget,
    /// reached when every installed slot is backordered.
    pub fn for_instance(params: &InstanceParams) -> Self {
        Self::covering(std::slice::from_ref(params))
    }

    /// Every `(x_C, x_A)` with `x_C Q_min + x_A <= max(S + N)` over
    /// `instances`, so that each instance's feasible decisions are all
    /// present.
    pub fn covering(instances: &[InstanceParams]) -> Self {
        let q = instances.iter().map(|p| p.batch_size).min().unwrap_or(1);
        let s = instances
            .iter()
            .map(|p| p.max_circulating + p.installed_base)
            .max()
            .unwrap_or(0);
        Self::spanning(s, q)
    }

    /// Every `(x_C, x_A)` with `x_C q + x_A <= s`.
    pub fn spanning(s: u32, q: u32) -> Self {
        let q = q.max(1);
        let mut decisions = Vec::new();
        for c in 0..=s / q {
            for a in 0..=s - c * q {
                decisions.push(Decision::new(c, a));
            }
        }
        DecisionGrid { decisions }
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn index_of(&self, d: Decision) -> Option<usize> {
        self.decisions.binary_search(&d).ok()
    }
}

/// Highest-scoring feasible entry of `grid`; earlier entries win ties and
/// ordering nothing is the fallback.
pub fn masked_argmax(scores: &[f64], grid: &DecisionGrid, state: &SystemState, params: &InstanceParams) -> Decision {
    let mut best: Option<(f64, Decision)> = None;
    for (&s, &d) in scores.iter().zip(&grid.decisions) {
        if !is_feasible(d, state, params) {
            continue;
        }
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, d));
        }
    }
    best.map_or(Decision::NONE, |(_, d)| d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub net: Mlp,
    pub schema: FeatureSchema,
    pub grid: DecisionGrid,
}

impl Classifier {
    pub fn new(net: Mlp, schema: FeatureSchema, grid: DecisionGrid) -> Result<Self> {
        if net.inputs() != schema.len() || net.outputs() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "network maps {} to {} but features have {} entries and the grid {} decisions",
                net.inputs(),
                net.outputs(),
                schema.len(),
                grid.len()
            )));
        }
        Ok(Classifier { net, schema, grid })
    }

    pub fn decide_for(&self, state: &SystemState, params: &InstanceParams) -> Decision {
        let scores = self.net.forward(&self.schema.encode(state, params));
        masked_argmax(&scores, &self.grid, state, params)
    }

    /// The policy this classifier induces on one instance. Rejects instances
    /// outside the feature layout or training grid.
    pub fn bind(self: &Arc<Self>, params: &InstanceParams) -> Result<ClassifierPolicy> {
        self.schema.check(params)?;
        let budget = params.max_circulating + params.installed_base;
        let missing = decisions_within(budget, params.batch_size)
            .into_iter()
            .find(|&d| self.grid.index_of(d).is_none());
        if let Some(d) = missing {
            return Err(Error::InvalidArgument(format!("decision {d} is missing from the classifier grid")));
        }
        Ok(ClassifierPolicy {
            classifier: self.clone(),
            params: params.clone(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ClassifierPolicy {
    pub classifier: Arc<Classifier>,
    params: InstanceParams,
}

impl Policy for ClassifierPolicy {
    fn decide(&self, state: &SystemState) -> Decision {
        self.classifier.decide_for(state, &self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::fixtures;
    use crate::state::feasible_decisions;

    #[test]
    fn grid_matches_feasible_set_at_empty_position() {
        let p = fixtures::instance1();
        let grid = DecisionGrid::for_instance(&p);
        let mut s = SystemState::initial(&p);
        s.cm_installed = 0;
        s.am_installed = 0;
        // Every slot backordered: IP = -N, the largest budget.
        assert_eq!(grid.decisions, feasible_decisions(&s, &p));
        for (i, &d) in grid.decisions.iter().enumerate() {
            assert_eq!(grid.index_of(d), Some(i));
        }
    }

    #[test]
    fn masking_skips_infeasible_winners() {
        let p = fixtures::micro();
        let grid = DecisionGrid::for_instance(&p);
        let mut s = SystemState::initial(&p);
        s.cm_stock = p.max_circulating;
        s.cm_installed = p.installed_base;
        // At IP = S only ordering nothing is feasible.
        let mut scores = vec![0.0; grid.len()];
        *scores.last_mut().unwrap() = 10.0;
        assert_eq!(masked_argmax(&scores, &grid, &s, &p), Decision::NONE);
    }
}
