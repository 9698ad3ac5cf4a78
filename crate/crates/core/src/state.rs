//! System state, ordering decisions and the feasibility constraints tying them
//! to an instance.

use std::fmt;

use crate::error::{Error, Result};
use crate::params::InstanceParams;

/// State observed at the start of a period.
///
/// Pipelines are fixed-length shift registers, oldest order first. Slot 0 of
/// `cm_pipeline` arrives at the end of the current period. CM slots count
/// batches, AM slots count items.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemState {
    pub cm_installed: u32,
    pub am_installed: u32,
    pub cm_stock: u32,
    pub am_stock: u32,
    pub cm_pipeline: Vec<u32>,
    pub am_pipeline: Vec<u32>,
}

impl SystemState {
    /// Full CM installed base, no stock, empty pipelines.
    pub fn initial(params: &InstanceParams) -> Self {
        SystemState {
            cm_installed: params.installed_base,
            am_installed: 0,
            cm_stock: 0,
            am_stock: 0,
            cm_pipeline: vec![0; params.cm.lead_time],
            am_pipeline: vec![0; params.am.lead_time],
        }
    }

    pub fn installed(&self) -> u32 {
        self.cm_installed + self.am_installed
    }

    pub fn stock(&self) -> u32 {
        self.cm_stock + self.am_stock
    }

    /// Items on order, CM batches expanded to items.
    pub fn pipeline_items(&self, params: &InstanceParams) -> u32 {
        self.cm_pipeline.iter().sum::<u32>() * params.batch_size + self.am_pipeline.iter().sum::<u32>()
    }

    /// Checks every structural invariant against `params`.
    pub fn check(&self, params: &InstanceParams) -> Result<()> {
        let fail = |msg: String| Err(Error::Contract(msg));
        if self.installed() > params.installed_base {
            return fail(format!(
                "{} items installed in a base of {}",
                self.installed(),
                params.installed_base
            ));
        }
        if self.cm_pipeline.len() != params.cm.lead_time || self.am_pipeline.len() != params.am.lead_time {
            return fail("pipeline length differs from lead time".into());
        }
        if inventory_position(self, params) > params.max_circulating as i64 {
            return fail(format!(
                "inventory position {} exceeds {}",
                inventory_position(self, params),
                params.max_circulating
            ));
        }
        if self.stock() > 0 && backorders(self, params) > 0 {
            return fail("stock on hand while backorders are open".into());
        }
        Ok(())
    }
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[n=({},{}) s=({},{}) u_c={:?} u_a={:?}]",
            self.cm_installed, self.am_installed, self.cm_stock, self.am_stock, self.cm_pipeline, self.am_pipeline
        )
    }
}

/// An order: CM batches and AM items.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Decision {
    pub cm_batches: u32,
    pub am_items: u32,
}

impl Decision {
    pub const NONE: Decision = Decision {
        cm_batches: 0,
        am_items: 0,
    };

    pub fn new(cm_batches: u32, am_items: u32) -> Self {
        Decision { cm_batches, am_items }
    }

    /// Ordered items, batches expanded.
    pub fn items(&self, params: &InstanceParams) -> u32 {
        self.cm_batches * params.batch_size + self.am_items
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.cm_batches, self.am_items)
    }
}

/// Failures realized during one period.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct FailureRealization {
    pub cm: u32,
    pub am: u32,
}

impl FailureRealization {
    pub fn total(&self) -> u32 {
        self.cm + self.am
    }

    pub fn is_valid_for(&self, state: &SystemState) -> bool {
        self.cm <= state.cm_installed && self.am <= state.am_installed
    }
}

/// Open backorders: installed-base slots without an operating part.
pub fn backorders(state: &SystemState, params: &InstanceParams) -> u32 {
    debug_assert!(state.installed() <= params.installed_base);
    params.installed_base - state.installed()
}

/// Stock on hand plus pipeline minus backorders.
pub fn inventory_position(state: &SystemState, params: &InstanceParams) -> i64 {
    state.stock() as i64 + state.pipeline_items(params) as i64 - backorders(state, params) as i64
}

/// Items that may still be ordered without pushing the inventory position
/// above the cap.
pub fn order_budget(state: &SystemState, params: &InstanceParams) -> u32 {
    (params.max_circulating as i64 - inventory_position(state, params)).max(0) as u32
}

pub fn is_feasible(decision: Decision, state: &SystemState, params: &InstanceParams) -> bool {
    decision.items(params) <= order_budget(state, params)
}

/// All decisions with `0 <= x_C * Q_C + x_A <= S - IP`, ordered by `x_C`
/// then `x_A`. `(0, 0)` is always first.
pub fn feasible_decisions(state: &SystemState, params: &InstanceParams) -> Vec<Decision> {
    decisions_within(order_budget(state, params), params.batch_size)
}

/// Every decision ordering at most `budget` items, lexicographic.
pub fn decisions_within(budget: u32, batch_size: u32) -> Vec<Decision> {
    let mut out = Vec::new();
    for cm in 0..=budget / batch_size {
        for am in 0..=budget - cm * batch_size {
            out.push(Decision::new(cm, am));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::fixtures;

    fn state(nc: u32, na: u32, sc: u32, sa: u32, uc: Vec<u32>, ua: Vec<u32>) -> SystemState {
        SystemState {
            cm_installed: nc,
            am_installed: na,
            cm_stock: sc,
            am_stock: sa,
            cm_pipeline: uc,
            am_pipeline: ua,
        }
    }

    #[test]
    fn backorder_examples() {
        let p = fixtures::instance1();
        let s = |nc, na| state(nc, na, 0, 0, vec![0; 8], vec![0; 2]);
        assert_eq!(backorders(&s(7, 0), &p), 0);
        assert_eq!(backorders(&s(4, 2), &p), 1);
        assert_eq!(backorders(&s(0, 0), &p), 7);
    }

    #[test]
    fn inventory_position_examples() {
        let mut p = fixtures::instance1();
        p.cm.lead_time = 1;
        p.am.lead_time = 1;
        let s = state(7, 0, 2, 0, vec![1], vec![0]);
        assert_eq!(inventory_position(&s, &p), 7);
        let s = state(7, 0, 0, 0, vec![0], vec![0]);
        assert_eq!(inventory_position(&s, &p), 0);
        let s = state(5, 0, 0, 1, vec![0], vec![2]);
        assert_eq!(inventory_position(&s, &p), 1);
    }

    #[test]
    fn feasible_decision_examples() {
        let p = fixtures::instance1();
        // IP = 7: two CM spares plus a batch of five in the pipeline.
        let mut pipe = vec![0; 8];
        pipe[3] = 1;
        let s = state(7, 0, 2, 0, pipe, vec![0; 2]);
        assert_eq!(feasible_decisions(&s, &p), vec![Decision::new(0, 0), Decision::new(0, 1)]);

        let s = state(7, 0, 8, 0, vec![0; 8], vec![0; 2]);
        assert_eq!(feasible_decisions(&s, &p), vec![Decision::NONE]);

        let s = SystemState::initial(&p);
        let all = feasible_decisions(&s, &p);
        assert_eq!(all.len(), 13);
        assert_eq!(all[0], Decision::NONE);
        assert_eq!(all[9], Decision::new(1, 0));
        assert_eq!(all[12], Decision::new(1, 3));
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, all);
    }

    #[test]
    fn check_rejects_stock_with_backorders() {
        let p = fixtures::instance1();
        let s = state(6, 0, 1, 0, vec![0; 8], vec![0; 2]);
        assert!(s.check(&p).is_err());
        assert!(SystemState::initial(&p).check(&p).is_ok());
    }
}
