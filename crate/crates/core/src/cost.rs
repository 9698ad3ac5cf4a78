use std::ops::{Add, AddAssign, Div};

use crate::params::InstanceParams;
use crate::state::{backorders, Decision, FailureRealization, SystemState};

/// One period's cost split by category.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CostBreakdown {
    pub purchase: f64,
    pub holding: f64,
    pub backorder: f64,
    pub maintenance: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.purchase + self.holding + self.backorder + self.maintenance
    }
}

impl Add for CostBreakdown {
    type Output = CostBreakdown;

    fn add(self, o: CostBreakdown) -> CostBreakdown {
        CostBreakdown {
            purchase: self.purchase + o.purchase,
            holding: self.holding + o.holding,
            backorder: self.backorder + o.backorder,
            maintenance: self.maintenance + o.maintenance,
        }
    }
}

impl AddAssign for CostBreakdown {
    fn add_assign(&mut self, o: CostBreakdown) {
        *self = *self + o;
    }
}

impl Div<f64> for CostBreakdown {
    type Output = CostBreakdown;

    fn div(self, d: f64) -> CostBreakdown {
        CostBreakdown {
            purchase: self.purchase / d,
            holding: self.holding / d,
            backorder: self.backorder / d,
            maintenance: self.maintenance / d,
        }
    }
}

/// Fixed plus variable ordering cost.
pub fn purchase_cost(decision: Decision, params: &InstanceParams) -> f64 {
    let mut cost = 0.0;
    if decision.cm_batches > 0 {
        cost += params.cm.order_cost + params.cm.unit_price * (decision.cm_batches * params.batch_size) as f64;
    }
    if decision.am_items > 0 {
        cost += params.am.order_cost + params.am.unit_price * decision.am_items as f64;
    }
    cost
}

/// Maintenance is charged on expected failures of the installed base.
pub fn maintenance_cost(state: &SystemState, params: &InstanceParams) -> f64 {
    params.maintenance_cost
        * (params.cm.failure_mean * state.cm_installed as f64 + params.am.failure_mean * state.am_installed as f64)
}

/// Cost of a period given its realized failures. Backorders are charged on
/// the open backlog plus this period's failures not covered by stock.
pub fn period_cost(
    state: &SystemState,
    decision: Decision,
    failures: FailureRealization,
    params: &InstanceParams,
) -> CostBreakdown {
    let short = (failures.total() + backorders(state, params)).saturating_sub(state.stock());
    CostBreakdown {
        purchase: purchase_cost(decision, params),
        holding: params.holding_cost * state.stock() as f64,
        backorder: params.backorder_cost * short as f64,
        maintenance: maintenance_cost(state, params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::fixtures;

    #[test]
    fn purchase_example() {
        let p = fixtures::instance1();
        let s = SystemState::initial(&p);
        let c = period_cost(&s, Decision::new(1, 2), FailureRealization::default(), &p);
        assert_eq!(c.purchase, 47000.0);
    }

    #[test]
    fn holding_example() {
        let p = fixtures::instance1();
        let mut s = SystemState::initial(&p);
        s.cm_stock = 2;
        s.am_stock = 1;
        let c = period_cost(&s, Decision::NONE, FailureRealization::default(), &p);
        assert_eq!(c.holding, 87.0);
        assert_eq!(c.backorder, 0.0);
        assert_eq!(c.total(), c.purchase + c.holding + c.backorder + c.maintenance);
    }

    #[test]
    fn backorder_example() {
        let p = fixtures::instance1();
        let mut s = SystemState::initial(&p);
        s.cm_installed = 6;
        let c = period_cost(&s, Decision::NONE, FailureRealization { cm: 1, am: 0 }, &p);
        assert_eq!(c.backorder, 11450.0);
        assert!((c.maintenance - 5000.0 * 0.06).abs() < 1e-9);
    }
}
