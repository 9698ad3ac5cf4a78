//! One-period dynamics: failures, replacement from stock and arrivals, and the
//! pipeline shift.
//!
//! Within a period the order of events is: observe the state, place the
//! order, incur costs, realize failures (replaced from stock where possible),
//! then receive the oldest pipeline slot, which clears backorders before
//! going to stock.

use std::collections::HashMap;

use crate::cost::{maintenance_cost, purchase_cost, CostBreakdown};
use crate::demand::FailureModel;
use crate::error::{Error, Result};
use crate::params::{InstanceParams, Source};
use crate::state::{backorders, is_feasible, Decision, FailureRealization, SystemState};

/// Items installed this period, split by origin: `stock_*` from on-hand
/// stock before arrivals, `arrival_*` from the arriving orders.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Allocation {
    pub stock_cm: u32,
    pub stock_am: u32,
    pub arrival_cm: u32,
    pub arrival_am: u32,
}

impl Allocation {
    pub fn total(&self) -> u32 {
        self.stock_cm + self.stock_am + self.arrival_cm + self.arrival_am
    }
}

/// Items arriving at the end of the current period: `(cm_items, am_items)`.
pub fn arrivals(state: &SystemState, params: &InstanceParams) -> (u32, u32) {
    (state.cm_pipeline[0] * params.batch_size, state.am_pipeline[0])
}

/// Cascade the period's demand (open backorders plus new failures) over CM
/// and AM stock, then over CM and AM arrivals. Within each stage the mode
/// with the lower failure rate goes first.
pub fn allocate_replacements(
    state: &SystemState,
    arrivals: (u32, u32),
    failures: FailureRealization,
    params: &InstanceParams,
) -> Allocation {
    let mut demand = backorders(state, params) + failures.total();
    let mut take = |available: u32| {
        let used = demand.min(available);
        demand -= used;
        used
    };
    match params.preferred_source() {
        Source::Cm => {
            let stock_cm = take(state.cm_stock);
            let stock_am = take(state.am_stock);
            let arrival_cm = take(arrivals.0);
            let arrival_am = take(arrivals.1);
            Allocation {
                stock_cm,
                stock_am,
                arrival_cm,
                arrival_am,
            }
        }
        Source::Am => {
            let stock_am = take(state.am_stock);
            let stock_cm = take(state.cm_stock);
            let arrival_am = take(arrivals.1);
            let arrival_cm = take(arrivals.0);
            Allocation {
                stock_cm,
                stock_am,
                arrival_cm,
                arrival_am,
            }
        }
    }
}

/// Applies a period in place. The caller guarantees feasibility of the
/// decision and validity of the failures.
#[inline]
pub fn advance(state: &mut SystemState, decision: Decision, failures: FailureRealization, params: &InstanceParams) {
    let arr = arrivals(state, params);
    let alloc = allocate_replacements(state, arr, failures, params);
    state.cm_installed = state.cm_installed - failures.cm + alloc.stock_cm + alloc.arrival_cm;
    state.am_installed = state.am_installed - failures.am + alloc.stock_am + alloc.arrival_am;
    state.cm_stock = state.cm_stock + arr.0 - alloc.stock_cm - alloc.arrival_cm;
    state.am_stock = state.am_stock + arr.1 - alloc.stock_am - alloc.arrival_am;
    state.cm_pipeline.rotate_left(1);
    *state.cm_pipeline.last_mut().expect("lead time >= 1") = decision.cm_batches;
    state.am_pipeline.rotate_left(1);
    *state.am_pipeline.last_mut().expect("lead time >= 1") = decision.am_items;
}

/// Next state, checked against every state invariant.
pub fn transition(
    state: &SystemState,
    decision: Decision,
    failures: FailureRealization,
    params: &InstanceParams,
) -> Result<SystemState> {
    if !is_feasible(decision, state, params) {
        return Err(Error::Contract(format!("decision {decision} infeasible in {state}")));
    }
    if !failures.is_valid_for(state) {
        return Err(Error::Contract(format!("failures {failures:?} exceed installed base in {state}")));
    }
    let mut next = state.clone();
    advance(&mut next, decision, failures, params);
    next.check(params)?;
    Ok(next)
}

/// Instance parameters together with their precomputed failure tables.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: InstanceParams,
    pub failures: FailureModel,
}

impl Model {
    pub fn new(params: InstanceParams) -> Result<Self> {
        params.validate()?;
        let failures = FailureModel::new(&params)?;
        Ok(Model { params, failures })
    }

    /// Every successor with its probability; successors reached by several
    /// failure pairs are merged.
    pub fn enumerate_transitions(&self, state: &SystemState, decision: Decision) -> Vec<(SystemState, f64)> {
        let pc = self.failures.cm.pmf(state.cm_installed);
        let pa = self.failures.am.pmf(state.am_installed);
        let mut out: Vec<(SystemState, f64)> = Vec::with_capacity(pc.len() * pa.len());
        let mut seen: HashMap<SystemState, usize> = HashMap::new();
        for (kc, &p_c) in pc.iter().enumerate() {
            for (ka, &p_a) in pa.iter().enumerate() {
                let prob = p_c * p_a;
                let mut next = state.clone();
                advance(
                    &mut next,
                    decision,
                    FailureRealization {
                        cm: kc as u32,
                        am: ka as u32,
                    },
                    &self.params,
                );
                match seen.get(&next) {
                    Some(&i) => out[i].1 += prob,
                    None => {
                        seen.insert(next.clone(), out.len());
                        out.push((next, prob));
                    }
                }
            }
        }
        out
    }

    /// Expected one-period cost of `decision` in `state`.
    pub fn expected_cost(&self, state: &SystemState, decision: Decision) -> f64 {
        let p = &self.params;
        let pc = self.failures.cm.pmf(state.cm_installed);
        let pa = self.failures.am.pmf(state.am_installed);
        let open = backorders(state, p);
        let stock = state.stock();
        let mut shortage = 0.0;
        for (kc, &p_c) in pc.iter().enumerate() {
            for (ka, &p_a) in pa.iter().enumerate() {
                let short = (open + kc as u32 + ka as u32).saturating_sub(stock);
                shortage += p_c * p_a * short as f64;
            }
        }
        purchase_cost(decision, p)
            + p.holding_cost * stock as f64
            + p.backorder_cost * shortage
            + maintenance_cost(state, p)
    }

    /// Draws this period's failures from two uniforms.
    #[inline]
    pub fn sample_failures(&self, state: &SystemState, u_cm: f64, u_am: f64) -> FailureRealization {
        FailureRealization {
            cm: self.failures.cm.sample(state.cm_installed, u_cm),
            am: self.failures.am.sample(state.am_installed, u_am),
        }
    }

    /// One simulated period: cost first, then the state advances.
    #[inline]
    pub fn step(&self, state: &mut SystemState, decision: Decision, u_cm: f64, u_am: f64) -> (CostBreakdown, FailureRealization) {
        let failures = self.sample_failures(state, u_cm, u_am);
        let cost = crate::cost::period_cost(state, decision, failures, &self.params);
        advance(state, decision, failures, &self.params);
        (cost, failures)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::fixtures;
    use crate::state::{feasible_decisions, inventory_position};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn alloc(
        b: u32,
        kc: u32,
        ka: u32,
        sc: u32,
        sa: u32,
        ac: u32,
        aa: u32,
    ) -> (u32, u32, u32, u32) {
        let p = fixtures::instance1();
        let mut s = SystemState::initial(&p);
        s.cm_installed = 7 - b - ka;
        s.am_installed = ka;
        s.cm_stock = sc;
        s.am_stock = sa;
        let a = allocate_replacements(&s, (ac, aa), FailureRealization { cm: kc, am: ka }, &p);
        (a.stock_cm, a.stock_am, a.arrival_cm, a.arrival_am)
    }

    #[test]
    fn allocation_examples() {
        assert_eq!(alloc(0, 1, 0, 1, 0, 0, 0), (1, 0, 0, 0));
        assert_eq!(alloc(2, 0, 1, 0, 1, 5, 0), (0, 1, 2, 0));
        assert_eq!(alloc(0, 0, 0, 3, 0, 5, 0), (0, 0, 0, 0));
    }

    #[test]
    fn am_first_when_it_fails_less() {
        let mut p = fixtures::instance1();
        p.am.failure_mean = 0.005;
        p.am.failure_var = 0.01;
        let mut s = SystemState::initial(&p);
        s.cm_stock = 1;
        s.am_stock = 1;
        let a = allocate_replacements(&s, (0, 0), FailureRealization { cm: 1, am: 0 }, &p);
        assert_eq!((a.stock_cm, a.stock_am), (0, 1));
    }

    #[test]
    fn identity_transition_shifts_pipeline() {
        let p = fixtures::instance1();
        let s = SystemState::initial(&p);
        let next = transition(&s, Decision::NONE, FailureRealization::default(), &p).unwrap();
        assert_eq!(next, s);
        let next = transition(&s, Decision::new(1, 2), FailureRealization::default(), &p).unwrap();
        assert_eq!(next.cm_pipeline, vec![0, 0, 0, 0, 0, 0, 0, 1]);
        assert_eq!(next.am_pipeline, vec![0, 2]);
    }

    #[test]
    fn spare_installed_immediately() {
        let p = fixtures::instance1();
        let mut s = SystemState::initial(&p);
        s.cm_installed = 6;
        s.am_installed = 1;
        s.cm_stock = 1;
        let next = transition(&s, Decision::NONE, FailureRealization { cm: 1, am: 0 }, &p).unwrap();
        assert_eq!(next.cm_installed, 6);
        assert_eq!(next.cm_stock, 0);
    }

    #[test]
    fn infeasible_decision_is_a_contract_error() {
        let p = fixtures::instance1();
        let s = SystemState::initial(&p);
        assert!(matches!(
            transition(&s, Decision::new(2, 0), FailureRealization::default(), &p),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn random_walk_conserves_installed_base() {
        let model = Model::new(fixtures::instance1()).unwrap();
        let p = &model.params;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut s = SystemState::initial(p);
        for _ in 0..1000 {
            let ds = feasible_decisions(&s, p);
            let d = ds[rng.random_range(0..ds.len())];
            // Inflate failures so the walk visits backorder states.
            let f = FailureRealization {
                cm: rng.random_range(0..=s.cm_installed.min(2)),
                am: rng.random_range(0..=s.am_installed.min(2)),
            };
            let ip = inventory_position(&s, p);
            let next = transition(&s, d, f, p).unwrap();
            assert_eq!(next.installed() + backorders(&next, p), p.installed_base);
            assert_eq!(
                inventory_position(&next, p),
                ip + d.items(p) as i64 - f.total() as i64
            );
            s = next;
        }
    }

    #[test]
    fn enumerated_probabilities_sum_to_one() {
        let model = Model::new(fixtures::instance1()).unwrap();
        let mut s = SystemState::initial(&model.params);
        s.cm_installed = 0;
        let succ = model.enumerate_transitions(&s, Decision::NONE);
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].1, 1.0);

        s.cm_installed = 1;
        s.am_installed = 1;
        let succ = model.enumerate_transitions(&s, Decision::new(0, 1));
        assert!(succ.len() <= 4);
        let total: f64 = succ.iter().map(|x| x.1).sum();
        assert!((total - 1.0).abs() < 1e-10);

        let succ = model.enumerate_transitions(&SystemState::initial(&model.params), Decision::new(1, 0));
        let total: f64 = succ.iter().map(|x| x.1).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sampled_frequencies_match_enumeration() {
        let mut params = fixtures::instance1();
        // Larger rates give every successor enough mass to test.
        params.cm.failure_mean = 0.3;
        params.cm.failure_var = 0.6;
        params.am.failure_mean = 0.4;
        params.am.failure_var = 0.8;
        let model = Model::new(params).unwrap();
        let mut s = SystemState::initial(&model.params);
        s.cm_installed = 3;
        s.am_installed = 2;
        s.cm_stock = 1;
        let d = Decision::new(0, 1);
        let succ = model.enumerate_transitions(&s, d);
        let mut counts: HashMap<SystemState, u64> = HashMap::new();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 1_000_000u64;
        for _ in 0..draws {
            let mut next = s.clone();
            model.step(&mut next, d, rng.random(), rng.random());
            *counts.entry(next).or_default() += 1;
        }
        assert_eq!(counts.len(), succ.len());
        for (state, prob) in &succ {
            let freq = *counts.get(state).unwrap_or(&0) as f64 / draws as f64;
            let se = (prob * (1.0 - prob) / draws as f64).sqrt();
            assert!((freq - prob).abs() <= 3.0 * se + 1e-12, "{state}: {freq} vs {prob}");
        }
    }

    #[test]
    fn expected_cost_averages_period_cost() {
        let model = Model::new(fixtures::instance1()).unwrap();
        let mut s = SystemState::initial(&model.params);
        s.cm_installed = 5;
        s.am_installed = 1;
        let d = Decision::new(0, 1);
        let pc = model.failures.cm.pmf(5);
        let pa = model.failures.am.pmf(1);
        let mut expect = 0.0;
        for (kc, a) in pc.iter().enumerate() {
            for (ka, b) in pa.iter().enumerate() {
                let f = FailureRealization { cm: kc as u32, am: ka as u32 };
                expect += a * b * crate::cost::period_cost(&s, d, f, &model.params).total();
            }
        }
        assert!((model.expected_cost(&s, d) - expect).abs() < 1e-9);
    }
}
