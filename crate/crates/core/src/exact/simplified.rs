//! Single-rate model: CM and AM items are indistinguishable once installed
//! or stocked, and every operating item fails at one blended rate.

use crate::cost::purchase_cost;
use crate::demand::FailureTable;
use crate::error::{Error, Result};
use crate::params::InstanceParams;
use crate::state::{decisions_within, Decision, SystemState};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SimplifiedState {
    pub installed: u32,
    pub stock: u32,
    pub cm_pipeline: Vec<u32>,
    pub am_pipeline: Vec<u32>,
}

impl SimplifiedState {
    pub fn from_full(state: &SystemState) -> Self {
        SimplifiedState {
            installed: state.installed(),
            stock: state.stock(),
            cm_pipeline: state.cm_pipeline.clone(),
            am_pipeline: state.am_pipeline.clone(),
        }
    }

    pub fn initial(params: &InstanceParams) -> Self {
        SimplifiedState::from_full(&SystemState::initial(params))
    }

    pub fn backorders(&self, params: &InstanceParams) -> u32 {
        params.installed_base - self.installed
    }

    pub fn inventory_position(&self, params: &InstanceParams) -> i64 {
        let pipe = self.cm_pipeline.iter().sum::<u32>() * params.batch_size + self.am_pipeline.iter().sum::<u32>();
        self.stock as i64 + pipe as i64 - self.backorders(params) as i64
    }
}

/// Blended single-rate parameters for an installed base with AM fraction
/// `gamma`: the failure count of a randomly chosen item has mean
/// `gamma mu_A + (1 - gamma) mu_C` and variance
/// `gamma V_A + (1 - gamma) V_C + gamma (1 - gamma) (mu_A - mu_C)^2`.
/// Both modes of the result carry the blended moments.
pub fn simplify_params(params: &InstanceParams, gamma: f64) -> Result<InstanceParams> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("gamma {gamma} outside [0, 1]")));
    }
    let (mc, ma) = (params.cm.failure_mean, params.am.failure_mean);
    let (vc, va) = (params.cm.failure_var, params.am.failure_var);
    let mean = gamma * ma + (1.0 - gamma) * mc;
    let var = gamma * va + (1.0 - gamma) * vc + gamma * (1.0 - gamma) * (ma - mc).powi(2);
    let mut out = params.clone();
    for mode in [&mut out.cm, &mut out.am] {
        mode.failure_mean = mean;
        mode.failure_var = var;
    }
    // A blend of two Poisson rates is overdispersed; switch family so the
    // variance is honoured.
    if var > mean {
        out.demand = crate::params::DemandFamily::NegativeBinomial;
    }
    Ok(out)
}

/// The single-rate MDP on [`SimplifiedState`]s.
#[derive(Debug, Clone)]
pub struct SimplifiedModel {
    pub params: InstanceParams,
    failures: FailureTable,
}

impl SimplifiedModel {
    /// `params` must already be single-rate (see [`simplify_params`]); the
    /// CM moments are used.
    pub fn new(params: InstanceParams) -> Result<Self> {
        params.validate()?;
        let failures = FailureTable::new(params.installed_base, &params.cm, params.demand)?;
        Ok(SimplifiedModel { params, failures })
    }

    pub fn decisions(&self, s: &SimplifiedState) -> Vec<Decision> {
        let budget = (self.params.max_circulating as i64 - s.inventory_position(&self.params)).max(0) as u32;
        decisions_within(budget, self.params.batch_size)
    }

    pub fn expected_cost(&self, s: &SimplifiedState, d: Decision) -> f64 {
        let p = &self.params;
        let pmf = self.failures.pmf(s.installed);
        let open = s.backorders(p);
        let shortage: f64 = pmf
            .iter()
            .enumerate()
            .map(|(k, q)| q * (open + k as u32).saturating_sub(s.stock) as f64)
            .sum();
        purchase_cost(d, p)
            + p.holding_cost * s.stock as f64
            + p.backorder_cost * shortage
            + p.maintenance_cost * p.cm.failure_mean * s.installed as f64
    }

    /// Calls `f` with each successor and its probability. `scratch` is reused
    /// between calls.
    pub fn for_each_successor(
        &self,
        s: &SimplifiedState,
        d: Decision,
        scratch: &mut SimplifiedState,
        mut f: impl FnMut(&SimplifiedState, f64),
    ) {
        let p = &self.params;
        let arriving = s.cm_pipeline[0] * p.batch_size + s.am_pipeline[0];
        let open = s.backorders(p);
        for (k, &q) in self.failures.pmf(s.installed).iter().enumerate() {
            let k = k as u32;
            let installed_now = (open + k).min(s.stock + arriving);
            scratch.clone_from(s);
            scratch.installed = s.installed - k + installed_now;
            scratch.stock = s.stock + arriving - installed_now;
            scratch.cm_pipeline.rotate_left(1);
            *scratch.cm_pipeline.last_mut().unwrap() = d.cm_batches;
            scratch.am_pipeline.rotate_left(1);
            *scratch.am_pipeline.last_mut().unwrap() = d.am_items;
            f(scratch, q);
        }
    }
}
