//! State features shared by the learned policies.

use crate::error::{Error, Result};
use crate::params::InstanceParams;
use crate::state::{backorders, inventory_position, Decision, SystemState};

/// The unscaled quantities a feature vector is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFeatures {
    pub cm_installed: f64,
    pub am_installed: f64,
    pub cm_stock: f64,
    pub am_stock: f64,
    /// Items due per slot, soonest first.
    pub cm_pipeline: Vec<f64>,
    pub am_pipeline: Vec<f64>,
    pub inventory_position: f64,
    pub expected_demand: f64,
    pub demand_variance: f64,
    pub inventory_level: f64,
}

pub fn raw_features(state: &SystemState, params: &InstanceParams) -> RawFeatures {
    let q = params.batch_size as f64;
    let (nc, na) = (state.cm_installed as f64, state.am_installed as f64);
    RawFeatures {
        cm_installed: nc,
        am_installed: na,
        cm_stock: state.cm_stock as f64,
        am_stock: state.am_stock as f64,
        cm_pipeline: state.cm_pipeline.iter().map(|&x| x as f64 * q).collect(),
        am_pipeline: state.am_pipeline.iter().map(|&x| x as f64).collect(),
        inventory_position: inventory_position(state, params) as f64,
        expected_demand: nc * params.cm.failure_mean + na * params.am.failure_mean,
        demand_variance: nc * params.cm.failure_var + na * params.am.failure_var,
        inventory_level: state.stock() as f64 - backorders(state, params) as f64,
    }
}

/// Bounds used to scale appended instance parameters into `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ParamBounds {
    /// Min-max scaling; a constant parameter maps to 0.
    pub fn normalize(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&x, (&lo, &hi))| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        let slack = |v: f64| 1e-9 * v.abs().max(1.0);
        theta
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&x, (&lo, &hi))| x >= lo - slack(lo) && x <= hi + slack(hi))
    }
}

/// Layout of a feature vector: how many pipeline slots per source (shorter
/// pipelines are zero-padded) and, for parameter-augmented policies, the
/// bounds of the appended instance parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSchema {
    pub cm_slots: usize,
    pub am_slots: usize,
    pub epl: Option<ParamBounds>,
}

impl FeatureSchema {
    /// Exactly the pipelines of `params`, no augmentation.
    pub fn for_instance(params: &InstanceParams) -> Self {
        FeatureSchema {
            cm_slots: params.cm.lead_time,
            am_slots: params.am.lead_time,
            epl: None,
        }
    }

    pub fn len(&self) -> usize {
        10 + self.cm_slots + self.am_slots - 2 + self.epl.as_ref().map_or(0, |b| b.lo.len())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Errors if `params` does not fit this layout.
    pub fn check(&self, params: &InstanceParams) -> Result<()> {
        if params.cm.lead_time > self.cm_slots || params.am.lead_time > self.am_slots {
            return Err(Error::InvalidArgument(format!(
                "lead times ({}, {}) exceed the feature layout ({}, {})",
                params.cm.lead_time, params.am.lead_time, self.cm_slots, self.am_slots
            )));
        }
        if let Some(bounds) = &self.epl {
            if !bounds.contains(&super::epl::theta(params)) {
                return Err(Error::InvalidArgument(
                    "instance parameters lie outside the training grid".into(),
                ));
            }
        }
        Ok(())
    }

    /// Scaled features of `state`.
    pub fn encode(&self, state: &SystemState, params: &InstanceParams) -> Vec<f64> {
        self.encode_raw(&raw_features(state, params), params)
    }

    /// Scaled features of the post-decision state: `decision` appended as
    /// the newest pipeline slot of each source, before any failure. Needs one
    /// spare slot per source.
    pub fn encode_post(&self, state: &SystemState, decision: Decision, params: &InstanceParams) -> Vec<f64> {
        let mut raw = raw_features(state, params);
        let cm = (decision.cm_batches * params.batch_size) as f64;
        let am = decision.am_items as f64;
        raw.cm_pipeline.push(cm);
        raw.am_pipeline.push(am);
        raw.inventory_position += cm + am;
        self.encode_raw(&raw, params)
    }

    fn encode_raw(&self, raw: &RawFeatures, params: &InstanceParams) -> Vec<f64> {
        let n = params.installed_base as f64;
        let s = (params.max_circulating as f64).max(1.0);
        let mu = params.cm.failure_mean.max(params.am.failure_mean) * n;
        let var = params.cm.failure_var.max(params.am.failure_var) * n;
        let mut out = Vec::with_capacity(self.len());
        out.extend([
            raw.cm_installed / n,
            raw.am_installed / n,
            raw.cm_stock / s,
            raw.am_stock / s,
        ]);
        let pad = |out: &mut Vec<f64>, slots: &[f64], len: usize| {
            out.extend(slots.iter().take(len).map(|x| x / s));
            out.extend(std::iter::repeat_n(0.0, len.saturating_sub(slots.len())));
        };
        pad(&mut out, &raw.cm_pipeline, self.cm_slots);
        pad(&mut out, &raw.am_pipeline, self.am_slots);
        out.extend([
            raw.inventory_position / s,
            raw.expected_demand / mu,
            raw.demand_variance / var,
            raw.inventory_level / s,
        ]);
        if let Some(bounds) = &self.epl {
            out.extend(bounds.normalize(&super::epl::theta(params)));
        }
        out
    }
}
