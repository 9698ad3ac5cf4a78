//! The dual-index policy: an expedited inventory position covering the AM
//! lead time and a regular one covering the CM lead time, each raised to its
//! own order-up-to level.

use rand::Rng;
use rayon::prelude::*;

use crate::demand::FailureTable;
use crate::dynamics::Model;
use crate::error::{Error, Result};
use crate::params::InstanceParams;
use crate::policy::Policy;
use crate::sim::{estimate_cost, stream, EvalConfig, Purpose};
use crate::state::{backorders, inventory_position, order_budget, Decision, SystemState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualIndexParams {
    pub z_a: u32,
    pub delta: u32,
}

impl DualIndexParams {
    pub fn z_c(&self) -> u32 {
        self.z_a + self.delta
    }
}

#[derive(Debug, Clone)]
pub struct DualIndexConfig {
    /// Periods simulated per `delta` to estimate the overshoot.
    pub overshoot_periods: usize,
    /// Cost evaluation of each candidate.
    pub eval: EvalConfig,
    pub seed: u64,
}

impl Default for DualIndexConfig {
    fn default() -> Self {
        DualIndexConfig {
            overshoot_periods: 100_000,
            eval: EvalConfig {
                replications: 10,
                periods: 10_000,
                warmup: 1_000,
                seed: 0,
            },
            seed: 0,
        }
    }
}

/// Expedited and regular inventory positions `(IP_A, IP_C)`. The expedited
/// one only counts CM orders that arrive no later than an AM order placed now.
pub fn inventory_positions(state: &SystemState, params: &InstanceParams) -> (i64, i64) {
    let near = params.am.lead_time.min(params.cm.lead_time);
    let cm_near: u32 = state.cm_pipeline[..near].iter().sum();
    let ip_a = state.stock() as i64 + state.am_pipeline.iter().sum::<u32>() as i64
        + (cm_near * params.batch_size) as i64
        - backorders(state, params) as i64;
    (ip_a, inventory_position(state, params))
}

/// The ordering rule on bare numbers. The AM order counts toward the regular
/// position before the CM order is sized.
pub fn dual_index_rule(ip_a: i64, ip_c: i64, budget: u32, di: DualIndexParams, batch_size: u32) -> Decision {
    let x_a = (di.z_a as i64 - ip_a).clamp(0, budget as i64) as u32;
    let short = (di.z_c() as i64 - ip_c - x_a as i64).max(0) as u32;
    let x_c = short.div_ceil(batch_size).min((budget - x_a) / batch_size);
    Decision::new(x_c, x_a)
}

pub fn dual_index_decide(state: &SystemState, di: DualIndexParams, params: &InstanceParams) -> Decision {
    let (ip_a, ip_c) = inventory_positions(state, params);
    dual_index_rule(ip_a, ip_c, order_budget(state, params), di, params.batch_size)
}

#[derive(Debug, Clone)]
pub struct DualIndexPolicy {
    pub di: DualIndexParams,
    params: InstanceParams,
}

impl DualIndexPolicy {
    pub fn new(di: DualIndexParams, params: &InstanceParams) -> Self {
        DualIndexPolicy {
            di,
            params: params.clone(),
        }
    }
}

impl Policy for DualIndexPolicy {
    fn decide(&self, state: &SystemState) -> Decision {
        dual_index_decide(state, self.di, &self.params)
    }
}

/// Per-period demand of the whole installed base at the single rate of
/// `params` (the CM moments).
fn period_demand(params: &InstanceParams) -> Result<FailureTable> {
    FailureTable::new(params.installed_base, &params.cm, params.demand)
}

/// Overshoot of the expedited position over `z_a` at each period, for an
/// uncapped system facing i.i.d. demand of the full installed base.
pub fn overshoot_samples(params: &InstanceParams, di: DualIndexParams, periods: usize, seed: u64) -> Result<Vec<u32>> {
    let table = period_demand(params)?;
    let n = params.installed_base;
    let gap = params.cm.lead_time.saturating_sub(params.am.lead_time);
    let q = params.batch_size as i64;
    let mut rng = stream(seed, 0, Purpose::Overshoot);
    let (z_a, z_c) = (di.z_a as i64, di.z_c() as i64);
    let mut ip_a = z_a;
    // CM orders not yet inside the AM horizon, oldest first.
    let mut far: std::collections::VecDeque<i64> = std::collections::VecDeque::new();
    let mut far_total = 0;
    let mut out = Vec::with_capacity(periods);
    for _ in 0..periods {
        out.push((ip_a - z_a).max(0) as u32);
        ip_a = ip_a.max(z_a);
        let ip_c = ip_a + far_total;
        let x_c = ((z_c - ip_c).max(0) + q - 1) / q;
        far.push_back(x_c * q);
        far_total += x_c * q;
        if far.len() > gap {
            let x = far.pop_front().unwrap();
            far_total -= x;
            ip_a += x;
        }
        ip_a -= table.sample(n, rng.random()) as i64;
    }
    Ok(out)
}

/// Smallest `z >= 0` with `P(D - O <= z) >= fractile`, where `D` is the
/// demand over `l_A + 1` periods and `O` is drawn from `overshoot`.
pub fn newsvendor_level(params: &InstanceParams, overshoot: &[u32]) -> Result<u32> {
    if overshoot.is_empty() {
        return Err(Error::InvalidArgument("empty overshoot sample".into()));
    }
    let fractile = params.backorder_cost / (params.backorder_cost + params.holding_cost);
    let one = period_demand(params)?.pmf(params.installed_base).to_vec();
    let mut lead = vec![1.0];
    for _ in 0..=params.am.lead_time {
        let mut next = vec![0.0; lead.len() + one.len() - 1];
        for (i, a) in lead.iter().enumerate() {
            for (j, b) in one.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        lead = next;
    }
    let mut cdf = lead;
    for i in 1..cdf.len() {
        cdf[i] += cdf[i - 1];
    }
    let max_o = *overshoot.iter().max().unwrap() as usize;
    let mut hist = vec![0.0; max_o + 1];
    for &o in overshoot {
        hist[o as usize] += 1.0 / overshoot.len() as f64;
    }
    let f = |z: usize| -> f64 {
        hist.iter()
            .enumerate()
            .map(|(o, w)| w * cdf.get(z + o).copied().unwrap_or(1.0))
            .sum()
    };
    let mut z = 0;
    // Guard against rounding just below a fractile of 1.
    while f(z) < fractile - 1e-12 && z < cdf.len() {
        z += 1;
    }
    Ok(z as u32)
}

/// Largest `delta` searched: the demand ceiling over the lead-time difference
/// plus one period, plus three standard deviations.
pub fn delta_max(params: &InstanceParams) -> u32 {
    let l = params.cm.lead_time.saturating_sub(params.am.lead_time) as f64;
    let n = params.installed_base as f64;
    let mean = (l + 1.0) * params.cm.failure_mean.max(params.am.failure_mean) * n;
    let var = (l + 1.0) * params.cm.failure_var.max(params.am.failure_var) * n;
    (mean.ceil() + 3.0 * var.sqrt()).ceil() as u32
}

#[derive(Debug, Clone)]
pub struct DualIndexSolution {
    pub di: DualIndexParams,
    pub cost: f64,
    /// `(delta, z_a, cost)` for every candidate.
    pub table: Vec<(u32, u32, f64)>,
}

/// One-dimensional search over `delta` with the newsvendor `z_A` for each,
/// candidates costed by simulation under common random numbers. Ties go to
/// the smaller `delta`.
pub fn dual_index_solve(params: &InstanceParams, config: &DualIndexConfig) -> Result<DualIndexSolution> {
    if params.am.lead_time > params.cm.lead_time {
        return Err(Error::InvalidArgument("AM lead time exceeds CM lead time".into()));
    }
    let model = Model::new(params.clone())?;
    let s = params.max_circulating;
    let top = delta_max(params).min(s);
    let table = (0..=top)
        .into_par_iter()
        .map(|delta| {
            let probe = DualIndexParams { z_a: 0, delta };
            let overshoot = overshoot_samples(params, probe, config.overshoot_periods, config.seed)?;
            let z_a = newsvendor_level(params, &overshoot)?.min(s - delta);
            let di = DualIndexParams { z_a, delta };
            let cost = estimate_cost(&model, &DualIndexPolicy::new(di, params), &config.eval)?.mean;
            Ok((delta, z_a, cost))
        })
        .collect::<Result<Vec<_>>>()?;
    let &(delta, z_a, cost) = table
        .iter()
        .fold(None::<&(u32, u32, f64)>, |best, row| match best {
            Some(b) if b.2 <= row.2 => Some(b),
            _ => Some(row),
        })
        .unwrap();
    Ok(DualIndexSolution {
        di: DualIndexParams { z_a, delta },
        cost,
        table,
    })
}
