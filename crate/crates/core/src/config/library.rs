//! Bundled instances.

use crate::error::{Error, Result};
use crate::params::{DemandFamily, InstanceParams, ModeParams};

/// A named instance with a short description.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedInstance {
    pub name: String,
    pub description: String,
    pub params: InstanceParams,
}

/// Columns of the synthetic instance table, instances 1 to 10.
const C_C: [f64; 10] = [5000., 5000., 5000., 5000., 1000., 1000., 1000., 1000., 2000., 2000.];
const K_C: [f64; 10] = [2000., 2000., 2000., 2000., 750., 750., 750., 750., 2000., 1000.];
const MU_C: [f64; 10] = [0.01, 0.01, 0.01, 0.01, 0.025, 0.025, 0.025, 0.025, 0.01, 0.025];
const VAR_C: [f64; 10] = [0.02, 0.02, 0.02, 0.02, 0.05, 0.05, 0.05, 0.05, 0.02, 0.05];
const L_C: [usize; 10] = [8, 8, 8, 8, 4, 4, 4, 4, 10, 6];
const C_A: [f64; 10] = [10000., 10000., 7500., 7500., 2000., 2000., 1500., 1500., 3000., 2400.];
const MU_A: [f64; 10] = [0.02, 0.02, 0.015, 0.015, 0.05, 0.05, 0.0375, 0.0375, 0.015, 0.125];
const VAR_A: [f64; 10] = [0.04, 0.04, 0.045, 0.045, 0.1, 0.1, 0.1125, 0.1125, 0.03, 0.375];
const L_A: [usize; 10] = [2, 2, 4, 4, 1, 1, 2, 2, 1, 1];
const M: [f64; 10] = [5000., 1250., 5000., 1250., 1000., 250., 1000., 250., 500., 2000.];
const H: [f64; 10] = [29., 19., 29., 19., 6., 4., 6., 4., 12., 12.];
const B: [f64; 10] = [5725., 1899., 5725., 1899., 1145., 380., 1145., 380., 2290., 2290.];
const Q_C: [u32; 10] = [5, 5, 5, 5, 7, 7, 7, 7, 5, 5];
const S: [u32; 10] = [8, 7, 8, 7, 10, 9, 10, 9, 6, 11];

/// Synthetic instance `k` (1-based, 1 to 12). Instances 11 and 12 are
/// instances 1 and 2 with an installed base of 20 and a proportionally
/// larger circulation cap.
pub fn synthetic(k: usize) -> Result<InstanceParams> {
    let (i, n, s) = match k {
        1..=10 => (k - 1, 7, S[k - 1]),
        11 => (0, 20, 23),
        12 => (1, 20, 20),
        _ => return Err(Error::InvalidArgument(format!("no synthetic instance {k}"))),
    };
    Ok(InstanceParams {
        installed_base: n,
        max_circulating: s,
        cm: ModeParams {
            failure_mean: MU_C[i],
            failure_var: VAR_C[i],
            lead_time: L_C[i],
            unit_price: C_C[i],
            order_cost: K_C[i],
        },
        am: ModeParams {
            failure_mean: MU_A[i],
            failure_var: VAR_A[i],
            lead_time: L_A[i],
            unit_price: C_A[i],
            order_cost: 0.0,
        },
        batch_size: Q_C[i],
        maintenance_cost: M[i],
        holding_cost: H[i],
        backorder_cost: B[i],
        demand: DemandFamily::NegativeBinomial,
    })
}

/// Names of all bundled instances, in listing order.
pub fn names() -> Vec<String> {
    let mut v: Vec<String> = (1..=12).map(|k| format!("synthetic-{k:02}")).collect();
    v.push("energy-template".into());
    v
}

fn description(k: usize) -> String {
    match k {
        1..=8 => format!(
            "synthetic instance {k}: CM scenario {}, AM scenario {}",
            if k <= 4 { 1 } else { 2 },
            if (k - 1) % 4 < 2 { 1 } else { 2 }
        ),
        9 => "synthetic instance 9: long CM lead time, fast AM".into(),
        10 => "synthetic instance 10: AM parts fail far more often".into(),
        11 => "synthetic instance 1 with an installed base of 20".into(),
        _ => "synthetic instance 2 with an installed base of 20".into(),
    }
}

/// Looks up a bundled instance by name.
pub fn bundled(name: &str) -> Result<NamedInstance> {
    if name == "energy-template" {
        return Err(Error::InvalidArgument(
            "energy-template holds price ratios only; instantiate it with a base price \
             (see config::energy)"
                .into(),
        ));
    }
    let k = name
        .strip_prefix("synthetic-")
        .and_then(|k| k.parse::<usize>().ok())
        .filter(|k| (1..=12).contains(k))
        .ok_or_else(|| Error::InvalidArgument(format!("unknown bundled instance `{name}`")))?;
    Ok(NamedInstance {
        name: format!("synthetic-{k:02}"),
        description: description(k),
        params: synthetic(k)?,
    })
}
