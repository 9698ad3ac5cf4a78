//! Instance grids built from the energy-sector ratio template.
//!
//! Absolute prices, lead times and failure rates are confidential, so the
//! template holds ratios relative to item 1 (and AM inputs relative to the
//! same item's CM inputs). An [`EnergyBase`] supplies the absolute anchors.
//!
//! ```
//! use dualsource::config::energy::{generate_energy_grid, EnergyBase, Variations, TEMPLATE};
//!
//! let base = EnergyBase::new(1000.0);
//! let grid = generate_energy_grid(&TEMPLATE, &base, &Variations::paper())?;
//! assert_eq!(grid.len(), 1215);
//! # Ok::<(), dualsource::Error>(())
//! ```

use crate::error::{Error, Result};
use crate::params::{DemandFamily, InstanceParams, ModeParams};

/// One item type of the template.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyItem {
    pub parts_per_item: u32,
    pub cm_price: f64,
    pub cm_lead_time: f64,
    pub cm_failure_rate: f64,
    /// `c_A / c_C` of this item.
    pub am_price: f64,
    /// `l_A / l_C` of this item.
    pub am_lead_time: f64,
    pub am_failure_rate: f64,
    /// `m / c_C` of this item.
    pub maintenance: f64,
    pub backorder: f64,
}

const fn item(parts: u32, cp: f64, cl: f64, cf: f64, ap: f64, al: f64, af: f64, m: f64, b: f64) -> EnergyItem {
    EnergyItem {
        parts_per_item: parts,
        cm_price: cp,
        cm_lead_time: cl,
        cm_failure_rate: cf,
        am_price: ap,
        am_lead_time: al,
        am_failure_rate: af,
        maintenance: m,
        backorder: b,
    }
}

/// The five valve item types.
pub const TEMPLATE: [EnergyItem; 5] = [
    item(3, 1.00, 1.00, 1.00, 4.06, 0.26, 1.00, 1.09, 1.00),
    item(2, 1.62, 0.98, 1.90, 1.64, 0.31, 1.90, 0.67, 6.11),
    item(6, 15.30, 0.69, 0.31, 0.19, 0.38, 0.31, 0.07, 63.15),
    item(1, 27.69, 1.09, 1.13, 1.00, 0.36, 1.13, 0.04, 122.64),
    item(4, 1.09, 0.79, 0.28, 4.23, 0.33, 0.28, 1.01, 8.76),
];

/// Absolute anchors for item 1, in periods of one week by default.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBase {
    /// CM piece price of item 1.
    pub price: f64,
    /// CM lead time of item 1, in periods.
    pub lead_time: f64,
    /// CM failure rate of item 1, per part per period.
    pub failure_rate: f64,
    /// Backorder cost of item 1 as a multiple of its CM price.
    pub backorder_per_price: f64,
    /// Minimum and maximum backorder costs as multiples of the original.
    pub backorder_range: (f64, f64),
    pub periods_per_year: f64,
    pub max_circulating: u32,
    /// Fixed order cost as a fraction of the CM price, both modes.
    pub order_cost_share: f64,
    /// Yearly holding cost as a fraction of the CM price.
    pub holding_share: f64,
}

impl EnergyBase {
    /// Anchors with placeholder defaults for everything but the price: a
    /// 40-week lead time, one failure per part every 10 years, backorders at
    /// 0.5 times the price per week, ranging over half to one and a half
    /// times that.
    pub fn new(price: f64) -> Self {
        EnergyBase {
            price,
            lead_time: 40.0,
            failure_rate: 1.0 / 520.0,
            backorder_per_price: 0.5,
            backorder_range: (0.5, 1.5),
            periods_per_year: 52.0,
            max_circulating: 25,
            order_cost_share: 0.2,
            holding_share: 0.05,
        }
    }
}

/// Levels of the five varied inputs. Each list starts with the original
/// setting.
#[derive(Debug, Clone, PartialEq)]
pub struct Variations {
    pub platforms: Vec<u32>,
    /// Multipliers on the AM price.
    pub am_price: Vec<f64>,
    /// Multipliers on the AM lead time.
    pub am_lead_time: Vec<f64>,
    /// AM failure rate as a multiple of the CM rate.
    pub am_failure_rate: Vec<f64>,
    pub backorder: Vec<BackorderLevel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackorderLevel {
    Original,
    Min,
    Max,
}

impl Variations {
    /// The three-level factorial design: 5 inputs, 243 settings per item.
    pub fn paper() -> Self {
        Variations {
            platforms: vec![5, 15, 25],
            am_price: vec![1.0, 1.25, 0.75],
            am_lead_time: vec![1.0, 0.75, 0.5],
            am_failure_rate: vec![1.0, 0.75, 0.5],
            backorder: vec![BackorderLevel::Original, BackorderLevel::Min, BackorderLevel::Max],
        }
    }

    /// One platform, everything at its original value.
    pub fn none() -> Self {
        Variations {
            platforms: vec![1],
            am_price: vec![1.0],
            am_lead_time: vec![1.0],
            am_failure_rate: vec![1.0],
            backorder: vec![BackorderLevel::Original],
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("energy variations: {m}")));
        if self.platforms.is_empty()
            || self.am_price.is_empty()
            || self.am_lead_time.is_empty()
            || self.am_failure_rate.is_empty()
            || self.backorder.is_empty()
        {
            return bad("every input needs at least one level");
        }
        if self.platforms.contains(&0) {
            return bad("platform counts must be positive");
        }
        for v in self.am_price.iter().chain(&self.am_lead_time).chain(&self.am_failure_rate) {
            if !(v.is_finite() && *v > 0.0) {
                return bad("multipliers must be positive");
            }
        }
        Ok(())
    }
}

/// One grid point with its coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySetting {
    pub item: usize,
    pub platforms: u32,
    pub am_price: f64,
    pub am_lead_time: f64,
    pub am_failure_rate: f64,
    pub backorder: BackorderLevel,
    pub params: InstanceParams,
}

fn periods(x: f64) -> usize {
    (x.round() as usize).max(1)
}

/// Instantiates one template item at one grid point.
pub fn instantiate(
    item: &EnergyItem,
    base: &EnergyBase,
    platforms: u32,
    am_price: f64,
    am_lead_time: f64,
    am_failure_rate: f64,
    backorder: BackorderLevel,
) -> Result<InstanceParams> {
    if !(base.price.is_finite() && base.price > 0.0) {
        return Err(Error::InvalidArgument("energy base price must be positive".into()));
    }
    let c_c = base.price * item.cm_price;
    let l_c = periods(base.lead_time * item.cm_lead_time);
    // AM lead time is rounded from its original value, then varied.
    let l_a = periods(periods(l_c as f64 * item.am_lead_time) as f64 * am_lead_time);
    let mu_c = base.failure_rate * item.cm_failure_rate;
    let mu_a = mu_c * am_failure_rate;
    let b0 = base.price * base.backorder_per_price * item.backorder;
    let b = match backorder {
        BackorderLevel::Original => b0,
        BackorderLevel::Min => b0 * base.backorder_range.0,
        BackorderLevel::Max => b0 * base.backorder_range.1,
    };
    let params = InstanceParams {
        installed_base: platforms * item.parts_per_item,
        max_circulating: base.max_circulating,
        cm: ModeParams {
            failure_mean: mu_c,
            failure_var: mu_c,
            lead_time: l_c,
            unit_price: c_c,
            order_cost: base.order_cost_share * c_c,
        },
        am: ModeParams {
            failure_mean: mu_a,
            failure_var: mu_a,
            lead_time: l_a,
            unit_price: c_c * item.am_price * am_price,
            order_cost: base.order_cost_share * c_c,
        },
        batch_size: 1,
        maintenance_cost: item.maintenance * c_c,
        holding_cost: base.holding_share * c_c / base.periods_per_year,
        backorder_cost: b,
        demand: DemandFamily::Poisson,
    };
    params.validate()?;
    Ok(params)
}

/// Full factorial over `variations` for every template item. Ordering is
/// item, platforms, AM price, AM lead time, AM failure rate, backorder cost,
/// the last varying fastest.
pub fn generate_energy_grid(
    template: &[EnergyItem],
    base: &EnergyBase,
    variations: &Variations,
) -> Result<Vec<EnergySetting>> {
    variations.validate()?;
    let mut out = Vec::new();
    for (i, it) in template.iter().enumerate() {
        for &n in &variations.platforms {
            for &cp in &variations.am_price {
                for &lt in &variations.am_lead_time {
                    for &fr in &variations.am_failure_rate {
                        for &bl in &variations.backorder {
                            out.push(EnergySetting {
                                item: i + 1,
                                platforms: n,
                                am_price: cp,
                                am_lead_time: lt,
                                am_failure_rate: fr,
                                backorder: bl,
                                params: instantiate(it, base, n, cp, lt, fr, bl)?,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
