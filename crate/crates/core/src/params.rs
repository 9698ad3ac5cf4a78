//! Instance parameters: the installed base, the two supply modes and the cost
//! structure.

use std::fmt;

use crate::error::{Error, Result};

/// The two supply modes. `Cm` is conventional manufacturing (batch orders),
/// `Am` is additive manufacturing (single items).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Cm,
    Am,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Cm => "cm",
            Source::Am => "am",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cm" | "CM" => Ok(Source::Cm),
            "am" | "AM" => Ok(Source::Am),
            other => Err(Error::InvalidArgument(format!("unknown source `{other}`"))),
        }
    }
}

/// Distribution family of the per-period failure count of one item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DemandFamily {
    Poisson,
    /// Poisson arrivals with logarithmic compounding, i.e. negative binomial.
    NegativeBinomial,
}

impl DemandFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            DemandFamily::Poisson => "poisson",
            DemandFamily::NegativeBinomial => "negative_binomial",
        }
    }
}

impl std::str::FromStr for DemandFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poisson" => Ok(DemandFamily::Poisson),
            "negative_binomial" => Ok(DemandFamily::NegativeBinomial),
            other => Err(Error::InvalidArgument(format!(
                "unknown demand family `{other}`"
            ))),
        }
    }
}

/// Per-mode inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeParams {
    /// Mean failures per operating item per period.
    pub failure_mean: f64,
    /// Variance of failures per operating item per period.
    pub failure_var: f64,
    /// Replenishment lead time in whole periods.
    pub lead_time: usize,
    pub unit_price: f64,
    pub order_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceParams {
    pub installed_base: u32,
    /// Upper bound on the inventory position.
    pub max_circulating: u32,
    pub cm: ModeParams,
    pub am: ModeParams,
    /// CM items per batch.
    pub batch_size: u32,
    pub maintenance_cost: f64,
    pub holding_cost: f64,
    pub backorder_cost: f64,
    pub demand: DemandFamily,
}

impl InstanceParams {
    pub fn mode(&self, source: Source) -> &ModeParams {
        match source {
            Source::Cm => &self.cm,
            Source::Am => &self.am,
        }
    }

    pub fn mode_mut(&mut self, source: Source) -> &mut ModeParams {
        match source {
            Source::Cm => &mut self.cm,
            Source::Am => &mut self.am,
        }
    }

    /// Which stock is installed first: the mode with the lower failure rate,
    /// CM on a tie.
    pub fn preferred_source(&self) -> Source {
        if self.cm.failure_mean <= self.am.failure_mean {
            Source::Cm
        } else {
            Source::Am
        }
    }

    /// Items per order unit of a source: `batch_size` for CM, 1 for AM.
    pub fn unit_size(&self, source: Source) -> u32 {
        match source {
            Source::Cm => self.batch_size,
            Source::Am => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if self.installed_base < 1 {
            return bad("installed base must be at least 1".into());
        }
        if self.batch_size < 1 {
            return bad("batch size must be at least 1".into());
        }
        for (name, mode) in [("cm", &self.cm), ("am", &self.am)] {
            if mode.lead_time < 1 {
                return bad(format!("{name} lead time must be at least 1"));
            }
            if !(mode.failure_mean.is_finite() && mode.failure_mean > 0.0) {
                return bad(format!("{name} failure mean must be positive"));
            }
            if !mode.failure_var.is_finite() || mode.failure_var < mode.failure_mean {
                return bad(format!(
                    "{name} failure variance {} is below its mean {}",
                    mode.failure_var, mode.failure_mean
                ));
            }
            if self.demand == DemandFamily::Poisson && mode.failure_var != mode.failure_mean {
                return bad(format!(
                    "poisson demand requires {name} variance equal to its mean"
                ));
            }
            if !(mode.unit_price >= 0.0 && mode.order_cost >= 0.0) {
                return bad(format!("{name} costs must be non-negative"));
            }
        }
        for (name, v) in [
            ("maintenance", self.maintenance_cost),
            ("holding", self.holding_cost),
            ("backorder", self.backorder_cost),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} cost must be non-negative"));
            }
        }
        Ok(())
    }

    /// Multiplies every cost input by `factor`.
    pub fn scale_costs(&self, factor: f64) -> Self {
        let mut p = self.clone();
        for mode in [&mut p.cm, &mut p.am] {
            mode.unit_price *= factor;
            mode.order_cost *= factor;
        }
        p.maintenance_cost *= factor;
        p.holding_cost *= factor;
        p.backorder_cost *= factor;
        p
    }

    /// Upper bound on the number of CM batches that can sit in the pipeline.
    pub fn max_pipeline_batches(&self) -> u32 {
        (self.max_circulating + self.installed_base) / self.batch_size
    }
}

/// Backorder cost that yields fill rate `fill` against holding cost `h`,
/// from `fill = b / (b + h)`.
///
/// The bundled synthetic instances carry slightly different printed values
/// (e.g. 5725 where this gives 5771 for `h = 29`, `fill = 0.995`); those
/// printed values are kept as authoritative.
pub fn backorder_cost_from_fill_rate(h: f64, fill: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&fill) {
        return Err(Error::InvalidArgument(format!(
            "fill rate {fill} must lie in [0, 1)"
        )));
    }
    Ok(h * fill / (1.0 - fill))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Synthetic instance 1.
    pub fn instance1() -> InstanceParams {
        InstanceParams {
            installed_base: 7,
            max_circulating: 8,
            cm: ModeParams {
                failure_mean: 0.01,
                failure_var: 0.02,
                lead_time: 8,
                unit_price: 5000.0,
                order_cost: 2000.0,
            },
            am: ModeParams {
                failure_mean: 0.02,
                failure_var: 0.04,
                lead_time: 2,
                unit_price: 10000.0,
                order_cost: 0.0,
            },
            batch_size: 5,
            maintenance_cost: 5000.0,
            holding_cost: 29.0,
            backorder_cost: 5725.0,
            demand: DemandFamily::NegativeBinomial,
        }
    }

    /// N=2, S=2, l_C=2, l_A=1, Q_C=1, Poisson.
    pub fn micro() -> InstanceParams {
        InstanceParams {
            installed_base: 2,
            max_circulating: 2,
            cm: ModeParams {
                failure_mean: 0.05,
                failure_var: 0.05,
                lead_time: 2,
                unit_price: 100.0,
                order_cost: 20.0,
            },
            am: ModeParams {
                failure_mean: 0.1,
                failure_var: 0.1,
                lead_time: 1,
                unit_price: 150.0,
                order_cost: 0.0,
            },
            batch_size: 1,
            maintenance_cost: 50.0,
            holding_cost: 2.0,
            backorder_cost: 200.0,
            demand: DemandFamily::Poisson,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_underdispersed_variance() {
        let mut p = fixtures::instance1();
        p.cm.failure_var = 0.005;
        assert!(p.validate().is_err());
    }

    #[test]
    fn poisson_requires_equal_moments() {
        let mut p = fixtures::micro();
        assert!(p.validate().is_ok());
        p.am.failure_var = 0.2;
        assert!(p.validate().is_err());
    }

    #[test]
    fn fill_rate_helper() {
        let b = backorder_cost_from_fill_rate(29.0, 0.995).unwrap();
        assert!((b - 5771.0).abs() < 1e-6);
        assert!(backorder_cost_from_fill_rate(1.0, 1.0).is_err());
    }

    #[test]
    fn lower_failure_rate_installed_first() {
        let mut p = fixtures::instance1();
        assert_eq!(p.preferred_source(), Source::Cm);
        p.am.failure_mean = 0.005;
        assert_eq!(p.preferred_source(), Source::Am);
        p.am.failure_mean = p.cm.failure_mean;
        assert_eq!(p.preferred_source(), Source::Cm);
    }
}
