//! Failure-count distributions of an installed group of items.
//!
//! `n` items of one mode fail `k` times in a period with mean `mu * n` and
//! variance `var * n`. Counts above `n` cannot happen in the state model, so
//! that tail mass is folded into `k = n`.

use statrs::distribution::{Discrete, DiscreteCDF, NegativeBinomial, Poisson};

use crate::error::{Error, Result};
use crate::params::{DemandFamily, InstanceParams, ModeParams};

enum Untruncated {
    Point,
    Poisson(Poisson),
    NegBin(NegativeBinomial),
}

impl Untruncated {
    fn new(n: u32, mu: f64, var: f64, family: DemandFamily) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("failure mean {mu} must be positive")));
        }
        if n == 0 {
            return Ok(Untruncated::Point);
        }
        let mean = mu * n as f64;
        match family {
            DemandFamily::NegativeBinomial if var < mu => Err(Error::InvalidArgument(format!(
                "negative binomial needs variance >= mean (got {var} < {mu})"
            ))),
            // Equal moments: the compound process degenerates to Poisson.
            DemandFamily::NegativeBinomial if var > mu => {
                let p = mu / var;
                let r = mean * p / (1.0 - p);
                NegativeBinomial::new(r, p)
                    .map(Untruncated::NegBin)
                    .map_err(|e| Error::InvalidArgument(e.to_string()))
            }
            _ => Poisson::new(mean)
                .map(Untruncated::Poisson)
                .map_err(|e| Error::InvalidArgument(e.to_string())),
        }
    }

    /// P(K = 0), ..., P(K = n - 1). The negative binomial head is built by
    /// its ratio recurrence; the log-gamma form loses digits when `r` is
    /// large (variance barely above the mean).
    fn head(&self, n: u64) -> Vec<f64> {
        match self {
            Untruncated::Point => (0..n).map(|k| (k == 0) as u8 as f64).collect(),
            Untruncated::Poisson(d) => (0..n).map(|k| d.pmf(k)).collect(),
            Untruncated::NegBin(d) => {
                let (r, p) = (d.r(), d.p());
                let mut out = Vec::with_capacity(n as usize);
                let mut cur = (r * p.ln()).exp();
                for k in 0..n {
                    out.push(cur);
                    cur *= (r + k as f64) / (k as f64 + 1.0) * (1.0 - p);
                }
                out
            }
        }
    }

    /// P(K > k).
    fn sf(&self, k: u64) -> f64 {
        match self {
            Untruncated::Point => 0.0,
            Untruncated::Poisson(d) => d.sf(k),
            Untruncated::NegBin(d) => d.sf(k),
        }
    }
}

/// Probability of `0..=n` failures among `n` items; mass above `n` is
/// assigned to `n`.
pub fn failure_pmf(n: u32, mu: f64, var: f64, family: DemandFamily) -> Result<Vec<f64>> {
    let dist = Untruncated::new(n, mu, var, family)?;
    if n == 0 {
        return Ok(vec![1.0]);
    }
    let mut pmf = dist.head(n as u64);
    pmf.push(dist.sf(n as u64 - 1));
    Ok(pmf)
}

/// Truncated failure distributions for every group size `0..=N` of one mode,
/// with cumulative tables for inverse-transform sampling.
#[derive(Debug, Clone)]
pub struct FailureTable {
    pmfs: Vec<Vec<f64>>,
    cdfs: Vec<Vec<f64>>,
}

impl FailureTable {
    pub fn new(max_n: u32, mode: &ModeParams, family: DemandFamily) -> Result<Self> {
        let pmfs = (0..=max_n)
            .map(|n| failure_pmf(n, mode.failure_mean, mode.failure_var, family))
            .collect::<Result<Vec<_>>>()?;
        let cdfs = pmfs
            .iter()
            .map(|pmf| {
                let mut acc = 0.0;
                let mut cdf: Vec<f64> = pmf
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                *cdf.last_mut().unwrap() = 1.0;
                cdf
            })
            .collect();
        Ok(FailureTable { pmfs, cdfs })
    }

    pub fn pmf(&self, n: u32) -> &[f64] {
        &self.pmfs[n as usize]
    }

    /// Failures among `n` items for a uniform draw `u` in `[0, 1)`.
    #[inline]
    pub fn sample(&self, n: u32, u: f64) -> u32 {
        let cdf = &self.cdfs[n as usize];
        // Tables are tiny and mass sits at k = 0, so a linear scan wins.
        cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1) as u32
    }
}

/// Both modes' failure tables for one instance.
#[derive(Debug, Clone)]
pub struct FailureModel {
    pub cm: FailureTable,
    pub am: FailureTable,
}

impl FailureModel {
    pub fn new(params: &InstanceParams) -> Result<Self> {
        Ok(FailureModel {
            cm: FailureTable::new(params.installed_base, &params.cm, params.demand)?,
            am: FailureTable::new(params.installed_base, &params.am, params.demand)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Poisson(lambda) number of events, each contributing a logarithmic
    /// number of failures: P(Y = j) = -q^j / (j ln(1 - q)), j >= 1.
    /// Convolved directly, independent of any negative binomial formula.
    fn compound_oracle(mean: f64, var: f64, kmax: usize) -> Vec<f64> {
        let q = 1.0 - mean / var;
        let r = mean * mean / (var - mean);
        let lambda = -r * (1.0 - q).ln();
        let log_pmf: Vec<f64> = (0..=kmax)
            .map(|j| if j == 0 { 0.0 } else { -q.powi(j as i32) / (j as f64 * (1.0 - q).ln()) })
            .collect();
        // conv[e][k]: probability that e events sum to k.
        let mut total = vec![0.0; kmax + 1];
        let mut conv = vec![0.0; kmax + 1];
        conv[0] = 1.0;
        let mut poisson_e = (-lambda).exp();
        for e in 0..200 {
            for k in 0..=kmax {
                total[k] += poisson_e * conv[k];
            }
            let mut next = vec![0.0; kmax + 1];
            for (a, &ca) in conv.iter().enumerate() {
                if ca == 0.0 {
                    continue;
                }
                for (b, &lb) in log_pmf.iter().enumerate().skip(1) {
                    if a + b <= kmax {
                        next[a + b] += ca * lb;
                    }
                }
            }
            conv = next;
            poisson_e *= lambda / (e as f64 + 1.0);
        }
        total
    }

    #[test]
    fn zero_items_is_point_mass() {
        assert_eq!(failure_pmf(0, 0.1, 0.2, DemandFamily::NegativeBinomial).unwrap(), vec![1.0]);
    }

    #[test]
    fn truncated_poisson_closed_form() {
        let pmf = failure_pmf(10, 0.025, 0.025, DemandFamily::Poisson).unwrap();
        assert_eq!(pmf.len(), 11);
        assert!((pmf[0] - (-0.25f64).exp()).abs() < 1e-14);
        assert!((pmf[0] - 0.7788).abs() < 1e-4);
        let head: f64 = pmf[..10].iter().sum();
        assert!((pmf[10] - (1.0 - head)).abs() < 1e-13);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_binomial_matches_compound_poisson_oracle() {
        let pmf = failure_pmf(7, 0.01, 0.02, DemandFamily::NegativeBinomial).unwrap();
        let oracle = compound_oracle(0.07, 0.14, 60);
        for k in 0..7 {
            assert!((pmf[k] - oracle[k]).abs() < 1e-9, "k={k}: {} vs {}", pmf[k], oracle[k]);
        }
        let oracle_tail: f64 = oracle[7..].iter().sum();
        assert!((pmf[7] - oracle_tail).abs() < 1e-9);
    }

    #[test]
    fn rejects_underdispersion() {
        assert!(failure_pmf(3, 0.02, 0.01, DemandFamily::NegativeBinomial).is_err());
    }

    #[test]
    fn equal_moments_fall_back_to_poisson() {
        let a = failure_pmf(5, 0.1, 0.1, DemandFamily::NegativeBinomial).unwrap();
        let b = failure_pmf(5, 0.1, 0.1, DemandFamily::Poisson).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_inverts_cdf() {
        let mode = ModeParams {
            failure_mean: 0.2,
            failure_var: 0.5,
            lead_time: 1,
            unit_price: 0.0,
            order_cost: 0.0,
        };
        let table = FailureTable::new(4, &mode, DemandFamily::NegativeBinomial).unwrap();
        assert_eq!(table.sample(0, 0.999), 0);
        assert_eq!(table.sample(4, 0.0), 0);
        assert_eq!(table.sample(4, 0.999_999_999), 4);
        let p0 = table.pmf(4)[0];
        assert_eq!(table.sample(4, p0 - 1e-12), 0);
        assert_eq!(table.sample(4, p0 + 1e-12), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn normalized_and_mean_bounded(n in 0u32..40, mu in 0.001f64..0.5, ratio in 1.0f64..4.0) {
                let var = mu * ratio;
                let pmf = failure_pmf(n, mu, var, DemandFamily::NegativeBinomial).unwrap();
                let total: f64 = pmf.iter().sum();
                prop_assert!((total - 1.0).abs() <= 1e-12, "sum {}", total);
                let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
                prop_assert!(mean <= mu * n as f64 + 1e-12);
                prop_assert!(pmf.iter().all(|&p| p >= 0.0));
            }
        }
    }
}
