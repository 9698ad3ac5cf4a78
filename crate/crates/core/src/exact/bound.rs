use statrs::distribution::{DiscreteCDF, NegativeBinomial, Poisson};

use crate::error::{Error, Result};
use crate::params::InstanceParams;

/// `P(D > s)` for the demand `D` of the whole installed base at the higher
/// of the two failure rates over `l_C + 1` periods.
pub fn pipeline_exceedance(params: &InstanceParams, s: u32) -> Result<f64> {
    let mode = if params.am.failure_mean > params.cm.failure_mean {
        &params.am
    } else {
        &params.cm
    };
    let scale = params.installed_base as f64 * (params.cm.lead_time + 1) as f64;
    let mean = mode.failure_mean * scale;
    let var = mode.failure_var * scale;
    let sf = if var > mean {
        let p = mean / var;
        NegativeBinomial::new(mean * p / (1.0 - p), p)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .sf(s as u64)
    } else {
        Poisson::new(mean)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .sf(s as u64)
    };
    Ok(sf)
}

/// Smallest `S`, at least the ceiling of the expected demand above, whose
/// exceedance probability is below `epsilon`.
///
/// The bound is conservative: it assumes every installed item fails at the
/// higher rate for a full CM lead time. The bundled instances use smaller,
/// hand-picked values.
pub fn determine_s(params: &InstanceParams, epsilon: f64) -> Result<u32> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} must lie in (0, 1)")));
    }
    let rate = params.cm.failure_mean.max(params.am.failure_mean);
    let floor = (rate * params.installed_base as f64 * (params.cm.lead_time + 1) as f64).ceil() as u32;
    let mut s = 0;
    while pipeline_exceedance(params, s)? >= epsilon {
        s += 1;
    }
    Ok(s.max(floor))
}
