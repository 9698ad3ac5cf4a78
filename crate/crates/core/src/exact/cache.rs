//! On-disk reuse of solved full-model policies.

use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::dynamics::Model;
use crate::error::Result;
use crate::params::InstanceParams;

use super::io::{read_policy, write_policy, PolicyFile};
use super::space::{enumerate_full, StateSpace};
use super::{policy_iteration, ExactPolicy, SolverConfig};

/// A solved policy with its average cost.
#[derive(Debug, Clone)]
pub struct SolvedInstance {
    pub policy: ExactPolicy,
    pub g: f64,
    /// Number of states of the full model.
    pub states: usize,
    /// True when read back from the cache.
    pub cached: bool,
}

/// FNV-1a over the debug form of the instance; identifies cache entries.
fn fingerprint(params: &InstanceParams) -> u64 {
    format!("{params:?}")
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Cache file for `params` under `dir`.
pub fn cache_path(dir: &Path, params: &InstanceParams) -> PathBuf {
    dir.join(format!("exact-{:016x}.policy", fingerprint(params)))
}

/// Solves the full model, or loads the policy from `dir` when an entry for
/// the same instance and state count exists. New solutions are stored.
pub fn solve_full_cached(params: &InstanceParams, config: &SolverConfig, dir: Option<&Path>) -> Result<SolvedInstance> {
    if let Some(dir) = dir {
        let path = cache_path(dir, params);
        if let Ok(f) = std::fs::File::open(&path) {
            if let Ok(file) = read_policy(BufReader::new(f)) {
                let states = enumerate_full(params, config.state_cap)?;
                if file.model == "full" && file.policy.decisions.len() == states.len() {
                    let n = states.len();
                    let space = Arc::new(StateSpace::from_states(states)?);
                    return Ok(SolvedInstance {
                        policy: ExactPolicy::from_parts(space, file.policy),
                        g: file.g,
                        states: n,
                        cached: true,
                    });
                }
            }
        }
    }
    let model = Model::new(params.clone())?;
    let solution = policy_iteration(&model, config)?;
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
        let file = PolicyFile {
            model: "full".into(),
            reference: solution.reference,
            g: solution.g,
            policy: solution.policy.clone(),
        };
        // Write then rename so concurrent readers never see a partial file.
        let path = cache_path(dir, params);
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let mut out = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        write_policy(&mut out, &file)?;
        drop(out);
        std::fs::rename(&tmp, &path)?;
    }
    Ok(SolvedInstance {
        policy: ExactPolicy::new(&solution),
        g: solution.g,
        states: solution.space.len(),
        cached: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::fixtures;
    use crate::policy::Policy;
    use crate::state::SystemState;

    #[test]
    fn second_call_reads_the_cache() {
        let dir = tempfile::tempdir().unwrap();
        let p = fixtures::micro();
        let a = solve_full_cached(&p, &SolverConfig::default(), Some(dir.path())).unwrap();
        let b = solve_full_cached(&p, &SolverConfig::default(), Some(dir.path())).unwrap();
        assert!(!a.cached && b.cached);
        assert_eq!(a.g.to_bits(), b.g.to_bits());
        let s = SystemState::initial(&p);
        assert_eq!(a.policy.decide(&s), b.policy.decide(&s));
    }
}
