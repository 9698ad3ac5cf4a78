//! Builds any policy of the toolkit from one set of hyperparameters. The
//! command line and the experiment drivers go through here.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use crate::config::{Hyperparams, PolicyKind};
use crate::dynamics::Model;
use crate::error::{Error, Result};
use crate::exact::{enumerate_full, solve_full_cached, SimplifiedPolicy, SolvedInstance};
use crate::heuristics::{
    bsp_solve, dual_index_solve, iwa, DualIndexConfig, DualIndexPolicy, Evaluator, ExactInner, IwaResult,
};
use crate::learning::{
    avi_train, dcl_train, epl_train_avi, epl_train_dcl, EplResult, EplSource, PolicyArtifact, VfaPolicy,
};
use crate::params::InstanceParams;
use crate::policy::{Cached, Policy};
use crate::sim::{estimate_cost, Estimate};

/// A policy ready to run, with what is needed to store and describe it.
pub struct Built {
    pub kind: PolicyKind,
    pub policy: Arc<dyn Policy>,
    /// Storable form, when the policy has one.
    pub artifact: Option<PolicyArtifact>,
    /// Long-run cost found while building, if any.
    pub build_cost: Option<f64>,
    /// One-line description of the result.
    pub summary: String,
    pub seconds: f64,
}

/// Policy construction with a shared exact-solution cache.
#[derive(Debug, Clone, Default)]
pub struct Runner {
    pub hyper: Hyperparams,
    /// Directory for solved exact policies; `None` disables caching.
    pub cache: Option<PathBuf>,
}

impl Runner {
    pub fn new(hyper: Hyperparams, cache: Option<PathBuf>) -> Result<Self> {
        hyper.validate()?;
        Ok(Runner { hyper, cache })
    }

    /// Optimal policy and its average cost.
    pub fn exact(&self, params: &InstanceParams) -> Result<SolvedInstance> {
        solve_full_cached(params, &self.hyper.exact, self.cache.as_deref())
    }

    /// Exact evaluation when the full model fits under the state cap,
    /// simulation otherwise.
    pub fn search_evaluator(&self, params: &InstanceParams) -> Evaluator {
        match enumerate_full(params, self.hyper.exact.state_cap) {
            Ok(_) => Evaluator::Exact(self.hyper.exact.clone()),
            Err(_) => Evaluator::Simulation(self.hyper.evaluation),
        }
    }

    /// Iterative weight adjustment with the exact single-rate solver.
    pub fn iwa(&self, params: &InstanceParams) -> Result<IwaResult<SimplifiedPolicy>> {
        let inner = ExactInner {
            config: self.hyper.exact.clone(),
        };
        iwa(params, &inner, &self.hyper.iwa, &self.search_evaluator(params))
    }

    /// Builds a single-instance policy. EPL needs a population; use
    /// [`Runner::train_epl`].
    pub fn build(&self, kind: PolicyKind, params: &InstanceParams) -> Result<Built> {
        let start = Instant::now();
        let h = &self.hyper;
        let (policy, artifact, cost, summary): (Arc<dyn Policy>, _, _, _) = match kind {
            PolicyKind::Exact => {
                let s = self.exact(params)?;
                let summary = format!("g {:.6} over {} states{}", s.g, s.states, if s.cached { " (cached)" } else { "" });
                (Arc::new(s.policy), None, Some(s.g), summary)
            }
            PolicyKind::Bsp => {
                let r = bsp_solve(params, &self.search_evaluator(params))?;
                let art = PolicyArtifact::BaseStock {
                    source: r.policy.source,
                    level: r.policy.level,
                };
                let summary = format!("{} up to {}, cost {:.6}", r.policy.source, r.policy.level, r.cost);
                (Arc::new(r.policy), Some(art), Some(r.cost), summary)
            }
            PolicyKind::DualIndex => {
                let cfg = DualIndexConfig {
                    eval: h.evaluation,
                    seed: h.evaluation.seed,
                    ..DualIndexConfig::default()
                };
                let sol = dual_index_solve(params, &cfg)?;
                let summary = format!("z_a {} delta {}, cost {:.6}", sol.di.z_a, sol.di.delta, sol.cost);
                let art = PolicyArtifact::DualIndex(sol.di);
                (Arc::new(DualIndexPolicy::new(sol.di, params)), Some(art), Some(sol.cost), summary)
            }
            PolicyKind::Iwa => {
                let r = self.iwa(params)?;
                let summary = format!(
                    "gamma {:.4} rho {:.4} after {} iterations{}, cost {:.6}",
                    r.gamma_star,
                    r.rho_star,
                    r.iterations,
                    if r.converged { "" } else { " (not converged)" },
                    r.cost
                );
                (Arc::new(r.inner_policy), None, Some(r.cost), summary)
            }
            PolicyKind::Avi => {
                let r = avi_train(params, &h.avi)?;
                let best = r.checkpoints.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
                let summary = format!("{} updates, best checkpoint {:.6}", r.updates, best);
                let policy = Cached::new(VfaPolicy::new(r.vfa.clone(), params)?);
                (Arc::new(policy), Some(PolicyArtifact::Vfa(r.vfa)), None, summary)
            }
            PolicyKind::Dcl => {
                let base = bsp_solve(params, &self.search_evaluator(params))?;
                let r = dcl_train(params, Arc::new(base.policy), &h.dcl, &h.net, &h.validation)?;
                let c = r.best_classifier();
                let summary = format!(
                    "best round {} of {}, validation cost {:.6}",
                    r.best + 1,
                    r.rounds.len(),
                    r.rounds[r.best].validation_cost
                );
                let policy = Cached::new(c.bind(params)?);
                (Arc::new(policy), Some(PolicyArtifact::Classifier((*c).clone())), None, summary)
            }
            PolicyKind::Epl => {
                return Err(Error::InvalidArgument("epl trains on a population; use train_epl".into()));
            }
        };
        Ok(Built {
            kind,
            policy,
            artifact,
            build_cost: cost,
            summary,
            seconds: start.elapsed().as_secs_f64(),
        })
    }

    /// Trains one DCL classifier over `source`, starting from each
    /// instance's base-stock policy and validated on `validation`.
    pub fn train_epl(&self, source: &EplSource, validation: &[InstanceParams]) -> Result<EplResult> {
        let initial = |p: &InstanceParams| -> Result<Arc<dyn Policy>> {
            Ok(Arc::new(bsp_solve(p, &self.search_evaluator(p))?.policy))
        };
        epl_train_dcl(source, &initial, &self.hyper.epl_config(), validation, &self.hyper.validation)
    }

    /// One linear value function over `source`.
    pub fn train_epl_avi(&self, source: &EplSource, validation: &[InstanceParams]) -> Result<crate::learning::AviResult> {
        epl_train_avi(source, &self.hyper.avi, validation)
    }

    /// Simulated long-run cost under the evaluation protocol.
    pub fn evaluate(&self, params: &InstanceParams, policy: &dyn Policy) -> Result<Estimate> {
        estimate_cost(&Model::new(params.clone())?, &policy, &self.hyper.evaluation)
    }

    /// The exact average cost of `policy` on the states it reaches, when the
    /// model fits under the state cap.
    pub fn exact_cost(&self, params: &InstanceParams, policy: &dyn Policy) -> Result<f64> {
        Evaluator::Exact(self.hyper.exact.clone()).cost(&Model::new(params.clone())?, &policy)
    }
}

/// Loads a stored policy for `params`.
pub fn load_policy(path: &Path, params: &InstanceParams) -> Result<Arc<dyn Policy>> {
    Ok(match PolicyArtifact::load(path)? {
        PolicyArtifact::BaseStock { source, level } => {
            Arc::new(crate::heuristics::BaseStockPolicy::new(source, level, params))
        }
        PolicyArtifact::DualIndex(di) => Arc::new(DualIndexPolicy::new(di, params)),
        PolicyArtifact::Classifier(c) => Arc::new(Cached::new(Arc::new(c).bind(params)?)),
        PolicyArtifact::Vfa(v) => Arc::new(Cached::new(VfaPolicy::new(v, params)?)),
    })
}
