//! Experiment files: which instances and policies to run, how to evaluate
//! them, and the hyperparameters of every solver. TOML with one section per
//! component; every key is optional and defaults to the values below.
//!
//! ```toml
//! # dualsource experiment v1
//! instances = ["synthetic-01", "synthetic-02"]
//! policies = ["exact", "bsp", "iwa"]
//! out = "results"
//!
//! [evaluation]
//! replications = 10
//! periods = 10000
//! warmup = 1000
//! seed = 0
//!
//! [exact]
//! tolerance = 1e-9
//! state_cap = 5000000
//!
//! [iwa]
//! psi = 0.2
//! max_iterations = 50
//!
//! [avi]
//! episodes = 2000
//! horizon = 250
//! epsilon = 0.1
//! discount = 0.99
//! ridge = 100.0
//!
//! [dcl]
//! iterations = 3
//! samples = 5000
//! scenarios = 2000
//! horizon = 500
//! warmup = 10
//! hidden = [32, 32]
//! epochs = 100
//! batch_size = 64
//! learning_rate = 0.001
//! validation_replications = 4
//! validation_periods = 5000
//!
//! [epl]
//! sample_factor = 2.5
//! scenario_factor = 2.0
//! extra_layers = 1
//! episode_samples = 50
//! ```
//!
//! Unknown keys are rejected, as are values outside their documented range.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::exact::SolverConfig;
use crate::heuristics::IwaConfig;
use crate::learning::{AviConfig, EplConfig, NetConfig, RolloutConfig};
use crate::sim::EvalConfig;

/// Policies the toolkit can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Exact,
    Bsp,
    DualIndex,
    Iwa,
    Avi,
    Dcl,
    Epl,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::Exact,
        PolicyKind::Bsp,
        PolicyKind::DualIndex,
        PolicyKind::Iwa,
        PolicyKind::Avi,
        PolicyKind::Dcl,
        PolicyKind::Epl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Exact => "exact",
            PolicyKind::Bsp => "bsp",
            PolicyKind::DualIndex => "dual-index",
            PolicyKind::Iwa => "iwa",
            PolicyKind::Avi => "avi",
            PolicyKind::Dcl => "dcl",
            PolicyKind::Epl => "epl",
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown policy `{s}`")))
    }
}

/// Settings of every solver and of the evaluation protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub evaluation: EvalConfig,
    pub exact: SolverConfig,
    pub iwa: IwaConfig,
    pub avi: AviConfig,
    pub dcl: RolloutConfig,
    pub net: NetConfig,
    /// Simulation that scores DCL and EPL rounds.
    pub validation: EvalConfig,
    pub epl: EplConfig,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            evaluation: EvalConfig {
                replications: 10,
                periods: 10_000,
                warmup: 1_000,
                seed: 0,
            },
            exact: SolverConfig::default(),
            iwa: IwaConfig::default(),
            avi: AviConfig::default(),
            dcl: RolloutConfig::default(),
            net: NetConfig::default(),
            validation: EvalConfig {
                replications: 4,
                periods: 5_000,
                warmup: 500,
                seed: 99,
            },
            epl: EplConfig::default(),
        }
    }
}

impl Hyperparams {
    /// Sets every seed to `seed`.
    pub fn reseed(&mut self, seed: u64) {
        self.evaluation.seed = seed;
        self.avi.seed = seed;
        self.dcl.seed = seed;
        self.net.train.seed = seed;
        self.epl.rollout.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        let e = &self.evaluation;
        if e.replications == 0 || e.periods <= e.warmup {
            return bad("evaluation needs at least one replication and more periods than warmup");
        }
        if !(self.exact.tolerance > 0.0) || self.exact.state_cap == 0 {
            return bad("exact tolerance and state cap must be positive");
        }
        if !(self.iwa.psi > 0.0 && self.iwa.psi < 1.0) || self.iwa.max_iterations == 0 {
            return bad("iwa psi must lie in (0, 1) with at least one iteration");
        }
        let a = &self.avi;
        if a.episodes == 0 || a.horizon < 2 || !(0.0..=1.0).contains(&a.epsilon) {
            return bad("avi needs episodes, a horizon of at least 2 and epsilon in [0, 1]");
        }
        if !(a.discount > 0.0 && a.discount < 1.0) || !(a.ridge > 0.0) {
            return bad("avi discount must lie in (0, 1) and ridge be positive");
        }
        self.dcl.validate()?;
        if self.validation.replications == 0 || self.validation.periods <= self.validation.warmup {
            return bad("round validation needs a replication and more periods than warmup");
        }
        let t = &self.net.train;
        if self.net.hidden.contains(&0) || t.epochs == 0 || t.batch_size == 0 || !(t.learning_rate > 0.0) {
            return bad("network widths, epochs, batch size and learning rate must be positive");
        }
        let p = &self.epl;
        if !(p.sample_factor > 0.0 && p.scenario_factor > 0.0) || p.episode_samples == 0 {
            return bad("epl factors and episode length must be positive");
        }
        Ok(())
    }

    /// The EPL settings built on the single-instance DCL settings.
    pub fn epl_config(&self) -> EplConfig {
        EplConfig {
            rollout: self.dcl.clone(),
            net: self.net.clone(),
            ..self.epl.clone()
        }
    }
}

/// A parsed experiment file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Bundled names or instance file paths.
    pub instances: Vec<String>,
    pub policies: Vec<PolicyKind>,
    pub out: PathBuf,
    pub hyper: Hyperparams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            instances: Vec::new(),
            policies: vec![PolicyKind::Exact, PolicyKind::Bsp, PolicyKind::Iwa],
            out: PathBuf::from("results"),
            hyper: Hyperparams::default(),
        }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Raw {
    instances: Option<Vec<String>>,
    policies: Option<Vec<String>>,
    out: Option<PathBuf>,
    evaluation: Option<RawEval>,
    exact: Option<RawExact>,
    iwa: Option<RawIwa>,
    avi: Option<RawAvi>,
    dcl: Option<RawDcl>,
    epl: Option<RawEpl>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEval {
    replications: Option<usize>,
    periods: Option<usize>,
    warmup: Option<usize>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExact {
    tolerance: Option<f64>,
    state_cap: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIwa {
    psi: Option<f64>,
    max_iterations: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAvi {
    episodes: Option<usize>,
    horizon: Option<usize>,
    epsilon: Option<f64>,
    discount: Option<f64>,
    ridge: Option<f64>,
    checkpoints: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDcl {
    iterations: Option<usize>,
    samples: Option<usize>,
    scenarios: Option<usize>,
    horizon: Option<usize>,
    warmup: Option<usize>,
    hidden: Option<Vec<usize>>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    learning_rate: Option<f64>,
    validation_replications: Option<usize>,
    validation_periods: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEpl {
    sample_factor: Option<f64>,
    scenario_factor: Option<f64>,
    extra_layers: Option<usize>,
    episode_samples: Option<usize>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: Raw = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1);
            Error::parse(line, e.message().to_string())
        })?;
        let mut cfg = ExperimentConfig::default();
        set(&mut cfg.instances, raw.instances);
        if let Some(p) = raw.policies {
            cfg.policies = p.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        set(&mut cfg.out, raw.out);
        let h = &mut cfg.hyper;
        if let Some(e) = raw.evaluation {
            set(&mut h.evaluation.replications, e.replications);
            set(&mut h.evaluation.periods, e.periods);
            set(&mut h.evaluation.warmup, e.warmup);
            set(&mut h.evaluation.seed, e.seed);
        }
        if let Some(e) = raw.exact {
            set(&mut h.exact.tolerance, e.tolerance);
            set(&mut h.exact.state_cap, e.state_cap);
        }
        if let Some(i) = raw.iwa {
            set(&mut h.iwa.psi, i.psi);
            set(&mut h.iwa.max_iterations, i.max_iterations);
        }
        if let Some(a) = raw.avi {
            set(&mut h.avi.episodes, a.episodes);
            set(&mut h.avi.horizon, a.horizon);
            set(&mut h.avi.epsilon, a.epsilon);
            set(&mut h.avi.discount, a.discount);
            set(&mut h.avi.ridge, a.ridge);
            set(&mut h.avi.checkpoints, a.checkpoints);
        }
        if let Some(d) = raw.dcl {
            set(&mut h.dcl.iterations, d.iterations);
            set(&mut h.dcl.samples, d.samples);
            set(&mut h.dcl.scenarios, d.scenarios);
            set(&mut h.dcl.horizon, d.horizon);
            set(&mut h.dcl.warmup, d.warmup);
            set(&mut h.net.hidden, d.hidden);
            set(&mut h.net.train.epochs, d.epochs);
            set(&mut h.net.train.batch_size, d.batch_size);
            set(&mut h.net.train.learning_rate, d.learning_rate);
            set(&mut h.validation.replications, d.validation_replications);
            set(&mut h.validation.periods, d.validation_periods);
        }
        if let Some(p) = raw.epl {
            set(&mut h.epl.sample_factor, p.sample_factor);
            set(&mut h.epl.scenario_factor, p.scenario_factor);
            set(&mut h.epl.extra_layers, p.extra_layers);
            set(&mut h.epl.episode_samples, p.episode_samples);
        }
        h.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
