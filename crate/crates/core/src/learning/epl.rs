//! Training one policy for many instances by appending the instance
//! parameters to the features and resampling them at every episode reset.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use crate::dynamics::Model;
use crate::error::{Error, Result};
use crate::params::{DemandFamily, InstanceParams, ModeParams};
use crate::policy::{Cached, Policy};
use crate::sim::{estimate_cost, stream, EvalConfig, Purpose};

use super::avi::{avi_fit, AviConfig, AviResult, LinearVfa, VfaPolicy};
use super::classifier::{Classifier, DecisionGrid};
use super::dcl::{collect_segment, fit, order_share, Dataset, NetConfig, RolloutConfig, Task};
use super::features::{FeatureSchema, ParamBounds};
use super::mlp::TrainReport;

/// Names of the entries of [`theta`], in order.
pub const THETA_NAMES: [&str; 16] = [
    "n", "s_max", "mu_c", "var_c", "l_c", "c_c", "k_c", "mu_a", "var_a", "l_a", "c_a", "k_a", "q_c", "m", "h", "b",
];

/// The instance parameters a parameter-augmented policy sees.
pub fn theta(p: &InstanceParams) -> Vec<f64> {
    vec![
        p.installed_base as f64,
        p.max_circulating as f64,
        p.cm.failure_mean,
        p.cm.failure_var,
        p.cm.lead_time as f64,
        p.cm.unit_price,
        p.cm.order_cost,
        p.am.failure_mean,
        p.am.failure_var,
        p.am.lead_time as f64,
        p.am.unit_price,
        p.am.order_cost,
        p.batch_size as f64,
        p.maintenance_cost,
        p.holding_cost,
        p.backorder_cost,
    ]
}

/// Inverse of [`theta`]; integer entries are rounded. The result is
/// validated.
pub fn from_theta(t: &[f64], demand: DemandFamily) -> Result<InstanceParams> {
    if t.len() != THETA_NAMES.len() {
        return Err(Error::InvalidArgument(format!("expected {} parameters, got {}", THETA_NAMES.len(), t.len())));
    }
    let int = |x: f64| x.round().max(0.0);
    let p = InstanceParams {
        installed_base: int(t[0]) as u32,
        max_circulating: int(t[1]) as u32,
        cm: ModeParams {
            failure_mean: t[2],
            failure_var: t[3],
            lead_time: int(t[4]) as usize,
            unit_price: t[5],
            order_cost: t[6],
        },
        am: ModeParams {
            failure_mean: t[7],
            failure_var: t[8],
            lead_time: int(t[9]) as usize,
            unit_price: t[10],
            order_cost: t[11],
        },
        batch_size: int(t[12]) as u32,
        maintenance_cost: t[13],
        holding_cost: t[14],
        backorder_cost: t[15],
        demand,
    };
    p.validate()?;
    Ok(p)
}

/// Per-parameter value sets, each sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct EplGrid {
    pub values: Vec<Vec<f64>>,
    pub demand: DemandFamily,
}

impl EplGrid {
    pub fn bounds(&self) -> ParamBounds {
        ParamBounds {
            lo: self.values.iter().map(|v| v[0]).collect(),
            hi: self.values.iter().map(|v| *v.last().unwrap()).collect(),
        }
    }

    /// Number of parameter combinations.
    pub fn size(&self) -> f64 {
        self.values.iter().map(|v| v.len() as f64).product()
    }
}

/// Builds the grid from a population. With `kappa = None` each value set is
/// every distinct value in the population; with `Some(k)` it is the `k`
/// evenly spaced order statistics from the minimum to the maximum, deduplicated.
pub fn epl_build_grid(population: &[InstanceParams], kappa: Option<usize>) -> Result<EplGrid> {
    let first = population
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty population".into()))?;
    if population.iter().any(|p| p.demand != first.demand) {
        return Err(Error::InvalidArgument("population mixes demand families".into()));
    }
    if kappa == Some(0) {
        return Err(Error::InvalidArgument("kappa must be at least 1".into()));
    }
    let thetas: Vec<Vec<f64>> = population.iter().map(theta).collect();
    let mut values = Vec::with_capacity(THETA_NAMES.len());
    for j in 0..THETA_NAMES.len() {
        let mut col: Vec<f64> = thetas.iter().map(|t| t[j]).collect();
        if col.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("parameter {} is not finite", THETA_NAMES[j])));
        }
        col.sort_by(f64::total_cmp);
        let mut set = match kappa {
            None => col,
            Some(1) => vec![col[0]],
            Some(k) => (0..k)
                .map(|i| col[((i * (col.len() - 1)) as f64 / (k - 1) as f64).round() as usize])
                .collect(),
        };
        set.dedup();
        values.push(set);
    }
    Ok(EplGrid {
        values,
        demand: first.demand,
    })
}

/// Draws each parameter uniformly from its value set, independently, and
/// redraws until the combination is a valid instance. Under Poisson demand
/// the variances follow the means.
pub fn epl_sample(grid: &EplGrid, rng: &mut impl Rng) -> Result<InstanceParams> {
    const CAP: usize = 1000;
    for _ in 0..CAP {
        let mut t: Vec<f64> = grid.values.iter().map(|v| v[rng.random_range(0..v.len())]).collect();
        if grid.demand == DemandFamily::Poisson {
            t[3] = t[2];
            t[8] = t[7];
        }
        if let Ok(p) = from_theta(&t, grid.demand) {
            return Ok(p);
        }
    }
    Err(Error::InvalidArgument(format!("no valid instance in {CAP} draws; the grid is inconsistent")))
}

/// Where training instances come from.
#[derive(Debug, Clone, PartialEq)]
pub enum EplSource {
    /// A fixed list, drawn uniformly.
    Instances(Vec<InstanceParams>),
    /// Independent draws from a grid.
    Grid(EplGrid),
}

impl EplSource {
    pub fn sample(&self, rng: &mut impl Rng) -> Result<InstanceParams> {
        match self {
            EplSource::Instances(list) if list.is_empty() => Err(Error::InvalidArgument("no instances".into())),
            EplSource::Instances(list) => Ok(list[rng.random_range(0..list.len())].clone()),
            EplSource::Grid(g) => epl_sample(g, rng),
        }
    }

    pub fn grid(&self) -> Result<EplGrid> {
        match self {
            EplSource::Instances(list) => epl_build_grid(list, None),
            EplSource::Grid(g) => Ok(g.clone()),
        }
    }

    /// Feature layout covering every instance the source can produce.
    pub fn schema(&self, spare_slot: bool) -> Result<FeatureSchema> {
        let grid = self.grid()?;
        let hi = grid.bounds().hi;
        let extra = spare_slot as usize;
        Ok(FeatureSchema {
            cm_slots: hi[4] as usize + extra,
            am_slots: hi[9] as usize + extra,
            epl: Some(grid.bounds()),
        })
    }

    /// Output classes covering every instance the source can produce.
    pub fn decisions(&self) -> Result<DecisionGrid> {
        let b = self.grid()?.bounds();
        Ok(DecisionGrid::spanning((b.hi[1] + b.hi[0]) as u32, b.lo[12] as u32))
    }

    /// The instance of episode `e` of `round`.
    fn episode(&self, seed: u64, round: usize, e: usize) -> Result<InstanceParams> {
        let mut rng = stream(seed, ((round as u64) << 32) | e as u64, Purpose::Parameters);
        self.sample(&mut rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EplConfig {
    /// Settings of the single-instance trainer being scaled.
    pub rollout: RolloutConfig,
    pub net: NetConfig,
    /// Multiplier on the number of labelled states.
    pub sample_factor: f64,
    /// Multiplier on the rollout scenarios per state.
    pub scenario_factor: f64,
    /// Extra hidden layers, each as wide as the last one.
    pub extra_layers: usize,
    /// Labelled states per episode; the instance is redrawn between episodes.
    pub episode_samples: usize,
}

impl Default for EplConfig {
    fn default() -> Self {
        EplConfig {
            rollout: RolloutConfig::default(),
            net: NetConfig::default(),
            sample_factor: 2.5,
            scenario_factor: 2.0,
            extra_layers: 1,
            episode_samples: 50,
        }
    }
}

impl EplConfig {
    /// The scaled single-instance settings.
    pub fn scaled(&self) -> (RolloutConfig, NetConfig) {
        let mut r = self.rollout.clone();
        r.samples = (r.samples as f64 * self.sample_factor).round().max(1.0) as usize;
        r.scenarios = (r.scenarios as f64 * self.scenario_factor).round().max(1.0) as usize;
        let mut n = self.net.clone();
        let w = n.hidden.last().copied().unwrap_or(32);
        n.hidden.extend(std::iter::repeat_n(w, self.extra_layers));
        (r, n)
    }
}

#[derive(Debug, Clone)]
pub struct EplRound {
    pub classifier: Arc<Classifier>,
    pub report: TrainReport,
    pub order_share: f64,
    /// Simulated cost on each validation instance.
    pub validation_costs: Vec<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct EplResult {
    pub rounds: Vec<EplRound>,
    /// Round with the lowest mean validation cost relative to the best round
    /// on each instance.
    pub best: usize,
    pub seconds: f64,
}

impl EplResult {
    pub fn best_classifier(&self) -> Arc<Classifier> {
        self.rounds[self.best].classifier.clone()
    }
}

fn key(p: &InstanceParams) -> Vec<u64> {
    theta(p).iter().map(|x| x.to_bits()).collect()
}

/// Rollout-classifier training across the instances of `source`. The first
/// incumbent on each instance comes from `initial`; later ones are the
/// previous round's classifier.
pub fn epl_train_dcl(
    source: &EplSource,
    initial: &dyn Fn(&InstanceParams) -> Result<Arc<dyn Policy>>,
    cfg: &EplConfig,
    validation: &[InstanceParams],
    eval: &EvalConfig,
) -> Result<EplResult> {
    let (rollout, net) = cfg.scaled();
    rollout.validate()?;
    if cfg.episode_samples == 0 {
        return Err(Error::InvalidArgument("episodes need at least one sample".into()));
    }
    let start = Instant::now();
    let schema = source.schema(false)?;
    let grid = source.decisions()?;
    let mut tasks: HashMap<Vec<u64>, Task> = HashMap::new();
    let mut rounds: Vec<EplRound> = Vec::new();
    for round in 0..rollout.iterations {
        let t = Instant::now();
        let previous = rounds.last().map(|r| r.classifier.clone());
        let mut data = Dataset::default();
        let mut e = 0;
        while data.labels.len() < rollout.samples {
            let params = source.episode(rollout.seed, round, e)?;
            let k = key(&params);
            if !tasks.contains_key(&k) {
                let first = initial(&params)?;
                tasks.insert(k.clone(), Task::new(params.clone(), first)?);
            }
            let task = tasks.get_mut(&k).unwrap();
            if let Some(c) = &previous {
                if task.incumbent_round != round {
                    task.incumbent = Arc::new(Cached::new(c.bind(&params)?));
                    task.incumbent_round = round;
                }
            }
            let len = cfg.episode_samples.min(rollout.samples - data.labels.len());
            let first = data.labels.len();
            collect_segment(task, &schema, &grid, &rollout, round, first, len, &mut data)?;
            e += 1;
        }
        let (classifier, report) = fit(&data, &schema, &grid, &net, rollout.seed.wrapping_add(round as u64))?;
        let classifier = Arc::new(classifier);
        let validation_costs = validation
            .iter()
            .map(|p| {
                let model = Model::new(p.clone())?;
                let policy = Cached::new(classifier.bind(p)?);
                Ok(estimate_cost(&model, &policy, eval)?.mean)
            })
            .collect::<Result<Vec<f64>>>()?;
        rounds.push(EplRound {
            classifier,
            report,
            order_share: order_share(&data, &grid),
            validation_costs,
            seconds: t.elapsed().as_secs_f64(),
        });
    }
    let best = relative_best(&rounds);
    Ok(EplResult {
        rounds,
        best,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn relative_best(rounds: &[EplRound]) -> usize {
    let n = rounds.first().map_or(0, |r| r.validation_costs.len());
    let floor: Vec<f64> = (0..n)
        .map(|i| rounds.iter().map(|r| r.validation_costs[i]).fold(f64::INFINITY, f64::min))
        .collect();
    let score = |r: &EplRound| -> f64 {
        r.validation_costs
            .iter()
            .zip(&floor)
            .map(|(c, f)| if *f > 0.0 { c / f } else { 1.0 })
            .sum::<f64>()
    };
    (0..rounds.len())
        .min_by(|&a, &b| score(&rounds[a]).total_cmp(&score(&rounds[b])))
        .unwrap_or(0)
}

/// Approximate value iteration across the instances of `source`, one instance
/// per episode. Snapshots are scored by the mean log cost over `validation`.
pub fn epl_train_avi(source: &EplSource, cfg: &AviConfig, validation: &[InstanceParams]) -> Result<AviResult> {
    let schema = source.schema(true)?;
    let validation: Vec<Model> = validation.iter().map(|p| Model::new(p.clone())).collect::<Result<_>>()?;
    let validate = |vfa: &LinearVfa| -> Result<f64> {
        let mut total = 0.0;
        for m in &validation {
            let policy = Cached::new(VfaPolicy::new(vfa.clone(), &m.params)?);
            total += estimate_cost(m, &policy, &cfg.validation)?.mean.ln();
        }
        Ok(total / validation.len().max(1) as f64)
    };
    let mut models: HashMap<Vec<u64>, Model> = HashMap::new();
    avi_fit(schema, cfg, |e| {
        let params = source.episode(cfg.seed, 0, e)?;
        let k = key(&params);
        if let Some(m) = models.get(&k) {
            return Ok(m.clone());
        }
        let m = Model::new(params)?;
        models.insert(k, m.clone());
        Ok(m)
    }, &validate)
}
