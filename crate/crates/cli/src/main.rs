//! `dualsource`: solve, train and evaluate dual-sourcing policies.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dualsource::config::energy::{generate_energy_grid, EnergyBase, Variations, TEMPLATE};
use dualsource::config::{library, load_instance, ExperimentConfig, Hyperparams, PolicyKind};
use dualsource::heuristics::trace_rows;
use dualsource::learning::{epl_build_grid, EplSource, PolicyArtifact};
use dualsource::runner::{load_policy, Runner};
use dualsource::sim::{
    breakdown_rows, optimality_gap, run_replications, write_breakdown_csv, write_gaps_csv, write_iwa_trace_csv,
    write_orders_csv, GapRow,
};
use dualsource::{InstanceParams, Model, Policy};

#[derive(Parser)]
#[command(name = "dualsource", version, about = "Dual sourcing of spare parts from CM and AM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List bundled instances, or the members of an instance set.
    ListInstances {
        #[arg(long)]
        instance_set: Option<String>,
    },
    /// Optimal policy by policy iteration.
    SolveExact(Common),
    /// Best single-source base-stock policy.
    SolveBsp(Common),
    /// Iterative weight adjustment; also writes the iteration trace.
    RunIwa(Common),
    /// Approximate value iteration with a linear value function.
    TrainAvi(Common),
    /// Deep controlled learning on each instance.
    TrainDcl(Common),
    /// One classifier for the whole instance set.
    TrainEpl {
        #[command(flatten)]
        common: Common,
        /// Train on independent draws from a grid with this many values per
        /// parameter instead of the listed instances.
        #[arg(long)]
        kappa: Option<usize>,
    },
    /// Simulate a policy and report its cost breakdown and order sizes.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// A policy kind or a stored policy file.
        #[arg(long)]
        policy: String,
    },
    /// Optimality gaps of several policies against the exact optimum.
    Gaps {
        #[command(flatten)]
        common: Common,
        /// Comma-separated policy kinds.
        #[arg(long, value_delimiter = ',', default_value = "exact,bsp,iwa")]
        policies: Vec<PolicyKind>,
        /// Score every policy by simulation instead of exact evaluation.
        #[arg(long)]
        simulate: bool,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Bundled instance name or instance file; repeatable.
    #[arg(long)]
    instance: Vec<String>,
    /// `synthetic` (1 to 10), `synthetic-all` (1 to 12) or `energy`.
    #[arg(long)]
    instance_set: Option<String>,
    /// Experiment file supplying hyperparameters.
    #[arg(long)]
    hyperparams: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    periods: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    /// Output directory for CSV files and policy files.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Directory reusing solved exact policies between runs.
    #[arg(long, env = "DUALSOURCE_CACHE")]
    cache: Option<PathBuf>,
    /// Base price of item 1 for the energy set.
    #[arg(long, default_value_t = 1000.0)]
    energy_price: f64,
}

struct Named {
    name: String,
    params: InstanceParams,
}

impl Common {
    fn runner(&self) -> Result<Runner> {
        let mut hyper = match &self.hyperparams {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?.hyper,
            None => Hyperparams::default(),
        };
        if let Some(s) = self.seed {
            hyper.reseed(s);
        }
        let e = &mut hyper.evaluation;
        e.replications = self.replications.unwrap_or(e.replications);
        e.periods = self.periods.unwrap_or(e.periods);
        e.warmup = self.warmup.unwrap_or(e.warmup);
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
        Ok(Runner::new(hyper, self.cache.clone())?)
    }

    fn instances(&self) -> Result<Vec<Named>> {
        let mut out = match &self.instance_set {
            Some(set) => instance_set(set, self.energy_price)?,
            None => Vec::new(),
        };
        for name in &self.instance {
            let f = load_instance(name).with_context(|| format!("loading instance `{name}`"))?;
            out.push(Named {
                name: f.name,
                params: f.params,
            });
        }
        if out.is_empty() {
            bail!("no instances given; use --instance or --instance-set");
        }
        Ok(out)
    }

    fn out_file(&self, name: &str) -> Result<BufWriter<File>> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(name);
        Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
    }

    fn save(&self, instance: &str, kind: PolicyKind, art: &PolicyArtifact) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out)?;
        let path = self.out.join(format!("{instance}-{kind}.policy"));
        art.save(&path)?;
        Ok(path)
    }
}

fn instance_set(set: &str, energy_price: f64) -> Result<Vec<Named>> {
    let synthetic = |ks: std::ops::RangeInclusive<usize>| -> Result<Vec<Named>> {
        ks.map(|k| {
            let b = library::bundled(&format!("synthetic-{k:02}"))?;
            Ok(Named {
                name: b.name,
                params: b.params,
            })
        })
        .collect()
    };
    match set {
        "synthetic" => synthetic(1..=10),
        "synthetic-all" => synthetic(1..=12),
        "energy" => Ok(generate_energy_grid(&TEMPLATE, &EnergyBase::new(energy_price), &Variations::paper())?
            .into_iter()
            .enumerate()
            .map(|(i, s)| Named {
                name: format!("energy-{:04}-item{}", i + 1, s.item),
                params: s.params,
            })
            .collect()),
        other => bail!("unknown instance set `{other}`; expected synthetic, synthetic-all or energy"),
    }
}

fn build_each(common: &Common, kind: PolicyKind) -> Result<()> {
    let runner = common.runner()?;
    for inst in common.instances()? {
        let built = runner.build(kind, &inst.params).with_context(|| format!("{kind} on {}", inst.name))?;
        let saved = match &built.artifact {
            Some(a) => format!(" -> {}", common.save(&inst.name, kind, a)?.display()),
            None => String::new(),
        };
        println!("{} {kind}: {} ({:.1}s){saved}", inst.name, built.summary, built.seconds);
    }
    Ok(())
}

fn run_iwa(common: &Common) -> Result<()> {
    let runner = common.runner()?;
    let mut out = common.out_file("iwa_trace.csv")?;
    let mut rows = Vec::new();
    for inst in common.instances()? {
        let r = runner.iwa(&inst.params).with_context(|| format!("iwa on {}", inst.name))?;
        println!(
            "{} iwa: gamma {:.4} rho {:.4} after {} iterations{}, cost {:.6}",
            inst.name,
            r.gamma_star,
            r.rho_star,
            r.iterations,
            if r.converged { "" } else { " (not converged)" },
            r.cost
        );
        rows.push((inst.name, trace_rows(&r.trace)));
    }
    // One header for the whole file.
    let mut buf = Vec::new();
    for (i, (name, trace)) in rows.iter().enumerate() {
        let mut part = Vec::new();
        write_iwa_trace_csv(&mut part, name, trace)?;
        let text = String::from_utf8(part)?;
        let skip = if i == 0 { 0 } else { 2 };
        for line in text.lines().skip(skip) {
            buf.extend_from_slice(line.as_bytes());
            buf.push(b'\n');
        }
    }
    std::io::Write::write_all(&mut out, &buf)?;
    Ok(())
}

fn train_epl(common: &Common, kappa: Option<usize>) -> Result<()> {
    let runner = common.runner()?;
    let instances = common.instances()?;
    let params: Vec<InstanceParams> = instances.iter().map(|i| i.params.clone()).collect();
    let source = match kappa {
        Some(k) => EplSource::Grid(epl_build_grid(&params, Some(k))?),
        None => EplSource::Instances(params.clone()),
    };
    let r = runner.train_epl(&source, &params)?;
    let c = r.best_classifier();
    let path = common.save("population", PolicyKind::Epl, &PolicyArtifact::Classifier((*c).clone()))?;
    println!(
        "epl: best round {} of {} over {} instances ({:.1}s) -> {}",
        r.best + 1,
        r.rounds.len(),
        instances.len(),
        r.seconds,
        path.display()
    );
    for (inst, cost) in instances.iter().zip(&r.rounds[r.best].validation_costs) {
        println!("{} epl: validation cost {cost:.6}", inst.name);
    }
    Ok(())
}

fn evaluate(common: &Common, policy: &str) -> Result<()> {
    let runner = common.runner()?;
    let kind = policy.parse::<PolicyKind>().ok();
    let mut breakdown = Vec::new();
    let mut orders = Vec::new();
    for inst in common.instances()? {
        let pol: Arc<dyn Policy> = match kind {
            Some(k) => runner.build(k, &inst.params).with_context(|| format!("{k} on {}", inst.name))?.policy,
            None => load_policy(Path::new(policy), &inst.params).with_context(|| format!("loading {policy}"))?,
        };
        let model = Model::new(inst.params.clone())?;
        let stats = run_replications(&model, &pol, &runner.hyper.evaluation)?;
        let label = kind.map_or_else(|| "stored".to_string(), |k| k.to_string());
        let (row, mut o) = breakdown_rows(&inst.name, &label, &stats);
        println!(
            "{} {label}: cost {:.4} (purchase {:.4} holding {:.4} backorder {:.4} maintenance {:.4}), AM share {:.3}",
            inst.name,
            row.total(),
            row.purchase.mean,
            row.holding.mean,
            row.backorder.mean,
            row.maintenance.mean,
            row.am_fraction.mean
        );
        breakdown.push(row);
        orders.append(&mut o);
    }
    write_breakdown_csv(&mut common.out_file("breakdown.csv")?, &breakdown)?;
    write_orders_csv(&mut common.out_file("orders.csv")?, &orders)?;
    Ok(())
}

fn gaps(common: &Common, policies: &[PolicyKind], simulate: bool) -> Result<()> {
    let runner = common.runner()?;
    let instances = common.instances()?;
    let epl = if policies.contains(&PolicyKind::Epl) {
        let params: Vec<InstanceParams> = instances.iter().map(|i| i.params.clone()).collect();
        Some(runner.train_epl(&EplSource::Instances(params.clone()), &params)?.best_classifier())
    } else {
        None
    };
    let mut rows = Vec::new();
    for inst in &instances {
        let opt = runner.exact(&inst.params).with_context(|| format!("exact on {}", inst.name))?;
        for &kind in policies {
            let policy: Arc<dyn Policy> = match (kind, &epl) {
                (PolicyKind::Exact, _) => Arc::new(opt.policy.clone()),
                (PolicyKind::Epl, Some(c)) => Arc::new(dualsource::policy::Cached::new(c.bind(&inst.params)?)),
                _ => runner.build(kind, &inst.params).with_context(|| format!("{kind} on {}", inst.name))?.policy,
            };
            let (mean, half) = if simulate {
                let e = runner.evaluate(&inst.params, &policy)?;
                (e.mean, e.half_width)
            } else {
                (runner.exact_cost(&inst.params, &policy)?, 0.0)
            };
            let gap = optimality_gap(mean, opt.g)?;
            println!("{} {kind}: cost {mean:.6} gap {gap:.3}%", inst.name);
            rows.push(GapRow {
                instance: inst.name.clone(),
                policy: kind.to_string(),
                mean_cost: mean,
                half_width: half,
                gap_pct: Some(gap),
            });
        }
    }
    write_gaps_csv(&mut common.out_file("gaps.csv")?, &rows)?;
    Ok(())
}

fn list_instances(set: Option<&str>) -> Result<()> {
    match set {
        Some(s) => {
            for inst in instance_set(s, 1000.0)? {
                let p = &inst.params;
                println!(
                    "{}: N {} S {} mu_c {} mu_a {} l_c {} l_a {}",
                    inst.name, p.installed_base, p.max_circulating, p.cm.failure_mean, p.am.failure_mean, p.cm.lead_time,
                    p.am.lead_time
                );
            }
        }
        None => {
            for name in library::names() {
                match library::bundled(&name) {
                    Ok(b) => println!("{}: {}", b.name, b.description),
                    Err(_) => println!("{name}: price ratios of five valve items; use --instance-set energy"),
                }
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::ListInstances { instance_set } => list_instances(instance_set.as_deref()),
        Command::SolveExact(c) => build_each(c, PolicyKind::Exact),
        Command::SolveBsp(c) => build_each(c, PolicyKind::Bsp),
        Command::RunIwa(c) => run_iwa(c),
        Command::TrainAvi(c) => build_each(c, PolicyKind::Avi),
        Command::TrainDcl(c) => build_each(c, PolicyKind::Dcl),
        Command::TrainEpl { common, kappa } => train_epl(common, *kappa),
        Command::Evaluate { common, policy } => evaluate(common, policy),
        Command::Gaps {
            common,
            policies,
            simulate,
        } => gaps(common, policies, *simulate),
    }
}
