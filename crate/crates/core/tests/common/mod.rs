//! Invariant checks shared by the property suite and the acceptance run.
#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dualsource::demand::failure_pmf;
use dualsource::dynamics::transition;
use dualsource::exact::{policy_iteration, simplify_params, ExactPolicy, SimplifiedModel, SimplifiedPolicy, SolverConfig};
use dualsource::heuristics::{gamma_from_rho, rho_from_gamma, BaseStockPolicy, DualIndexParams, DualIndexPolicy};
use dualsource::learning::{Classifier, DecisionGrid, FeatureSchema, LinearVfa, Mlp, VfaPolicy};
use dualsource::policy::NeverOrder;
use dualsource::sim::{run_replications, EvalConfig};
use dualsource::state::{backorders, feasible_decisions, inventory_position, is_feasible};
use dualsource::{DemandFamily, FailureRealization, InstanceParams, Model, ModeParams, Policy, Source, SystemState};

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// N=2, S=2, l_C=2, l_A=1, Q_C=1, Poisson demand.
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
        holding_cost: 1.0,
        backorder_cost: 200.0,
        demand: DemandFamily::Poisson,
    }
}

/// A small random instance with AM no slower than CM.
pub fn random_params(rng: &mut (impl Rng + rand::RngCore)) -> InstanceParams {
    let demand = if rng.random_bool(0.5) {
        DemandFamily::Poisson
    } else {
        DemandFamily::NegativeBinomial
    };
    let mode = |rng: &mut dyn rand::RngCore, lead_time: usize| {
        let mean = rng.random_range(0.005..0.4);
        let var = match demand {
            DemandFamily::Poisson => mean,
            DemandFamily::NegativeBinomial => mean * rng.random_range(1.0..4.0),
        };
        ModeParams {
            failure_mean: mean,
            failure_var: var,
            lead_time,
            unit_price: rng.random_range(1.0..1000.0),
            order_cost: rng.random_range(0.0..100.0),
        }
    };
    let l_c = rng.random_range(1..=6);
    let l_a = rng.random_range(1..=l_c);
    let cm = mode(rng, l_c);
    let am = mode(rng, l_a);
    InstanceParams {
        installed_base: rng.random_range(1..=8),
        max_circulating: rng.random_range(0..=10),
        cm,
        am,
        batch_size: rng.random_range(1..=4),
        maintenance_cost: rng.random_range(0.0..500.0),
        holding_cost: rng.random_range(0.0..50.0),
        backorder_cost: rng.random_range(0.0..5000.0),
        demand,
    }
}

/// Failures of each mode, at most the installed count, often more than one.
pub fn random_failures(state: &SystemState, rng: &mut impl Rng) -> FailureRealization {
    FailureRealization {
        cm: rng.random_range(0..=state.cm_installed),
        am: rng.random_range(0..=state.am_installed),
    }
}

/// `count` states visited by a walk under random feasible orders and
/// random failures, restarting from the initial state now and then.
pub fn random_states(params: &InstanceParams, count: usize, rng: &mut impl Rng) -> Vec<SystemState> {
    let mut out = Vec::with_capacity(count);
    let mut s = SystemState::initial(params);
    while out.len() < count {
        if rng.random_bool(0.01) {
            s = SystemState::initial(params);
        }
        let options = feasible_decisions(&s, params);
        let d = options[rng.random_range(0..options.len())];
        let f = random_failures(&s, rng);
        s = transition(&s, d, f, params).expect("walk stays valid");
        out.push(s.clone());
    }
    out
}

/// Conservation `n_C + n_A + B = N` and IP balance
/// `IP' = IP + ordered items - failures` over one transition.
pub fn check_transition(
    params: &InstanceParams,
    s: &SystemState,
    d: dualsource::Decision,
    f: FailureRealization,
) -> Check {
    let next = transition(s, d, f, params).map_err(|e| e.to_string())?;
    let n = next.cm_installed + next.am_installed + backorders(&next, params);
    if n != params.installed_base {
        return Err(format!("conservation broken: {n} != {} after {s} {d}", params.installed_base));
    }
    let expect = inventory_position(s, params) + d.items(params) as i64 - f.total() as i64;
    if inventory_position(&next, params) != expect {
        return Err(format!("IP balance broken after {s} {d} {f:?}: {} vs {expect}", inventory_position(&next, params)));
    }
    Ok(())
}

/// `transitions` random transitions spread over fresh random instances.
pub fn conservation_and_balance(seed: u64, transitions: usize) -> Check {
    let mut r = rng(seed);
    let mut done = 0;
    while done < transitions {
        let p = random_params(&mut r);
        let mut s = SystemState::initial(&p);
        for _ in 0..1000.min(transitions - done) {
            let options = feasible_decisions(&s, &p);
            let d = options[r.random_range(0..options.len())];
            let f = random_failures(&s, &mut r);
            check_transition(&p, &s, d, f)?;
            s = transition(&s, d, f, &p).unwrap();
            done += 1;
        }
    }
    Ok(())
}

pub fn check_pmf(n: u32, mean: f64, var_factor: f64, family: DemandFamily) -> Check {
    let var = match family {
        DemandFamily::Poisson => mean,
        DemandFamily::NegativeBinomial => mean * var_factor,
    };
    let pmf = failure_pmf(n, mean, var, family).map_err(|e| e.to_string())?;
    let total: f64 = pmf.iter().sum();
    if pmf.len() != n as usize + 1 || pmf.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (total - 1.0).abs() > 1e-12 {
        return Err(format!("pmf n={n} mean={mean} var={var} {family:?} sums to {total:e} - 1 off"));
    }
    Ok(())
}

pub fn pmf_normalization(seed: u64, draws: usize) -> Check {
    let mut r = rng(seed);
    for _ in 0..draws {
        let family = if r.random_bool(0.5) {
            DemandFamily::Poisson
        } else {
            DemandFamily::NegativeBinomial
        };
        check_pmf(r.random_range(0..=60), r.random_range(1e-4..3.0), r.random_range(1.0 + 1e-9..6.0), family)?;
    }
    Ok(())
}

pub fn check_gamma_rho(gamma: f64, mu_c: f64, mu_a: f64) -> Check {
    let rho = rho_from_gamma(gamma, mu_c, mu_a);
    let back = gamma_from_rho(rho, mu_c, mu_a);
    if (back - gamma).abs() > 1e-12 {
        return Err(format!("gamma {gamma} -> rho {rho} -> {back} (mu_c {mu_c}, mu_a {mu_a})"));
    }
    Ok(())
}

pub fn gamma_rho_inverse(seed: u64, draws: usize) -> Check {
    let mut r = rng(seed);
    for _ in 0..draws {
        check_gamma_rho(r.random_range(0.0..=1.0), r.random_range(1e-3..1.0), r.random_range(1e-3..1.0))?;
    }
    Ok(())
}

/// Every policy family built for `params`, with its name.
pub fn policies_for(params: &InstanceParams, rng: &mut impl Rng) -> Vec<(&'static str, Arc<dyn Policy>)> {
    let source = if rng.random_bool(0.5) { Source::Cm } else { Source::Am };
    let level = rng.random_range(0..=params.max_circulating + 2);
    let di = DualIndexParams {
        z_a: rng.random_range(0..=params.max_circulating + 2),
        delta: rng.random_range(0..=4),
    };
    let schema = FeatureSchema::for_instance(params);
    let grid = DecisionGrid::for_instance(params);
    let net = Mlp::new(&[schema.len(), 8, grid.len()], rng.random()).unwrap();
    let classifier = Arc::new(Classifier::new(net, schema, grid).unwrap());
    let mut vfa = LinearVfa::zero(LinearVfa::schema_for(params), 0.99);
    vfa.weights.iter_mut().for_each(|w| *w = rng.random_range(-1000.0..1000.0));
    vec![
        ("never", Arc::new(NeverOrder)),
        ("bsp", Arc::new(BaseStockPolicy::new(source, level, params))),
        ("dual-index", Arc::new(DualIndexPolicy::new(di, params))),
        ("dcl", Arc::new(classifier.bind(params).unwrap())),
        ("avi", Arc::new(VfaPolicy::new(vfa, params).unwrap())),
    ]
}

pub fn check_feasible(name: &str, policy: &dyn Policy, params: &InstanceParams, states: &[SystemState]) -> Check {
    for s in states {
        let d = policy.decide(s);
        if !is_feasible(d, s, params) {
            return Err(format!("{name} ordered {d} in {s}, budget exceeded"));
        }
    }
    Ok(())
}

/// The tabular policies of the micro instance: exact and single-rate.
pub fn micro_tabular() -> Vec<(&'static str, Arc<dyn Policy>)> {
    let p = micro();
    let cfg = SolverConfig::default();
    let exact = policy_iteration(&Model::new(p.clone()).unwrap(), &cfg).unwrap();
    let single = SimplifiedModel::new(simplify_params(&p, 0.3).unwrap()).unwrap();
    let simplified = policy_iteration(&single, &cfg).unwrap();
    vec![
        ("exact", Arc::new(ExactPolicy::new(&exact))),
        ("iwa-inner", Arc::new(SimplifiedPolicy::new(&simplified))),
    ]
}

/// `states` random states in total, split over random instances and the
/// micro instance, checked against every policy family.
pub fn decision_feasibility(seed: u64, states: usize) -> Check {
    let mut r = rng(seed);
    let per = 500;
    let mut done = 0;
    let tabular = micro_tabular();
    while done < states {
        let (p, policies) = if (done / per) % 4 == 3 {
            let p = micro();
            let mut pols = policies_for(&p, &mut r);
            pols.extend(tabular.iter().cloned());
            (p, pols)
        } else {
            let p = random_params(&mut r);
            let pols = policies_for(&p, &mut r);
            (p, pols)
        };
        let batch = random_states(&p, per.min(states - done), &mut r);
        for (name, pol) in &policies {
            check_feasible(name, pol.as_ref(), &p, &batch)?;
        }
        done += batch.len();
    }
    Ok(())
}

/// Two runs under one seed agree bit for bit.
pub fn crn_determinism(params: &InstanceParams, seed: u64) -> Check {
    let model = Model::new(params.clone()).map_err(|e| e.to_string())?;
    let policy = BaseStockPolicy::new(Source::Cm, params.max_circulating, params);
    let cfg = EvalConfig {
        replications: 3,
        periods: 2000,
        warmup: 100,
        seed,
    };
    let a = run_replications(&model, &policy, &cfg).map_err(|e| e.to_string())?;
    let b = run_replications(&model, &policy, &cfg).map_err(|e| e.to_string())?;
    let bits = |xs: &[dualsource::sim::EpisodeStats]| xs.iter().map(|s| s.cost.total().to_bits()).collect::<Vec<_>>();
    if a != b || bits(&a) != bits(&b) {
        return Err(format!("reruns differ under seed {seed}"));
    }
    Ok(())
}
