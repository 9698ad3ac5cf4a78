mod common;

use proptest::prelude::*;

use common::*;
use dualsource::state::feasible_decisions;
use dualsource::{DemandFamily, SystemState};

fn family() -> impl Strategy<Value = DemandFamily> {
    prop_oneof![Just(DemandFamily::Poisson), Just(DemandFamily::NegativeBinomial)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transitions_conserve_the_installed_base(seed in any::<u64>(), steps in 1usize..400) {
        let mut r = rng(seed);
        let p = random_params(&mut r);
        let mut s = SystemState::initial(&p);
        for _ in 0..steps {
            let options = feasible_decisions(&s, &p);
            let d = options[rand::Rng::random_range(&mut r, 0..options.len())];
            let f = random_failures(&s, &mut r);
            prop_assert_eq!(check_transition(&p, &s, d, f), Ok(()));
            s = dualsource::dynamics::transition(&s, d, f, &p).unwrap();
        }
    }

    #[test]
    fn failure_pmfs_sum_to_one(n in 0u32..80, mean in 1e-4f64..4.0, factor in 1.0f64..8.0, fam in family()) {
        prop_assert_eq!(check_pmf(n, mean, factor, fam), Ok(()));
    }

    #[test]
    fn gamma_and_rho_are_inverse(gamma in 0.0f64..=1.0, mu_c in 1e-3f64..1.0, mu_a in 1e-3f64..1.0) {
        prop_assert_eq!(check_gamma_rho(gamma, mu_c, mu_a), Ok(()));
    }

    #[test]
    fn every_policy_orders_feasibly(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_params(&mut r);
        let states = random_states(&p, 200, &mut r);
        for (name, pol) in policies_for(&p, &mut r) {
            prop_assert_eq!(check_feasible(name, pol.as_ref(), &p, &states), Ok(()));
        }
    }

    #[test]
    fn reruns_are_bit_identical(seed in any::<u64>(), inst in any::<u64>()) {
        let p = random_params(&mut rng(inst));
        prop_assert_eq!(crn_determinism(&p, seed), Ok(()));
    }
}

#[test]
fn tabular_policies_order_feasibly() {
    let p = micro();
    let states = random_states(&p, 2000, &mut rng(5));
    for (name, pol) in micro_tabular() {
        assert_eq!(check_feasible(name, pol.as_ref(), &p, &states), Ok(()));
    }
}

#[test]
fn full_size_suites_pass() {
    assert_eq!(conservation_and_balance(1, 100_000), Ok(()));
    assert_eq!(pmf_normalization(2, 1000), Ok(()));
    assert_eq!(gamma_rho_inverse(3, 1000), Ok(()));
    assert_eq!(decision_feasibility(4, 10_000), Ok(()));
}
