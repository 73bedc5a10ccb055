use std::f64::consts::LN_2;

use switchlab::collision::build_collision_algorithm;
use switchlab::model::{
    random_algorithm, ConstantAlgorithm, MemoryProfile, StreamAlgorithm, StreamState, RANDOM_TABLE_CAP,
};
use switchlab::monte_carlo::{estimate_accept, Source};
use switchlab::oracle::{
    enumerate_distributions, verify_bottleneck, verify_kl_decomposition, OracleResult, ENUMERATION_CAP,
};
use switchlab::Error;

const TOL: f64 = 1e-9;

/// Stores `x_1 - 1` verbatim.
struct FirstSymbol {
    profile: MemoryProfile,
}

impl StreamAlgorithm for FirstSymbol {
    fn profile(&self) -> &MemoryProfile {
        &self.profile
    }

    fn step(&self, _i: usize, _state: &StreamState, x: u64) -> StreamState {
        StreamState::from_uint(2, x - 1)
    }
}

fn oracle(alg: &dyn StreamAlgorithm) -> OracleResult {
    enumerate_distributions(alg, ENUMERATION_CAP).unwrap()
}

fn random_suite(n: u64, widths: &[u32], seeds: std::ops::Range<u64>) -> Vec<OracleResult> {
    let profile = MemoryProfile::new(n, widths.to_vec()).unwrap();
    seeds
        .map(|seed| oracle(&random_algorithm(&profile, seed, RANDOM_TABLE_CAP).unwrap()))
        .collect()
}

#[test]
fn state_holding_first_symbol_carries_log_n() {
    let alg = FirstSymbol {
        profile: MemoryProfile::new(4, vec![2]).unwrap(),
    };
    let r = oracle(&alg);
    assert!((r.mi_state[1] - 4f64.ln()).abs() < 1e-12);
    assert_eq!(r.mi_state[0], 0.0);
    assert_eq!(r.kl_exact, 0.0);
}

#[test]
fn constant_algorithm_reports_zeros() {
    let r = oracle(&ConstantAlgorithm::new(MemoryProfile::new(5, vec![2, 1, 3]).unwrap()));
    assert_eq!(r.kl_exact, 0.0);
    assert!(r.mi_per_step.iter().chain(&r.mi_state).all(|&m| m == 0.0));
    assert_eq!(verify_kl_decomposition(&r).unwrap().slack, 0.0);
}

#[test]
fn random_table_regression_fixture() {
    // Values cross-checked by an independent brute force over these tables.
    let profile = MemoryProfile::new(4, vec![2, 2, 1]).unwrap();
    let alg = random_algorithm(&profile, 7, RANDOM_TABLE_CAP).unwrap();
    let render = |i| alg.table(i).iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
    assert_eq!(render(1), "00 00 10 10");
    assert_eq!(render(2), "10 01 00 11 01 11 00 01 10 01 01 10 01 00 01 00");
    assert_eq!(render(3), "0 1 0 0 0 0 1 0 0 1 1 0 1 0 0 1");
    let r = oracle(&alg);
    assert_eq!(r.p_accept_count, (9, 24));
    assert_eq!(r.q_accept_count, (24, 64));
    assert_eq!(r.kl_exact, 0.0);
    let per_step = [0.0, 0.05663301226513243, 0.15912854207370322];
    let state = [0.0, LN_2, 1.3296613488547582, 0.6615632381579821];
    for (a, b) in r.mi_per_step.iter().zip(per_step) {
        assert!((a - b).abs() < 1e-12);
    }
    for (a, b) in r.mi_state.iter().zip(state) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn collision_three_steps_passes_per_step_checks() {
    let alg = build_collision_algorithm(&MemoryProfile::new(4, vec![3, 5, 1]).unwrap()).unwrap();
    let r = oracle(&alg);
    assert_eq!(r.q_accept_count, (40, 64));
    assert_eq!(r.p_accept_count, (0, 24));
    let steps = verify_bottleneck(&r).unwrap();
    assert_eq!(steps.len(), 3);
    assert_eq!((steps[0].information, steps[0].bound), (0.0, 0.0));
    verify_kl_decomposition(&r).unwrap();
}

#[test]
fn falsified_result_is_reported() {
    let alg = build_collision_algorithm(&MemoryProfile::new(4, vec![3, 1]).unwrap()).unwrap();
    let mut r = oracle(&alg);
    r.kl_exact += 0.1;
    match verify_kl_decomposition(&r) {
        Err(Error::Violation { detail, .. }) => assert!(detail.contains("collision"), "{detail}"),
        other => panic!("expected violation, got {other:?}"),
    }
    let mut r = oracle(&alg);
    r.mi_per_step[1] = 10.0;
    assert!(matches!(verify_bottleneck(&r), Err(Error::Violation { .. })));
}

#[test]
fn data_processing_and_pinsker() {
    for r in random_suite(6, &[3, 3, 3], 0..40)
        .into_iter()
        .chain(random_suite(5, &[1, 2, 2, 1], 100..140))
    {
        let decision = r.decision_kl().unwrap();
        assert!(decision <= r.kl_exact + TOL, "{}", r.describe());
        assert!(r.total_variation() <= (r.kl_exact / 2.0).sqrt() + TOL);
    }
}

#[test]
fn state_information_limited_by_width_and_prefix_entropy() {
    for r in random_suite(6, &[2, 3, 4], 0..30) {
        let n = r.n();
        let mut falling = 1.0f64;
        for i in 0..=r.q() {
            if i > 0 {
                falling *= (n - i as u64 + 1) as f64;
            }
            let width_cap = r.profile.width(i) as f64 * LN_2;
            assert!(r.mi_state[i] <= width_cap + TOL);
            // the prefix itself is uniform over the falling factorial
            assert!(r.mi_state[i] <= falling.ln() + TOL);
        }
        assert_eq!(r.mi_per_step[0], 0.0);
    }
}

#[test]
fn sampled_acceptance_agrees_with_enumeration() {
    let profile = MemoryProfile::new(6, vec![3, 3, 3]).unwrap();
    let (mut trials, mut agree) = (0, 0);
    for alg_seed in 0..4u64 {
        let alg = random_algorithm(&profile, alg_seed, RANDOM_TABLE_CAP).unwrap();
        let r = oracle(&alg);
        for seed in 0..50u64 {
            for (source, exact) in [
                (Source::WithoutReplacement, r.p_accept()),
                (Source::WithReplacement, r.q_accept()),
            ] {
                let e = estimate_accept(&alg, source, 4000, seed).unwrap();
                trials += 1;
                if e.within(exact, 5.0) {
                    agree += 1;
                }
            }
        }
    }
    assert!(agree as f64 >= 0.99 * trials as f64, "{agree}/{trials}");
}

#[test]
fn enumeration_cap() {
    let alg = ConstantAlgorithm::new(MemoryProfile::new(10, vec![1; 4]).unwrap());
    assert!(matches!(
        enumerate_distributions(&alg, 9999),
        Err(Error::CapExceeded { .. })
    ));
    assert!(enumerate_distributions(&alg, 10_000).is_ok());
}
