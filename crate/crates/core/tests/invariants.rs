use proptest::prelude::*;

use switchlab::bounds::{collision_exact_kl, step_information_bound};
use switchlab::collision::{build_collision_algorithm, derive_capacities};
use switchlab::entropy::{binary_entropy, binary_entropy_inverse, kl_divergence, FiniteDistribution};
use switchlab::model::{
    run_stream, sample_with_replacement, sample_without_replacement, symbol_bits, MemoryProfile, StreamAlgorithm,
};

fn profile_strategy(widths: std::ops::Range<u32>) -> impl Strategy<Value = MemoryProfile> {
    (3u64..5000).prop_flat_map(move |n| {
        let q_max = (n - 1).min(12) as usize;
        prop::collection::vec(widths.clone(), 1..=q_max).prop_map(move |w| MemoryProfile::new(n, w).unwrap())
    })
}

proptest! {
    #[test]
    fn normalization_is_idempotent_and_capped(p in profile_strategy(0..200)) {
        let once = p.normalized();
        prop_assert_eq!(once.normalized(), once.clone());
        let w = symbol_bits(p.n());
        let mut prev = 0;
        for (raw, norm) in p.widths().iter().zip(once.widths()) {
            prop_assert!(norm <= raw);
            prop_assert!(*norm <= prev + w);
            prev = *norm;
        }
    }

    #[test]
    fn kl_is_nonnegative(weights in prop::collection::vec((0u32..50, 1u32..50), 1..12)) {
        let outcomes: Vec<usize> = (0..weights.len()).collect();
        let p = FiniteDistribution::from_counts(outcomes.iter().copied().zip(weights.iter().map(|w| w.0 as u64)));
        prop_assume!(p.is_ok());
        let q = FiniteDistribution::from_counts(outcomes.iter().copied().zip(weights.iter().map(|w| w.1 as u64))).unwrap();
        prop_assert!(kl_divergence(&p.unwrap(), &q).unwrap() >= 0.0);
    }

    #[test]
    fn samples_without_replacement_are_distinct(n in 2u64..1_000_000, q in 1usize..200, seed: u64) {
        prop_assume!((q as u64) < n);
        let xs = sample_without_replacement(n, q, seed).unwrap();
        prop_assert_eq!(xs.len(), q);
        let mut sorted = xs.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), q);
        prop_assert!(xs.iter().all(|&x| (1..=n).contains(&x)));
        prop_assert!(sample_with_replacement(n, q, seed).unwrap().iter().all(|&x| (1..=n).contains(&x)));
    }

    #[test]
    fn step_bound_grows_with_information(n in 2u64..100_000, frac in 0.0f64..1.0, a in 0.0f64..50.0, b in 0.0f64..50.0) {
        let i = ((n - 1) as f64 * frac) as u64;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let at_lo = step_information_bound(n, i, lo).unwrap();
        let at_hi = step_information_bound(n, i, hi).unwrap();
        prop_assert!(at_lo <= at_hi + 1e-12);
        prop_assert!(at_lo >= 0.0);
        prop_assert!(at_hi <= (n as f64).ln() + 1e-12);
    }

    #[test]
    fn collision_kl_dominates_linear_term(p in profile_strategy(1..200)) {
        let k = derive_capacities(&p).unwrap();
        let head = k.checked_prefix();
        let kl = collision_exact_kl(p.n(), head).unwrap();
        let linear: f64 = head.iter().map(|&k| k as f64 / p.n() as f64).sum();
        prop_assert!(kl >= linear - 1e-15);
    }

    #[test]
    fn collision_never_fires_on_distinct_symbols(p in profile_strategy(1..129), seed: u64) {
        let alg = build_collision_algorithm(&p).unwrap();
        let xs = sample_without_replacement(p.n(), p.q(), seed).unwrap();
        let out = run_stream(&alg, &xs).unwrap();
        prop_assert!(!alg.output_bit(&out));
    }

    #[test]
    fn entropy_inverse_round_trip(t in 0.0f64..std::f64::consts::LN_2) {
        let x = binary_entropy_inverse(t).unwrap();
        prop_assert!((0.0..=0.5).contains(&x));
        prop_assert!((binary_entropy(x).unwrap() - t).abs() <= 1e-10);
    }
}
