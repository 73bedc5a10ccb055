use std::collections::HashMap;

use switchlab::model::{draw_with_replacement, draw_without_replacement, sample_without_replacement, seeded_rng};

const TRIALS: u64 = 1_000_000;

fn assert_uniform(counts: &HashMap<Vec<u64>, u64>, cells: u64) {
    assert_eq!(counts.len() as u64, cells);
    let p = 1.0 / cells as f64;
    let mean = TRIALS as f64 * p;
    let sigma = (TRIALS as f64 * p * (1.0 - p)).sqrt();
    for (k, &c) in counts {
        assert!((c as f64 - mean).abs() <= 5.0 * sigma, "{k:?}: {c} vs {mean}");
    }
}

#[test]
fn ordered_pairs_without_replacement_are_uniform() {
    let mut rng = seeded_rng(42);
    let mut counts = HashMap::new();
    for _ in 0..TRIALS {
        *counts.entry(draw_without_replacement(3, 2, &mut rng)).or_insert(0) += 1;
    }
    // all six ordered pairs of distinct symbols
    assert_uniform(&counts, 6);
    assert!(counts.keys().all(|k| k[0] != k[1]));
}

#[test]
fn pairs_with_replacement_are_uniform() {
    let mut rng = seeded_rng(43);
    let mut counts = HashMap::new();
    for _ in 0..TRIALS {
        *counts.entry(draw_with_replacement(3, 2, &mut rng)).or_insert(0) += 1;
    }
    assert_uniform(&counts, 9);
}

#[test]
fn positions_are_uniform_for_larger_alphabets() {
    let (n, q) = (10u64, 4usize);
    let mut rng = seeded_rng(44);
    let mut by_position = vec![vec![0u64; n as usize]; q];
    for _ in 0..TRIALS / 4 {
        for (pos, x) in draw_without_replacement(n, q, &mut rng).into_iter().enumerate() {
            by_position[pos][(x - 1) as usize] += 1;
        }
    }
    let trials = (TRIALS / 4) as f64;
    let p = 1.0 / n as f64;
    let sigma = (trials * p * (1.0 - p)).sqrt();
    for counts in by_position {
        for c in counts {
            assert!((c as f64 - trials * p).abs() <= 5.0 * sigma);
        }
    }
}

#[test]
fn seeded_samples_replay() {
    assert_eq!(
        sample_without_replacement(1 << 20, 64, 9).unwrap(),
        sample_without_replacement(1 << 20, 64, 9).unwrap()
    );
    assert!(sample_without_replacement(5, 5, 1).is_err());
    assert!(sample_without_replacement(5, 0, 1).is_err());
}
