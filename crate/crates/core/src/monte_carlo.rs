//! Sampled acceptance probabilities for instances too large to enumerate.
//!
//! Samples are drawn in fixed-size blocks. Block `b` of source `src` runs on
//! its own ChaCha8 stream derived from `(seed, src, b)`, so results do not
//! depend on how many worker threads process the blocks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{draw_with_replacement, draw_without_replacement, run_stream, StreamAlgorithm};

const BLOCK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    /// Uniform without replacement (`P`).
    WithoutReplacement,
    /// Uniform with replacement (`Q`).
    WithReplacement,
}

impl Source {
    pub fn label(self) -> &'static str {
        match self {
            Source::WithoutReplacement => "P",
            Source::WithReplacement => "Q",
        }
    }

    fn stream_tag(self) -> u64 {
        match self {
            Source::WithoutReplacement => 0,
            Source::WithReplacement => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl Estimate {
    fn bernoulli(hits: u64, samples: u64, seed: u64) -> Self {
        let value = hits as f64 / samples as f64;
        Self {
            value,
            stderr: (value * (1.0 - value) / samples as f64).sqrt(),
            samples,
            seed,
        }
    }

    /// `|value - target| <= k * stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }
}

fn block_rng(seed: u64, source: Source, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block * 2 + source.stream_tag());
    rng
}

/// Fraction of sampled input sequences on which `alg` outputs 1.
pub fn estimate_accept<A: StreamAlgorithm + ?Sized>(
    alg: &A,
    source: Source,
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    if samples == 0 {
        return Err(Error::Precondition("at least one sample is required".into()));
    }
    let (n, q) = (alg.profile().n(), alg.profile().q());
    let blocks = samples.div_ceil(BLOCK);
    let hits = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, source, b);
            let count = BLOCK.min(samples - b * BLOCK);
            let mut hits = 0u64;
            for _ in 0..count {
                let xs = match source {
                    Source::WithoutReplacement => draw_without_replacement(n, q, &mut rng),
                    Source::WithReplacement => draw_with_replacement(n, q, &mut rng),
                };
                if alg.output_bit(&run_stream(alg, &xs)?) {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(Estimate::bernoulli(hits, samples, seed))
}

/// `|P[A=1] - Q[A=1]|` on the decision bit, with the two estimates'
/// standard errors combined in quadrature.
pub fn estimate_tv_advantage<A: StreamAlgorithm + ?Sized>(alg: &A, samples: u64, seed: u64) -> Result<Estimate> {
    let p = estimate_accept(alg, Source::WithoutReplacement, samples, seed)?;
    let q = estimate_accept(alg, Source::WithReplacement, samples, seed)?;
    Ok(Estimate {
        value: (p.value - q.value).abs(),
        stderr: p.stderr.hypot(q.stderr),
        samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::build_collision_algorithm;
    use crate::model::{ConstantAlgorithm, MemoryProfile};

    #[test]
    fn zero_samples_rejected() {
        let alg = ConstantAlgorithm::new(MemoryProfile::new(4, vec![1, 1]).unwrap());
        assert!(estimate_accept(&alg, Source::WithReplacement, 0, 1).is_err());
    }

    #[test]
    fn collision_never_fires_without_replacement() {
        let alg = build_collision_algorithm(&MemoryProfile::new(4, vec![3, 5, 1]).unwrap()).unwrap();
        let e = estimate_accept(&alg, Source::WithoutReplacement, 20_000, 5).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn tv_replays_and_matches_analytic() {
        let alg = build_collision_algorithm(&MemoryProfile::new(4, vec![3, 5, 1]).unwrap()).unwrap();
        let a = estimate_tv_advantage(&alg, 100_000, 11).unwrap();
        let b = estimate_tv_advantage(&alg, 100_000, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.within(5.0 / 8.0, 5.0), "{a:?}");
        let c = ConstantAlgorithm::new(MemoryProfile::new(4, vec![1, 1, 1]).unwrap());
        let e = estimate_tv_advantage(&c, 10_000, 3).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn partial_last_block() {
        let alg = ConstantAlgorithm::new(MemoryProfile::new(4, vec![1]).unwrap());
        let e = estimate_accept(&alg, Source::WithReplacement, 1500, 2).unwrap();
        assert_eq!(e.samples, 1500);
    }
}
