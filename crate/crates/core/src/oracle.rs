//! Exhaustive ground truth at small `(N, q)`.
//!
//! One depth-first walk over the prefix tree of `[N]^q` visits every input
//! sequence. All sequences are equally likely under `Q` (with replacement);
//! under `P` (without replacement) exactly the sequences of distinct symbols
//! are, so the `P` statistics are accumulated on the distinct-prefix subtree
//! during the same walk. Everything is tallied as integer counts and turned
//! into probabilities only when divergences are evaluated.
//!
//! The walk is split by first symbol across rayon workers; tallies merge by
//! addition.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::bounds::{step_information_bound, COMPARISON_TOLERANCE};
use crate::entropy::{kl_divergence, FiniteDistribution, JointCounts};
use crate::error::{Error, Result};
use crate::model::{checked_step, MemoryProfile, StreamAlgorithm, StreamState};

/// Default cap on `N^q`, the number of leaves walked.
pub const ENUMERATION_CAP: u128 = 10_000_000;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub algorithm: String,
    pub profile: MemoryProfile,
    /// Final-state distribution under sampling without replacement.
    pub p_out: FiniteDistribution<StreamState>,
    /// Final-state distribution under sampling with replacement.
    pub q_out: FiniteDistribution<StreamState>,
    pub kl_exact: f64,
    /// `mi_per_step[j] = I(X_{j+1}; S_j)` under `P`, for `j = 0..q`.
    pub mi_per_step: Vec<f64>,
    /// `mi_state[i] = I(X_1..X_i; S_i)` under `P`, for `i = 0..=q`.
    pub mi_state: Vec<f64>,
    /// Sequences with decision bit 1 / total sequences, under `P`.
    pub p_accept_count: (u64, u64),
    /// Sequences with decision bit 1 / total sequences, under `Q`.
    pub q_accept_count: (u64, u64),
}

impl OracleResult {
    pub fn n(&self) -> u64 {
        self.profile.n()
    }

    pub fn q(&self) -> usize {
        self.profile.q()
    }

    pub fn p_accept(&self) -> f64 {
        self.p_accept_count.0 as f64 / self.p_accept_count.1 as f64
    }

    pub fn q_accept(&self) -> f64 {
        self.q_accept_count.0 as f64 / self.q_accept_count.1 as f64
    }

    pub fn mi_sum(&self) -> f64 {
        self.mi_per_step.iter().sum()
    }

    /// KL between the decision-bit distributions.
    pub fn decision_kl(&self) -> Result<f64> {
        let bit =
            |(hits, total): (u64, u64)| FiniteDistribution::from_counts(vec![(false, total - hits), (true, hits)]);
        kl_divergence(&bit(self.p_accept_count)?, &bit(self.q_accept_count)?)
    }

    /// Exact total variation between the final-state distributions.
    pub fn total_variation(&self) -> f64 {
        // P's support is contained in Q's, so walking Q's outcomes covers both
        let p: HashMap<&StreamState, f64> = self
            .p_out
            .outcomes()
            .iter()
            .zip(self.p_out.probs().iter().copied())
            .collect();
        let sum: f64 = self
            .q_out
            .outcomes()
            .iter()
            .zip(self.q_out.probs())
            .map(|(s, &q)| (p.get(s).copied().unwrap_or(0.0) - q).abs())
            .sum();
        0.5 * sum
    }

    pub fn describe(&self) -> String {
        format!(
            "algorithm {} with N = {}, profile ({})",
            self.algorithm,
            self.n(),
            self.profile
        )
    }
}

#[derive(Default)]
struct Tally {
    q_final: HashMap<StreamState, u64>,
    p_final: HashMap<StreamState, u64>,
    /// Per depth `d`: counts of `(x_{d+1}, state_d)` over distinct prefixes.
    step_joint: Vec<HashMap<(u64, StreamState), u64>>,
    /// Per depth `i`: counts of `(prefix code, state_i)` over distinct prefixes.
    prefix_joint: Vec<JointCounts<u64, StreamState>>,
}

impl Tally {
    fn new(q: usize) -> Self {
        Self {
            step_joint: vec![HashMap::new(); q],
            prefix_joint: (0..=q).map(|_| JointCounts::new()).collect(),
            ..Default::default()
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (s, c) in other.q_final {
            *self.q_final.entry(s).or_insert(0) += c;
        }
        for (s, c) in other.p_final {
            *self.p_final.entry(s).or_insert(0) += c;
        }
        for (mine, theirs) in self.step_joint.iter_mut().zip(other.step_joint) {
            for (k, c) in theirs {
                *mine.entry(k).or_insert(0) += c;
            }
        }
        for (mine, theirs) in self.prefix_joint.iter_mut().zip(other.prefix_joint) {
            mine.merge(theirs);
        }
        self
    }
}

struct Walker<'a, A: ?Sized> {
    alg: &'a A,
    n: u64,
    q: usize,
}

impl<A: StreamAlgorithm + ?Sized> Walker<'_, A> {
    /// Expands the node at `depth` holding `state` after reading `prefix`.
    fn walk(
        &self,
        depth: usize,
        state: &StreamState,
        prefix: &mut Vec<u64>,
        code: u64,
        distinct: bool,
        tally: &mut Tally,
    ) -> Result<()> {
        if depth == self.q {
            *tally.q_final.entry(state.clone()).or_insert(0) += 1;
            if distinct {
                *tally.p_final.entry(state.clone()).or_insert(0) += 1;
            }
            return Ok(());
        }
        for x in 1..=self.n {
            self.visit(depth, state, x, prefix, code, distinct, tally)?;
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn visit(
        &self,
        depth: usize,
        state: &StreamState,
        x: u64,
        prefix: &mut Vec<u64>,
        code: u64,
        distinct: bool,
        tally: &mut Tally,
    ) -> Result<()> {
        let child = checked_step(self.alg, depth + 1, state, x)?;
        let child_distinct = distinct && !prefix.contains(&x);
        let child_code = code * self.n + (x - 1);
        if child_distinct {
            *tally.step_joint[depth].entry((x, state.clone())).or_insert(0) += 1;
            tally.prefix_joint[depth + 1].add(child_code, child.clone(), 1);
        }
        prefix.push(x);
        let out = self.walk(depth + 1, &child, prefix, child_code, child_distinct, tally);
        prefix.pop();
        out
    }
}

fn sorted_counts(map: HashMap<StreamState, u64>) -> Vec<(StreamState, u64)> {
    let mut v: Vec<_> = map.into_iter().collect();
    v.sort_unstable();
    v
}

fn step_information(cells: HashMap<(u64, StreamState), u64>) -> f64 {
    let mut joint = JointCounts::new();
    for ((x, state), c) in cells {
        joint.add(x, state, c);
    }
    joint.mutual_information()
}

/// Exact output distributions and information profile of `alg` under both
/// sources, by walking all `N^q` inputs.
pub fn enumerate_distributions<A: StreamAlgorithm + ?Sized>(alg: &A, cap: u128) -> Result<OracleResult> {
    let profile = alg.profile().clone();
    let (n, q) = (profile.n(), profile.q());
    let leaves = (n as u128).checked_pow(q as u32).unwrap_or(u128::MAX);
    if leaves > cap {
        return Err(Error::CapExceeded {
            what: "exhaustive enumeration",
            size: leaves,
            cap,
        });
    }
    let walker = Walker { alg, n, q };
    let root = StreamState::empty();
    let tally = (1..=n)
        .into_par_iter()
        .map(|x| {
            let mut tally = Tally::new(q);
            let mut prefix = Vec::with_capacity(q);
            walker.visit(0, &root, x, &mut prefix, 0, true, &mut tally)?;
            Ok(tally)
        })
        .try_reduce(|| Tally::new(q), |a, b| Ok(a.merge(b)))?;

    let p_counts = sorted_counts(tally.p_final);
    let q_counts = sorted_counts(tally.q_final);
    let accepted = |counts: &[(StreamState, u64)]| {
        let hits = counts.iter().filter(|(s, _)| alg.output_bit(s)).map(|(_, c)| c).sum();
        let total = counts.iter().map(|(_, c)| c).sum();
        (hits, total)
    };
    let p_accept_count = accepted(&p_counts);
    let q_accept_count = accepted(&q_counts);

    let p_out = FiniteDistribution::from_counts(p_counts)?;
    let q_out = FiniteDistribution::from_counts(q_counts)?;
    let kl_exact = kl_divergence(&p_out, &q_out).map_err(|e| match e {
        Error::AbsoluteContinuity(s) => Error::Internal(format!(
            "final state {s} reachable without replacement but not with replacement"
        )),
        other => other,
    })?;

    let mi_per_step = tally.step_joint.into_iter().map(step_information).collect();
    let mi_state = tally.prefix_joint.iter().map(JointCounts::mutual_information).collect();

    Ok(OracleResult {
        algorithm: alg.name().to_string(),
        profile,
        p_out,
        q_out,
        kl_exact,
        mi_per_step,
        mi_state,
        p_accept_count,
        q_accept_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
}

/// Both sides of `KL(P_A || Q_A) <= sum_i I(X_i; S_{i-1})`.
pub fn decomposition(result: &OracleResult) -> Verdict {
    let (lhs, rhs) = (result.kl_exact, result.mi_sum());
    Verdict {
        lhs,
        rhs,
        slack: rhs - lhs,
    }
}

/// Checks `KL(P_A || Q_A) <= sum_i I(X_i; S_{i-1})` and returns the slack.
pub fn verify_kl_decomposition(result: &OracleResult) -> Result<Verdict> {
    let v = decomposition(result);
    if v.slack < -COMPARISON_TOLERANCE {
        return Err(Error::Violation {
            check: "KL decomposition",
            detail: format!(
                "{}: KL = {} > sum of step informations {}",
                result.describe(),
                v.lhs,
                v.rhs
            ),
        });
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepVerdict {
    /// Depth `i`: the state `S_i` against the next symbol `X_{i+1}`.
    pub step: usize,
    /// `I(X_{i+1}; S_i)`.
    pub information: f64,
    /// Bound evaluated at the exact `I(X_1..X_i; S_i)`.
    pub bound: f64,
    /// Bound evaluated at `s_i ln 2`.
    pub memory_bound: f64,
}

impl StepVerdict {
    pub fn slack(&self) -> f64 {
        self.bound - self.information
    }

    pub fn memory_slack(&self) -> f64 {
        self.memory_bound - self.information
    }
}

/// Per-step information against its bound at every depth `0..q`, both at
/// the exact prefix information and at the memory budget `s_i ln 2`.
pub fn bottleneck_steps(result: &OracleResult) -> Result<Vec<StepVerdict>> {
    let n = result.n();
    (0..result.q())
        .map(|i| {
            let budget = result.profile.width(i) as f64 * std::f64::consts::LN_2;
            Ok(StepVerdict {
                step: i,
                information: result.mi_per_step[i],
                bound: step_information_bound(n, i as u64, result.mi_state[i])?,
                memory_bound: step_information_bound(n, i as u64, budget)?,
            })
        })
        .collect()
}

pub fn verify_bottleneck(result: &OracleResult) -> Result<Vec<StepVerdict>> {
    let steps = bottleneck_steps(result)?;
    if let Some(v) = steps
        .iter()
        .find(|v| v.slack() < -COMPARISON_TOLERANCE || v.memory_slack() < -COMPARISON_TOLERANCE)
    {
        return Err(Error::Violation {
            check: "per-step information bound",
            detail: format!(
                "{} at depth {}: I = {}, bound {}, budget bound {}",
                result.describe(),
                v.step,
                v.information,
                v.bound,
                v.memory_bound
            ),
        });
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::build_collision_algorithm;
    use crate::model::ConstantAlgorithm;

    #[test]
    fn constant_algorithm_is_silent() {
        let alg = ConstantAlgorithm::new(MemoryProfile::new(4, vec![2, 2, 1]).unwrap());
        let r = enumerate_distributions(&alg, ENUMERATION_CAP).unwrap();
        assert_eq!(r.kl_exact, 0.0);
        assert!(r.mi_per_step.iter().all(|&m| m == 0.0));
        assert!(r.mi_state.iter().all(|&m| m == 0.0));
        let v = verify_kl_decomposition(&r).unwrap();
        assert_eq!(v.slack, 0.0);
    }

    #[test]
    fn collision_two_steps() {
        let alg = build_collision_algorithm(&MemoryProfile::new(4, vec![3, 1]).unwrap()).unwrap();
        let r = enumerate_distributions(&alg, ENUMERATION_CAP).unwrap();
        assert!((r.kl_exact - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        assert_eq!(r.p_accept_count, (0, 12));
        assert_eq!(r.q_accept_count, (4, 16));
        // denominators: falling factorial and N^q
        assert_eq!(r.mi_per_step[0], 0.0);
        let v = verify_kl_decomposition(&r).unwrap();
        // tight: the final state is a function of the collision event
        assert!(v.slack.abs() < 1e-12);
        assert!((v.rhs - r.mi_per_step[1]).abs() < 1e-15);
        verify_bottleneck(&r).unwrap();
    }

    #[test]
    fn cap_is_enforced() {
        let alg = ConstantAlgorithm::new(MemoryProfile::new(64, vec![1; 5]).unwrap());
        assert!(matches!(
            enumerate_distributions(&alg, ENUMERATION_CAP),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn violation_is_reported() {
        let alg = build_collision_algorithm(&MemoryProfile::new(4, vec![3, 1]).unwrap()).unwrap();
        let mut r = enumerate_distributions(&alg, ENUMERATION_CAP).unwrap();
        r.kl_exact += 1.0;
        let err = verify_kl_decomposition(&r).unwrap_err();
        assert!(err.to_string().contains("collision"));
    }
}
