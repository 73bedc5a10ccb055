//! Numerical kernel: binary entropy and its inverse, the bottleneck
//! functions used by the per-step information bound, exact log-binomials,
//! and divergences over explicit finite distributions.
//!
//! All logarithms are natural; every quantity is in nats.

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Tolerance for probability vectors summing to one.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Inputs to [`phi`] / [`binary_entropy_inverse`] at most this far above
/// `ln 2` are treated as `ln 2`.
pub const LN2_CLAMP: f64 = 1e-12;

/// `x ln x` with the `0 ln 0 = 0` convention.
#[inline]
fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Binary entropy `h2(x) = -x ln x - (1-x) ln(1-x)` in nats.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain("binary_entropy", format!("x = {x} not in [0, 1]")));
    }
    Ok(-xlogx(x) - xlogx(1.0 - x))
}

/// Inverse of [`binary_entropy`] restricted to `[0, 1/2]`.
///
/// Bisection on `[0, 1/2]` run until the bracket cannot shrink further in
/// `f64`, which is well inside the `1e-12` target in `x`.
pub fn binary_entropy_inverse(t: f64) -> Result<f64> {
    let ln2 = std::f64::consts::LN_2;
    if t.is_nan() || t < 0.0 || t > ln2 + LN2_CLAMP {
        return Err(Error::domain(
            "binary_entropy_inverse",
            format!("t = {t} not in [0, ln 2]"),
        ));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if t >= ln2 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        // h2 is strictly increasing on [0, 1/2]
        if -xlogx(mid) - xlogx(1.0 - mid) < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h = |x: f64| -xlogx(x) - xlogx(1.0 - x);
    Ok(if (h(lo) - t).abs() <= (h(hi) - t).abs() { lo } else { hi })
}

/// `-(1-y) ln(1-y)` for `y <= 1`, with value 0 at `y = 1`.
pub fn complement_entropy(y: f64) -> Result<f64> {
    if y.is_nan() || y > 1.0 {
        return Err(Error::domain("complement_entropy", format!("y = {y} > 1")));
    }
    if y == 1.0 {
        return Ok(0.0);
    }
    Ok(-(1.0 - y) * (-y).ln_1p())
}

/// The bottleneck function: 0 for `t < 0`, otherwise
/// `complement_entropy(binary_entropy_inverse(t))` on `[0, ln 2]`.
///
/// Nondecreasing and convex.
pub fn phi(t: f64) -> Result<f64> {
    if t.is_nan() {
        return Err(Error::domain("phi", "t is NaN"));
    }
    if t < 0.0 {
        return Ok(0.0);
    }
    if t > std::f64::consts::LN_2 + LN2_CLAMP {
        return Err(Error::domain("phi", format!("t = {t} > ln 2")));
    }
    complement_entropy(binary_entropy_inverse(t)?)
}

/// Exact `ln C(n, i)` as a sum of logarithms.
pub fn log_binomial(n: u64, i: u64) -> Result<f64> {
    if i > n {
        return Err(Error::domain("log_binomial", format!("i = {i} > n = {n}")));
    }
    let k = i.min(n - i);
    let base = (n - k) as f64;
    Ok((1..=k).map(|j| ((base + j as f64) / j as f64).ln()).sum())
}

/// A probability vector over an explicit set of distinct outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution<L> {
    outcomes: Vec<L>,
    probs: Vec<f64>,
}

impl<L: Clone + Eq + Hash + Debug> FiniteDistribution<L> {
    pub fn new(outcomes: Vec<L>, probs: Vec<f64>) -> Result<Self> {
        if outcomes.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} outcomes but {} probabilities",
                outcomes.len(),
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| p.is_nan() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("negative or NaN probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        let mut seen = HashMap::with_capacity(outcomes.len());
        for o in &outcomes {
            if seen.insert(o, ()).is_some() {
                return Err(Error::InvalidDistribution(format!("duplicate outcome {o:?}")));
            }
        }
        Ok(Self { outcomes, probs })
    }

    /// Builds a distribution from exact integer counts; each probability is
    /// a single correctly rounded division.
    pub fn from_counts(counts: impl IntoIterator<Item = (L, u64)>) -> Result<Self> {
        let (outcomes, counts): (Vec<L>, Vec<u64>) = counts.into_iter().unzip();
        let total: u128 = counts.iter().map(|&c| c as u128).sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("all counts are zero".into()));
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Self::new(outcomes, probs)
    }

    pub fn uniform(outcomes: Vec<L>) -> Result<Self> {
        let n = outcomes.len();
        Self::new(outcomes, vec![1.0 / n as f64; n])
    }

    pub fn outcomes(&self) -> &[L] {
        &self.outcomes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, outcome: &L) -> f64 {
        self.outcomes
            .iter()
            .position(|o| o == outcome)
            .map_or(0.0, |i| self.probs[i])
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        -self.probs.iter().map(|&p| xlogx(p)).sum::<f64>()
    }

    /// Pushes the distribution forward through `map`, merging outcomes
    /// that collide.
    pub fn map<M: Clone + Eq + Hash + Debug>(&self, map: impl Fn(&L) -> M) -> FiniteDistribution<M> {
        let mut index: HashMap<M, usize> = HashMap::new();
        let mut outcomes = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        for (o, &p) in self.outcomes.iter().zip(&self.probs) {
            let m = map(o);
            match index.get(&m) {
                Some(&i) => probs[i] += p,
                None => {
                    index.insert(m.clone(), outcomes.len());
                    outcomes.push(m);
                    probs.push(p);
                }
            }
        }
        FiniteDistribution { outcomes, probs }
    }
}

/// `D(p || q) = sum p ln(p/q)` in nats.
///
/// Outcomes of `q` missing from `p` carry zero `p`-mass; outcomes of `p`
/// missing from `q` carry zero `q`-mass.
pub fn kl_divergence<L: Clone + Eq + Hash + Debug>(
    p: &FiniteDistribution<L>,
    q: &FiniteDistribution<L>,
) -> Result<f64> {
    let q_index: HashMap<&L, f64> = q.outcomes.iter().zip(q.probs.iter().copied()).collect();
    let mut acc = 0.0;
    for (o, &pp) in p.outcomes.iter().zip(&p.probs) {
        if pp == 0.0 {
            continue;
        }
        let qq = q_index.get(o).copied().unwrap_or(0.0);
        if qq == 0.0 {
            return Err(Error::AbsoluteContinuity(format!("{o:?}")));
        }
        acc += pp * (pp / qq).ln();
    }
    Ok(acc.max(0.0))
}

/// Dense joint distribution over `rows x cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution<R, C> {
    rows: Vec<R>,
    cols: Vec<C>,
    probs: Vec<Vec<f64>>,
}

impl<R, C> JointDistribution<R, C>
where
    R: Clone + Eq + Hash + Debug,
    C: Clone + Eq + Hash + Debug,
{
    pub fn new(rows: Vec<R>, cols: Vec<C>, probs: Vec<Vec<f64>>) -> Result<Self> {
        if probs.len() != rows.len() || probs.iter().any(|r| r.len() != cols.len()) {
            return Err(Error::InvalidDistribution("matrix shape does not match labels".into()));
        }
        if let Some(p) = probs.iter().flatten().find(|p| p.is_nan() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("negative or NaN probability {p}")));
        }
        let total: f64 = probs.iter().flatten().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        let joint = Self { rows, cols, probs };
        // distinct-label checks
        joint.row_marginal()?;
        joint.col_marginal()?;
        Ok(joint)
    }

    pub fn from_counts(rows: Vec<R>, cols: Vec<C>, counts: &[Vec<u64>]) -> Result<Self> {
        let total: u128 = counts.iter().flatten().map(|&c| c as u128).sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("all counts are zero".into()));
        }
        let probs = counts
            .iter()
            .map(|r| r.iter().map(|&c| c as f64 / total as f64).collect())
            .collect();
        Self::new(rows, cols, probs)
    }

    pub fn product(x: &FiniteDistribution<R>, y: &FiniteDistribution<C>) -> Result<Self> {
        let probs = x
            .probs
            .iter()
            .map(|&px| y.probs.iter().map(|&py| px * py).collect())
            .collect();
        Self::new(x.outcomes.clone(), y.outcomes.clone(), probs)
    }

    pub fn row_marginal(&self) -> Result<FiniteDistribution<R>> {
        let probs = self.probs.iter().map(|r| r.iter().sum()).collect();
        FiniteDistribution::new(self.rows.clone(), probs)
    }

    pub fn col_marginal(&self) -> Result<FiniteDistribution<C>> {
        let probs = (0..self.cols.len())
            .map(|j| self.probs.iter().map(|r| r[j]).sum())
            .collect();
        FiniteDistribution::new(self.cols.clone(), probs)
    }

    /// Flattens to a distribution over `(row, col)` pairs.
    pub fn flatten(&self) -> FiniteDistribution<(R, C)> {
        let mut outcomes = Vec::with_capacity(self.rows.len() * self.cols.len());
        let mut probs = Vec::with_capacity(outcomes.capacity());
        for (r, row) in self.rows.iter().zip(&self.probs) {
            for (c, &p) in self.cols.iter().zip(row) {
                outcomes.push((r.clone(), c.clone()));
                probs.push(p);
            }
        }
        FiniteDistribution { outcomes, probs }
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }
}

/// `I(X;Y) = H(Y) - H(Y|X)` for the joint of row variable `X` and column
/// variable `Y`, clamped at zero.
pub fn mutual_information<R, C>(joint: &JointDistribution<R, C>) -> f64
where
    R: Clone + Eq + Hash + Debug,
    C: Clone + Eq + Hash + Debug,
{
    let row_sums: Vec<f64> = joint.probs.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..joint.cols.len())
        .map(|j| joint.probs.iter().map(|r| r[j]).sum())
        .collect();
    let h_y = -col_sums.iter().map(|&p| xlogx(p)).sum::<f64>();
    // H(Y|X) = -sum p(x,y) ln p(y|x)
    let mut h_y_given_x = 0.0;
    for (row, &px) in joint.probs.iter().zip(&row_sums) {
        for &pxy in row {
            if pxy > 0.0 {
                h_y_given_x -= pxy * (pxy / px).ln();
            }
        }
    }
    (h_y - h_y_given_x).max(0.0)
}

/// Sparse integer joint counts, for joints whose row alphabet is too large
/// to materialize densely (e.g. whole input prefixes).
#[derive(Debug, Clone, Default)]
pub struct JointCounts<R: Eq + Hash, C: Eq + Hash> {
    cells: HashMap<(R, C), u64>,
}

impl<R: Clone + Eq + Hash, C: Clone + Eq + Hash> JointCounts<R, C> {
    pub fn new() -> Self {
        Self { cells: HashMap::new() }
    }

    pub fn add(&mut self, row: R, col: C, count: u64) {
        *self.cells.entry((row, col)).or_insert(0) += count;
    }

    pub fn merge(&mut self, other: Self) {
        for ((r, c), n) in other.cells {
            self.add(r, c, n);
        }
    }

    pub fn total(&self) -> u64 {
        self.cells.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Mutual information between the row and column variables, computed
    /// from exact counts as `sum c/T ln(c T / (r_c s_c))`.
    pub fn mutual_information(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let mut rows: HashMap<&R, u64> = HashMap::new();
        let mut cols: HashMap<&C, u64> = HashMap::new();
        for ((r, c), &n) in &self.cells {
            *rows.entry(r).or_insert(0) += n;
            *cols.entry(c).or_insert(0) += n;
        }
        let t = total as f64;
        let mut terms: Vec<f64> = self
            .cells
            .iter()
            .filter(|(_, &n)| n > 0)
            .map(|((r, c), &n)| {
                // integer products keep exact independence at exactly zero
                let ratio = (n as u128 * total as u128) as f64 / (rows[r] as u128 * cols[c] as u128) as f64;
                n as f64 / t * ratio.ln()
            })
            .collect();
        // fixed summation order regardless of hash iteration order
        terms.sort_unstable_by(f64::total_cmp);
        terms.iter().sum::<f64>().max(0.0)
    }
}
