//! Closed-form bounds on the KL advantage of memory-bounded distinguishers.
//!
//! Two kinds of quantities live here:
//!
//! * rigorous finite-`N` bounds in nats: the per-step information bound
//!   ([`step_information_bound`]) and its sum over a memory profile
//!   ([`chain_bound`]), and the exact KL achieved by the collision detector
//!   ([`collision_exact_kl`]);
//! * the leading terms of the asymptotic upper bounds and the lower bound
//!   formula, evaluated exactly as stated with base-2 logarithms
//!   ([`Unit::BitsRatio`]). The ratio of bit counts equals the nats value
//!   of the underlying bound, so it is directly comparable with a KL in
//!   nats. Upper leading terms omit an unquantified `1 + o(1)` factor and
//!   are always flagged `asymptotic`.

use std::fmt;

use crate::collision::{derive_capacities, CapacityVector};
use crate::entropy::{log_binomial, phi};
use crate::error::{Error, Result};
use crate::model::MemoryProfile;

/// Slack allowed when comparing a lower bound with an exact KL.
pub const COMPARISON_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Nats,
    BitsRatio,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Nats => "nats",
            Unit::BitsRatio => "bits-ratio",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue {
    pub value: f64,
    pub unit: Unit,
    /// The value is a leading term missing a `1 + o(1)` factor.
    pub asymptotic: bool,
    /// The raw formula was negative and the value was clamped to 0.
    pub clamped: bool,
    /// `q` is too close to `N` for the leading term to be meaningful
    /// (`log2(N/q) <= 1`).
    pub degenerate: bool,
}

impl BoundValue {
    fn exact(value: f64, unit: Unit) -> Self {
        Self {
            value,
            unit,
            asymptotic: false,
            clamped: false,
            degenerate: false,
        }
    }

    /// Comma-separated flag names, empty when none are set.
    pub fn flags(&self) -> String {
        let mut out = Vec::new();
        if self.asymptotic {
            out.push("asymptotic");
        }
        if self.clamped {
            out.push("clamped");
        }
        if self.degenerate {
            out.push("degenerate");
        }
        out.join(",")
    }
}

/// Upper bound on `I(W; G)` when `W` is the `(i+1)`-th draw without
/// replacement from `[N]`, `V` the first `i` draws, `G - V - W` a Markov
/// chain, and `info_v_g >= I(V; G)`:
///
/// `ln(N/(N-i)) - N/(N-i) * phi((ln C(N,i) - info_v_g) / N)`, clamped at 0.
pub fn step_information_bound(n: u64, i: u64, info_v_g: f64) -> Result<f64> {
    if i >= n {
        return Err(Error::domain(
            "step_information_bound",
            format!("step i = {i} must be below N = {n}"),
        ));
    }
    if info_v_g.is_nan() || info_v_g < 0.0 {
        return Err(Error::domain(
            "step_information_bound",
            format!("information {info_v_g} must be nonnegative"),
        ));
    }
    if i == 0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let frac = i as f64 / nf;
    let ratio = nf / (n - i) as f64;
    let arg = (log_binomial(n, i)? - info_v_g) / nf;
    let value = -(-frac).ln_1p() - ratio * phi(arg)?;
    Ok(value.max(0.0))
}

/// `sum_{i=1}^{q-1} step_information_bound(N, i, s_i ln 2)`: a finite-`N`
/// upper bound on the KL advantage of any algorithm with this profile.
pub fn chain_bound(profile: &MemoryProfile) -> Result<f64> {
    let n = profile.n();
    (1..profile.q())
        .map(|i| step_information_bound(n, i as u64, profile.width(i) as f64 * std::f64::consts::LN_2))
        .sum()
}

fn bits_sum_head(profile: &MemoryProfile) -> f64 {
    profile.total_bits(1..=profile.q() - 1) as f64
}

/// `(sum_{i<q} s_i + q log2 N) / (N log2(N/q))`.
pub fn leading_upper_bound(profile: &MemoryProfile) -> Result<BoundValue> {
    let (n, q) = (profile.n() as f64, profile.q() as f64);
    let log_ratio = (n / q).log2();
    if log_ratio.is_nan() || log_ratio <= 0.0 {
        return Err(Error::Precondition(format!(
            "leading upper bound needs q < N (q = {q}, N = {n})"
        )));
    }
    let value = (bits_sum_head(profile) + q * n.log2()) / (n * log_ratio);
    Ok(BoundValue {
        asymptotic: true,
        degenerate: log_ratio <= 1.0,
        ..BoundValue::exact(value, Unit::BitsRatio)
    })
}

/// `(sum_{i<q} s_i + q log2 N) / (eps N log2 N)`, valid for
/// `q <= N^(1-eps)`.
pub fn leading_upper_bound_eps(profile: &MemoryProfile, epsilon: f64) -> Result<BoundValue> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Precondition(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    let (n, q) = (profile.n() as f64, profile.q() as f64);
    // compared in log space so q = N^(1-eps) exactly is admitted
    if q.log2() > (1.0 - epsilon) * n.log2() + 1e-12 {
        return Err(Error::Precondition(format!(
            "q = {q} exceeds N^(1-eps) = {}",
            n.powf(1.0 - epsilon)
        )));
    }
    let value = (bits_sum_head(profile) + q * n.log2()) / (epsilon * n * n.log2());
    Ok(BoundValue {
        asymptotic: true,
        ..BoundValue::exact(value, Unit::BitsRatio)
    })
}

/// `(sum_{i<q} s_i - q (log2 N + 1)) / (N log2 N)`, clamped at 0.
///
/// A valid lower bound on the collision detector's KL when the profile
/// obeys the growth constraints (see [`MemoryProfile::normalized`]) and
/// `N` is a power of two.
pub fn construction_lower_bound(profile: &MemoryProfile) -> Result<BoundValue> {
    if let Some(pos) = profile.widths().iter().position(|&s| s < 1) {
        return Err(Error::Precondition(format!(
            "lower bound needs every s_i >= 1, but s_{} = 0",
            pos + 1
        )));
    }
    let (n, q) = (profile.n() as f64, profile.q() as f64);
    let raw = (bits_sum_head(profile) - q * (n.log2() + 1.0)) / (n * n.log2());
    Ok(BoundValue {
        clamped: raw < 0.0,
        ..BoundValue::exact(raw.max(0.0), Unit::BitsRatio)
    })
}

/// `-sum ln(1 - k_i / N)` over the given capacities (pass `k_1..k_{q-1}`).
pub fn collision_exact_kl(n: u64, k: &[u32]) -> Result<f64> {
    if let Some(&bad) = k.iter().find(|&&ki| ki as u64 >= n) {
        return Err(Error::domain(
            "collision_exact_kl",
            format!("capacity {bad} >= N = {n}"),
        ));
    }
    let nf = n as f64;
    Ok(-k.iter().map(|&ki| (-(ki as f64) / nf).ln_1p()).sum::<f64>())
}

/// Every bound evaluated for one memory profile.
///
/// The leading terms, the lower bound formula and the collision detector
/// use the profile as given; the chain bound and the checked lower bound use
/// the normalized profile.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub n: u64,
    pub q: usize,
    pub profile: MemoryProfile,
    pub normalized: MemoryProfile,
    /// Nats.
    pub chain_bound: f64,
    pub leading_upper: BoundValue,
    pub leading_upper_eps: Option<BoundValue>,
    pub construction_lower: Option<BoundValue>,
    pub construction_lower_normalized: Option<BoundValue>,
    pub capacities: Option<CapacityVector>,
    /// Nats.
    pub collision_exact_kl: Option<f64>,
}

impl BoundReport {
    pub fn evaluate(profile: &MemoryProfile, epsilon: Option<f64>) -> Result<Self> {
        let normalized = profile.normalized();
        let has_flag_bit = profile.widths().iter().all(|&s| s >= 1);
        let (construction_lower, construction_lower_normalized, capacities, exact) = if has_flag_bit {
            let k = derive_capacities(profile)?;
            let exact = collision_exact_kl(profile.n(), k.checked_prefix())?;
            (
                Some(construction_lower_bound(profile)?),
                Some(construction_lower_bound(&normalized)?),
                Some(k),
                Some(exact),
            )
        } else {
            (None, None, None, None)
        };
        Ok(Self {
            n: profile.n(),
            q: profile.q(),
            profile: profile.clone(),
            normalized: normalized.clone(),
            chain_bound: chain_bound(&normalized)?,
            leading_upper: leading_upper_bound(profile)?,
            leading_upper_eps: epsilon.and_then(|e| leading_upper_bound_eps(profile, e).ok()),
            construction_lower,
            construction_lower_normalized,
            capacities,
            collision_exact_kl: exact,
        })
    }

    /// Normalized-profile lower bound against the detector's exact KL.
    pub fn lower_bound_holds(&self) -> Option<bool> {
        Some(self.construction_lower_normalized?.value <= self.collision_exact_kl? + COMPARISON_TOLERANCE)
    }

    /// The as-stated lower bound (raw profile) against the exact KL.
    pub fn raw_lower_bound_holds(&self) -> Option<bool> {
        Some(self.construction_lower?.value <= self.collision_exact_kl? + COMPARISON_TOLERANCE)
    }
}
