//! List-storing collision detector.
//!
//! The detector keeps a flag bit followed by up to `k_i` stored symbols. A
//! repeat of a stored symbol sets the absorbing all-ones state; otherwise a
//! new symbol is appended when the capacity grows by one and the list is
//! truncated to its first `k_i` entries when it does not. Under sampling
//! without replacement no repeat can occur, so the decision bit is always 0.

use crate::error::{Error, Result};
use crate::model::{MemoryProfile, StreamAlgorithm, StreamState};

/// Per-step list capacities `(k_1, ..., k_q)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CapacityVector(Vec<u32>);

impl CapacityVector {
    /// Validates `k_1 <= 1`, `k_{i+1} <= k_i + 1` (hence `k_i <= i`).
    pub fn new(k: Vec<u32>) -> Result<Self> {
        let mut prev = 0u32;
        for (idx, &ki) in k.iter().enumerate() {
            if ki > prev + 1 {
                return Err(Error::Precondition(format!(
                    "capacity k_{} = {ki} exceeds k_{} + 1 = {}",
                    idx + 1,
                    idx,
                    prev + 1
                )));
            }
            prev = ki;
        }
        Ok(Self(k))
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// `k_1, ..., k_{q-1}`: the capacities a later symbol is checked against.
    pub fn checked_prefix(&self) -> &[u32] {
        &self.0[..self.0.len().saturating_sub(1)]
    }

    pub fn q(&self) -> usize {
        self.0.len()
    }
}

/// `k_i = floor((s_i - 1) / ceil(log2 N))`, then a forward pass enforcing
/// `k_1 <= 1` and `k_{i+1} <= k_i + 1`.
pub fn derive_capacities(profile: &MemoryProfile) -> Result<CapacityVector> {
    if let Some(pos) = profile.widths().iter().position(|&s| s < 1) {
        return Err(Error::Precondition(format!(
            "collision detector needs every s_i >= 1, but s_{} = 0",
            pos + 1
        )));
    }
    let w = profile.symbol_bits();
    let mut prev = 0u32;
    let k = profile
        .widths()
        .iter()
        .map(|&s| {
            prev = ((s - 1) / w).min(prev + 1);
            prev
        })
        .collect();
    Ok(CapacityVector(k))
}

/// True when the raw division already satisfies the growth constraints, so
/// the forward pass changed nothing.
pub fn capacities_unclamped(profile: &MemoryProfile) -> bool {
    let w = profile.symbol_bits();
    let mut prev = 0u32;
    profile.widths().iter().all(|&s| {
        let raw = s.saturating_sub(1) / w;
        let ok = s >= 1 && raw <= prev + 1;
        prev = raw;
        ok
    })
}

/// `Q[A = 1] = 1 - prod_{i<q} (1 - k_i / N)`.
pub fn analytic_accept_probability(n: u64, k: &CapacityVector) -> Result<f64> {
    if let Some(&bad) = k.as_slice().iter().find(|&&ki| ki as u64 >= n) {
        return Err(Error::domain(
            "analytic_accept_probability",
            format!("capacity {bad} >= N = {n}"),
        ));
    }
    let nf = n as f64;
    let survive: f64 = k.checked_prefix().iter().map(|&ki| 1.0 - ki as f64 / nf).product();
    Ok(1.0 - survive)
}

#[derive(Debug, Clone)]
pub struct CollisionAlgorithm {
    profile: MemoryProfile,
    capacities: CapacityVector,
    slot_bits: u32,
}

impl CollisionAlgorithm {
    pub fn capacities(&self) -> &CapacityVector {
        &self.capacities
    }

    fn capacity(&self, i: usize) -> u32 {
        if i == 0 {
            0
        } else {
            self.capacities.0[i - 1]
        }
    }
}

pub fn build_collision_algorithm(profile: &MemoryProfile) -> Result<CollisionAlgorithm> {
    let capacities = derive_capacities(profile)?;
    Ok(CollisionAlgorithm {
        profile: profile.clone(),
        capacities,
        slot_bits: profile.symbol_bits(),
    })
}

impl StreamAlgorithm for CollisionAlgorithm {
    fn profile(&self) -> &MemoryProfile {
        &self.profile
    }

    fn step(&self, i: usize, state: &StreamState, x: u64) -> StreamState {
        let width = self.profile.width(i);
        let w = self.slot_bits;
        let k_prev = self.capacity(i - 1);
        let k = self.capacity(i);
        // slots always fit: 1 + k_i * w <= s_i by construction of k
        debug_assert!(k * w < width);

        if i > 1 && state.bit(0) {
            return StreamState::ones(width);
        }
        let mut next = StreamState::zeros(width);
        let mut kept = 0u32;
        for j in 0..k_prev {
            let y = state.read_uint(1 + j * w, w) + 1;
            if y == x {
                return StreamState::ones(width);
            }
            if kept < k {
                next.write_uint(1 + kept * w, w, y - 1);
                kept += 1;
            }
        }
        if k == k_prev + 1 {
            next.write_uint(1 + kept * w, w, x - 1);
        }
        next
    }

    fn name(&self) -> &str {
        "collision"
    }
}
