//! The streaming computation model: per-step memory budgets, fixed-width
//! states, deterministic step functions, and the two input samplers.
//!
//! Stream elements are the symbols `1..=N`. A run starts from the empty
//! state and applies `step(i, state, x_i)` for `i = 1..=q`; the state after
//! step `i` must be exactly `s_i` bits wide.

use std::fmt;

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};

/// Default cap on the number of tabulated step entries for
/// [`random_algorithm`].
pub const RANDOM_TABLE_CAP: u128 = 1_000_000;

/// Bits needed to write one symbol of `[N]`: `ceil(log2 N)`.
pub fn symbol_bits(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Per-step state widths `(s_1, ..., s_q)` for alphabet size `N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MemoryProfile {
    n: u64,
    widths: Vec<u32>,
}

impl MemoryProfile {
    pub fn new(n: u64, widths: Vec<u32>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Precondition(format!("alphabet size N = {n} must be at least 2")));
        }
        let q = widths.len() as u64;
        if q == 0 || q >= n {
            return Err(Error::Precondition(format!(
                "stream length q = {q} must satisfy 1 <= q < N = {n}"
            )));
        }
        Ok(Self { n, widths })
    }

    pub fn constant(n: u64, q: usize, width: u32) -> Result<Self> {
        Self::new(n, vec![width; q])
    }

    /// Parses `const:<s>` (needs `q`) or a comma-separated list
    /// `s1,s2,...,sq` (checked against `q` when given).
    pub fn parse(n: u64, q: Option<usize>, text: &str) -> Result<Self> {
        let text = text.trim();
        let parse_err = |reason: String| Error::Parse {
            input: text.to_string(),
            reason,
        };
        let widths = if let Some(rest) = text.strip_prefix("const:") {
            let s: u32 = rest
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad width `{rest}`: {e}")))?;
            let q = q.ok_or_else(|| parse_err("const profile needs an explicit q".into()))?;
            vec![s; q]
        } else {
            let widths = text
                .split(',')
                .map(|w| {
                    w.trim()
                        .parse::<u32>()
                        .map_err(|e| parse_err(format!("bad width `{w}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if let Some(q) = q {
                if q != widths.len() {
                    return Err(parse_err(format!("{} widths given but q = {q}", widths.len())));
                }
            }
            widths
        };
        Self::new(n, widths)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn q(&self) -> usize {
        self.widths.len()
    }

    pub fn widths(&self) -> &[u32] {
        &self.widths
    }

    /// `s_i` for `i` in `0..=q`, with `s_0 = 0`.
    pub fn width(&self, i: usize) -> u32 {
        if i == 0 {
            0
        } else {
            self.widths[i - 1]
        }
    }

    pub fn symbol_bits(&self) -> u32 {
        symbol_bits(self.n)
    }

    /// Caps each budget at what can be reached by storing one extra symbol
    /// per step: `s'_1 = min(s_1, w)`, `s'_{i+1} = min(s_{i+1}, s'_i + w)`
    /// with `w = ceil(log2 N)`.
    pub fn normalized(&self) -> Self {
        let w = self.symbol_bits();
        let mut prev = 0u32;
        let widths = self
            .widths
            .iter()
            .map(|&s| {
                prev = s.min(prev.saturating_add(w));
                prev
            })
            .collect();
        Self { n: self.n, widths }
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized() == *self
    }

    pub fn total_bits(&self, steps: std::ops::RangeInclusive<usize>) -> u64 {
        steps.map(|i| self.width(i) as u64).sum()
    }
}

impl fmt::Display for MemoryProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.widths.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{w}")?;
        }
        Ok(())
    }
}

/// Run-length form of a width list: `20,40,64x1022`.
pub fn compact_widths(widths: &[u32]) -> String {
    let mut parts = Vec::new();
    let mut iter = widths.iter().peekable();
    while let Some(&w) = iter.next() {
        let mut run = 1;
        while iter.peek() == Some(&&w) {
            iter.next();
            run += 1;
        }
        parts.push(if run == 1 { w.to_string() } else { format!("{w}x{run}") });
    }
    parts.join(",")
}

pub fn normalize_profile(raw: &MemoryProfile) -> MemoryProfile {
    raw.normalized()
}

/// A fixed-width bit string. Bit 0 is the first (most significant) bit.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StreamState {
    len: u32,
    words: SmallVec<[u64; 2]>,
}

impl StreamState {
    /// The zero-length state.
    pub fn empty() -> Self {
        Self::zeros(0)
    }

    pub fn zeros(len: u32) -> Self {
        Self {
            len,
            words: smallvec![0; len.div_ceil(64) as usize],
        }
    }

    pub fn ones(len: u32) -> Self {
        let mut s = Self {
            len,
            words: smallvec![!0u64; len.div_ceil(64) as usize],
        };
        s.clear_tail();
        s
    }

    /// A state of width `len <= 64` holding `value` right-aligned.
    pub fn from_uint(len: u32, value: u64) -> Self {
        assert!(len <= 64, "from_uint supports widths up to 64");
        let mut s = Self::zeros(len);
        s.write_uint(0, len, value);
        s
    }

    pub(crate) fn from_words(len: u32, words: SmallVec<[u64; 2]>) -> Self {
        debug_assert_eq!(words.len(), len.div_ceil(64) as usize);
        let mut s = Self { len, words };
        s.clear_tail();
        s
    }

    fn clear_tail(&mut self) {
        let used = self.len % 64;
        if used != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= !0u64 << (64 - used);
            }
        }
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, j: u32) -> bool {
        assert!(j < self.len, "bit {j} out of range for width {}", self.len);
        (self.words[(j / 64) as usize] >> (63 - j % 64)) & 1 == 1
    }

    pub fn is_all_ones(&self) -> bool {
        *self == Self::ones(self.len)
    }

    /// Reads `width <= 64` bits starting at `offset` as a big-endian integer.
    pub fn read_uint(&self, offset: u32, width: u32) -> u64 {
        assert!(width <= 64 && offset + width <= self.len);
        let (mut value, mut pos, mut remaining) = (0u64, offset, width);
        while remaining > 0 {
            let b = pos % 64;
            let take = (64 - b).min(remaining);
            let chunk = (self.words[(pos / 64) as usize] << b) >> (64 - take);
            value = if take == 64 { chunk } else { (value << take) | chunk };
            remaining -= take;
            pos += take;
        }
        value
    }

    /// Writes the low `width <= 64` bits of `value` big-endian at `offset`.
    pub fn write_uint(&mut self, offset: u32, width: u32, value: u64) {
        assert!(width <= 64 && offset + width <= self.len);
        let (mut pos, mut remaining) = (offset, width);
        while remaining > 0 {
            let b = pos % 64;
            let take = (64 - b).min(remaining);
            let low = if take == 64 { !0u64 } else { (1u64 << take) - 1 };
            let shift = 64 - b - take;
            let bits = (value >> (remaining - take)) & low;
            let word = &mut self.words[(pos / 64) as usize];
            *word = (*word & !(low << shift)) | (bits << shift);
            remaining -= take;
            pos += take;
        }
    }

    /// The state as an integer, for widths up to 64.
    pub fn as_u64(&self) -> Option<u64> {
        (self.len <= 64).then(|| if self.len == 0 { 0 } else { self.read_uint(0, self.len) })
    }
}

impl fmt::Debug for StreamState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StreamState({self})")
    }
}

impl fmt::Display for StreamState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len == 0 {
            return f.write_str("⊥");
        }
        for j in 0..self.len {
            f.write_str(if self.bit(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A deterministic one-pass streaming algorithm bound to a memory profile.
///
/// `step` is called with the 1-based step index `i`, the state of width
/// `s_{i-1}` and the symbol `x_i` in `1..=N`, and must return a state of
/// width exactly `s_i`.
pub trait StreamAlgorithm: Send + Sync {
    fn profile(&self) -> &MemoryProfile;

    fn step(&self, i: usize, state: &StreamState, x: u64) -> StreamState;

    /// Decision bit read off a final state; the first bit by default.
    fn output_bit(&self, state: &StreamState) -> bool {
        !state.is_empty() && state.bit(0)
    }

    fn name(&self) -> &str {
        "custom"
    }
}

/// Applies one step and checks the produced width.
pub fn checked_step<A: StreamAlgorithm + ?Sized>(
    alg: &A,
    i: usize,
    state: &StreamState,
    x: u64,
) -> Result<StreamState> {
    let next = alg.step(i, state, x);
    let expected = alg.profile().width(i);
    if next.len() != expected {
        return Err(Error::StateWidth {
            step: i,
            expected,
            actual: next.len(),
        });
    }
    Ok(next)
}

/// Runs `alg` over `xs` from the empty state and returns the final state.
pub fn run_stream<A: StreamAlgorithm + ?Sized>(alg: &A, xs: &[u64]) -> Result<StreamState> {
    let profile = alg.profile();
    if xs.len() != profile.q() {
        return Err(Error::Precondition(format!(
            "input has {} elements, profile expects q = {}",
            xs.len(),
            profile.q()
        )));
    }
    let n = profile.n();
    let mut state = StreamState::empty();
    for (idx, &x) in xs.iter().enumerate() {
        if x == 0 || x > n {
            return Err(Error::Precondition(format!(
                "symbol {x} at position {} not in 1..={n}",
                idx + 1
            )));
        }
        state = checked_step(alg, idx + 1, &state, x)?;
    }
    Ok(state)
}

/// The ChaCha8 generator all sampling in this crate is driven by.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn draw_with_replacement<R: Rng + ?Sized>(n: u64, q: usize, rng: &mut R) -> Vec<u64> {
    (0..q).map(|_| rng.random_range(1..=n)).collect()
}

/// `q` distinct symbols in uniformly random order: the first `q` entries of
/// a uniform random permutation of `[N]`.
pub fn draw_without_replacement<R: Rng + ?Sized>(n: u64, q: usize, rng: &mut R) -> Vec<u64> {
    index::sample(rng, n as usize, q)
        .into_iter()
        .map(|i| i as u64 + 1)
        .collect()
}

pub fn sample_with_replacement(n: u64, q: usize, seed: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::Precondition("alphabet size must be positive".into()));
    }
    Ok(draw_with_replacement(n, q, &mut seeded_rng(seed)))
}

pub fn sample_without_replacement(n: u64, q: usize, seed: u64) -> Result<Vec<u64>> {
    if q == 0 || q as u64 >= n {
        return Err(Error::Precondition(format!(
            "sampling without replacement needs 1 <= q < N (q = {q}, N = {n})"
        )));
    }
    Ok(draw_without_replacement(n, q, &mut seeded_rng(seed)))
}

/// Ignores its input and emits all-zero states of the profile's widths.
#[derive(Debug, Clone)]
pub struct ConstantAlgorithm {
    profile: MemoryProfile,
}

impl ConstantAlgorithm {
    pub fn new(profile: MemoryProfile) -> Self {
        Self { profile }
    }
}

impl StreamAlgorithm for ConstantAlgorithm {
    fn profile(&self) -> &MemoryProfile {
        &self.profile
    }

    fn step(&self, i: usize, _state: &StreamState, _x: u64) -> StreamState {
        StreamState::zeros(self.profile.width(i))
    }

    fn name(&self) -> &str {
        "constant"
    }
}

/// A fully tabulated step function: for each step `i`, one entry per
/// (previous state, symbol) pair.
#[derive(Debug, Clone)]
pub struct TableAlgorithm {
    profile: MemoryProfile,
    tables: Vec<Vec<StreamState>>,
}

impl TableAlgorithm {
    /// Table for step `i` (1-based), indexed by `state * N + (x - 1)`.
    pub fn table(&self, i: usize) -> &[StreamState] {
        &self.tables[i - 1]
    }
}

impl StreamAlgorithm for TableAlgorithm {
    fn profile(&self) -> &MemoryProfile {
        &self.profile
    }

    fn step(&self, i: usize, state: &StreamState, x: u64) -> StreamState {
        let prev = state.as_u64().expect("tabulated states fit in 64 bits");
        let idx = prev * self.profile.n() + (x - 1);
        self.tables[i - 1][idx as usize].clone()
    }

    fn name(&self) -> &str {
        "random"
    }
}

/// Number of entries `sum_i 2^{s_{i-1}} N` a tabulated algorithm needs.
pub fn table_entries(profile: &MemoryProfile) -> u128 {
    (1..=profile.q())
        .map(|i| {
            let s = profile.width(i - 1);
            if s >= 100 {
                u128::MAX / 4
            } else {
                (1u128 << s).saturating_mul(profile.n() as u128)
            }
        })
        .fold(0u128, u128::saturating_add)
}

/// A random deterministic algorithm: every table entry is drawn uniformly
/// from the `2^{s_i}` states of the next width, reproducibly from `seed`.
pub fn random_algorithm(profile: &MemoryProfile, seed: u64, cap: u128) -> Result<TableAlgorithm> {
    let size = table_entries(profile);
    if size > cap {
        return Err(Error::CapExceeded {
            what: "random algorithm table",
            size,
            cap,
        });
    }
    let mut rng = seeded_rng(seed);
    let n = profile.n();
    let tables = (1..=profile.q())
        .map(|i| {
            let rows = 1u64 << profile.width(i - 1);
            let width = profile.width(i);
            (0..rows * n)
                .map(|_| {
                    let words = (0..width.div_ceil(64)).map(|_| rng.next_u64()).collect();
                    StreamState::from_words(width, words)
                })
                .collect()
        })
        .collect();
    Ok(TableAlgorithm {
        profile: profile.clone(),
        tables,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        let p = MemoryProfile::new(4, vec![5, 1, 9]).unwrap();
        assert_eq!(p.normalized().widths(), &[2, 1, 3]);
        let p = MemoryProfile::new(4, vec![1, 2, 3]).unwrap();
        assert_eq!(p.normalized().widths(), &[1, 2, 3]);
        assert!(p.is_normalized());
        let p = MemoryProfile::new(8, vec![100, 100]).unwrap();
        assert_eq!(normalize_profile(&p).widths(), &[3, 6]);
    }

    #[test]
    fn profile_validation_and_parsing() {
        assert!(MemoryProfile::new(1, vec![1]).is_err());
        assert!(MemoryProfile::new(4, vec![]).is_err());
        assert!(MemoryProfile::new(4, vec![1, 1, 1, 1]).is_err());
        let p = MemoryProfile::parse(1024, Some(16), "const:32").unwrap();
        assert_eq!(p.q(), 16);
        assert!(p.widths().iter().all(|&s| s == 32));
        let p = MemoryProfile::parse(4, None, " 3, 5,1").unwrap();
        assert_eq!(p.widths(), &[3, 5, 1]);
        assert_eq!(p.to_string(), "3,5,1");
        assert!(MemoryProfile::parse(4, Some(2), "3,5,1").is_err());
        assert!(MemoryProfile::parse(4, None, "const:3").is_err());
        assert!(MemoryProfile::parse(4, None, "3,x").is_err());
        assert!(MemoryProfile::parse(4, Some(2), "const:-1").is_err());
    }

    #[test]
    fn compact_form() {
        assert_eq!(compact_widths(&[20, 40, 64, 64, 64]), "20,40,64x3");
        assert_eq!(compact_widths(&[1]), "1");
    }

    #[test]
    fn symbol_bits_values() {
        assert_eq!(symbol_bits(2), 1);
        assert_eq!(symbol_bits(4), 2);
        assert_eq!(symbol_bits(5), 3);
        assert_eq!(symbol_bits(8), 3);
        assert_eq!(symbol_bits(1 << 20), 20);
    }

    #[test]
    fn state_bit_io() {
        let mut s = StreamState::zeros(130);
        s.write_uint(60, 10, 0b10_1100_1101);
        s.write_uint(125, 5, 0b10101);
        assert_eq!(s.read_uint(60, 10), 0b10_1100_1101);
        assert_eq!(s.read_uint(125, 5), 0b10101);
        assert!(s.bit(60));
        assert!(!s.bit(61));
        s.write_uint(0, 64, u64::MAX);
        assert_eq!(s.read_uint(0, 64), u64::MAX);
        assert_eq!(StreamState::ones(70), {
            let mut t = StreamState::zeros(70);
            t.write_uint(0, 64, u64::MAX);
            t.write_uint(64, 6, 0b111111);
            t
        });
        assert!(StreamState::ones(3).is_all_ones());
        assert_eq!(StreamState::from_uint(3, 5).to_string(), "101");
        assert_eq!(StreamState::empty().to_string(), "⊥");
        assert_eq!(StreamState::from_uint(3, 5).as_u64(), Some(5));
    }

    #[test]
    fn constant_run() {
        let p = MemoryProfile::new(4, vec![2, 3]).unwrap();
        let alg = ConstantAlgorithm::new(p);
        assert_eq!(run_stream(&alg, &[1, 2]).unwrap(), StreamState::zeros(3));
        assert_eq!(run_stream(&alg, &[4, 4]).unwrap(), StreamState::zeros(3));
        assert!(run_stream(&alg, &[1]).is_err());
        assert!(run_stream(&alg, &[1, 5]).is_err());
    }

    struct Misbehaving(MemoryProfile);

    impl StreamAlgorithm for Misbehaving {
        fn profile(&self) -> &MemoryProfile {
            &self.0
        }
        fn step(&self, i: usize, _: &StreamState, _: u64) -> StreamState {
            StreamState::zeros(if i == 2 { 7 } else { 1 })
        }
    }

    #[test]
    fn width_violation_names_step() {
        let alg = Misbehaving(MemoryProfile::new(4, vec![1, 1, 1]).unwrap());
        assert_eq!(
            run_stream(&alg, &[1, 2, 3]),
            Err(Error::StateWidth {
                step: 2,
                expected: 1,
                actual: 7
            })
        );
    }

    #[test]
    fn samplers() {
        assert_eq!(sample_with_replacement(1, 5, 9).unwrap(), vec![1; 5]);
        assert_eq!(
            sample_with_replacement(10, 8, 42).unwrap(),
            sample_with_replacement(10, 8, 42).unwrap()
        );
        let xs = sample_without_replacement(6, 5, 3).unwrap();
        let mut sorted = xs.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 5);
        assert!(xs.iter().all(|&x| (1..=6).contains(&x)));
        assert_eq!(xs, sample_without_replacement(6, 5, 3).unwrap());
        assert!(sample_without_replacement(5, 5, 0).is_err());
        assert!(sample_without_replacement(5, 0, 0).is_err());
    }

    #[test]
    fn random_algorithm_cap_and_trivial() {
        let p = MemoryProfile::new(4, vec![0, 0, 0]).unwrap();
        let alg = random_algorithm(&p, 1, RANDOM_TABLE_CAP).unwrap();
        assert_eq!(run_stream(&alg, &[1, 2, 3]).unwrap(), StreamState::empty());
        let big = MemoryProfile::new(1 << 20, vec![20, 20]).unwrap();
        assert!(matches!(
            random_algorithm(&big, 1, RANDOM_TABLE_CAP),
            Err(Error::CapExceeded { .. })
        ));
    }
}
