//! C ABI over the switchlab core.
//!
//! Handles are opaque heap objects created by `sl_*_new`/`sl_*_run` and
//! released with the matching `sl_*_free`. Every fallible call returns an
//! [`SlStatus`]; on failure the message is available from
//! [`sl_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use switchlab::bounds::{chain_bound, construction_lower_bound, leading_upper_bound, step_information_bound};
use switchlab::collision::build_collision_algorithm;
use switchlab::entropy::{binary_entropy, binary_entropy_inverse, phi};
use switchlab::model::{random_algorithm, MemoryProfile, StreamAlgorithm, RANDOM_TABLE_CAP};
use switchlab::monte_carlo::{estimate_accept, Source};
use switchlab::oracle::{enumerate_distributions, OracleResult};
use switchlab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Precondition = 3,
    CapExceeded = 4,
    Domain = 5,
    Violation = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlSource {
    /// Uniform without replacement.
    WithoutReplacement = 0,
    /// Uniform with replacement.
    WithReplacement = 1,
}

/// Per-step memory widths for an alphabet of size `N`.
pub struct SlProfile {
    inner: MemoryProfile,
}

/// A deterministic streaming algorithm.
pub struct SlAlgorithm {
    inner: Box<dyn StreamAlgorithm>,
}

/// Output of exhaustive enumeration.
pub struct SlOracle {
    inner: OracleResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SlStatus {
    match e {
        Error::Domain { .. } => SlStatus::Domain,
        Error::InvalidDistribution(_) | Error::Parse { .. } | Error::StateWidth { .. } => SlStatus::InvalidArgument,
        Error::AbsoluteContinuity(_) | Error::Precondition(_) => SlStatus::Precondition,
        Error::CapExceeded { .. } => SlStatus::CapExceeded,
        Error::Violation { .. } => SlStatus::Violation,
        Error::Internal(_) => SlStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), SlStatus>) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            SlStatus::Internal
        }
    }
}

fn lift<T>(r: switchlab::Result<T>) -> Result<T, SlStatus> {
    r.map_err(|e| {
        let s = status_of(&e);
        set_error(e.to_string());
        s
    })
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, SlStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null pointer argument".into());
        SlStatus::NullPointer
    })
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), SlStatus> {
    if out.is_null() {
        set_error("null output pointer".into());
        return Err(SlStatus::NullPointer);
    }
    out.write(value);
    Ok(())
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a profile from `q` explicit widths.
///
/// # Safety
/// `widths` must point to `q` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_profile_new(n: u64, widths: *const u32, q: usize, out: *mut *mut SlProfile) -> SlStatus {
    guard(|| {
        if widths.is_null() && q > 0 {
            set_error("null widths".into());
            return Err(SlStatus::NullPointer);
        }
        let ws = if q == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(widths, q).to_vec()
        };
        let p = lift(MemoryProfile::new(n, ws))?;
        write_out(out, Box::into_raw(Box::new(SlProfile { inner: p })))
    })
}

/// Parses `const:<s>` or `s1,s2,...`. Pass `q = 0` to take the length from
/// the list.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_profile_parse(n: u64, q: usize, text: *const c_char, out: *mut *mut SlProfile) -> SlStatus {
    guard(|| {
        if text.is_null() {
            set_error("null profile text".into());
            return Err(SlStatus::NullPointer);
        }
        let s = CStr::from_ptr(text).to_str().map_err(|_| {
            set_error("profile text is not UTF-8".into());
            SlStatus::InvalidArgument
        })?;
        let p = lift(MemoryProfile::parse(n, (q > 0).then_some(q), s))?;
        write_out(out, Box::into_raw(Box::new(SlProfile { inner: p })))
    })
}

/// # Safety
/// `profile` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sl_profile_free(profile: *mut SlProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// # Safety
/// `profile` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn sl_profile_q(profile: *const SlProfile) -> usize {
    profile.as_ref().map_or(0, |p| p.inner.q())
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_binary_entropy(x: f64, out: *mut f64) -> SlStatus {
    guard(|| write_out(out, lift(binary_entropy(x))?))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_binary_entropy_inverse(t: f64, out: *mut f64) -> SlStatus {
    guard(|| write_out(out, lift(binary_entropy_inverse(t))?))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_phi(t: f64, out: *mut f64) -> SlStatus {
    guard(|| write_out(out, lift(phi(t))?))
}

/// Bound on the information the `(i+1)`-th distinct draw shares with a
/// state that holds `info` nats about the first `i` draws.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_step_information_bound(n: u64, i: u64, info: f64, out: *mut f64) -> SlStatus {
    guard(|| write_out(out, lift(step_information_bound(n, i, info))?))
}

/// Summed per-step bound over the normalized profile, in nats.
///
/// # Safety
/// `profile` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_chain_bound(profile: *const SlProfile, out: *mut f64) -> SlStatus {
    guard(|| {
        let p = deref(profile)?;
        write_out(out, lift(chain_bound(&p.inner.normalized()))?)
    })
}

/// Leading-order upper bound (bits ratio, asymptotic).
///
/// # Safety
/// `profile` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_leading_upper_bound(profile: *const SlProfile, out: *mut f64) -> SlStatus {
    guard(|| {
        let p = deref(profile)?;
        write_out(out, lift(leading_upper_bound(&p.inner))?.value)
    })
}

/// Lower bound achieved by the collision detector. With `normalized`
/// nonzero the profile is normalized first.
///
/// # Safety
/// `profile` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_construction_lower_bound(
    profile: *const SlProfile,
    normalized: bool,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        let p = deref(profile)?;
        let prof = if normalized {
            p.inner.normalized()
        } else {
            p.inner.clone()
        };
        write_out(out, lift(construction_lower_bound(&prof))?.value)
    })
}

/// # Safety
/// `profile` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_algorithm_collision(profile: *const SlProfile, out: *mut *mut SlAlgorithm) -> SlStatus {
    guard(|| {
        let p = deref(profile)?;
        let alg = lift(build_collision_algorithm(&p.inner))?;
        write_out(out, Box::into_raw(Box::new(SlAlgorithm { inner: Box::new(alg) })))
    })
}

/// Random lookup-table algorithm on the normalized profile.
///
/// # Safety
/// `profile` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_algorithm_random(
    profile: *const SlProfile,
    seed: u64,
    out: *mut *mut SlAlgorithm,
) -> SlStatus {
    guard(|| {
        let p = deref(profile)?;
        let alg = lift(random_algorithm(&p.inner.normalized(), seed, RANDOM_TABLE_CAP))?;
        write_out(out, Box::into_raw(Box::new(SlAlgorithm { inner: Box::new(alg) })))
    })
}

/// # Safety
/// `alg` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sl_algorithm_free(alg: *mut SlAlgorithm) {
    if !alg.is_null() {
        drop(Box::from_raw(alg));
    }
}

/// Enumerates all `N^q` inputs. Fails with `CapExceeded` above `cap`.
///
/// # Safety
/// `alg` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_oracle_run(alg: *const SlAlgorithm, cap: u64, out: *mut *mut SlOracle) -> SlStatus {
    guard(|| {
        let a = deref(alg)?;
        let r = lift(enumerate_distributions(a.inner.as_ref(), cap as u128))?;
        write_out(out, Box::into_raw(Box::new(SlOracle { inner: r })))
    })
}

/// # Safety
/// `oracle` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sl_oracle_free(oracle: *mut SlOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}

/// Exact KL divergence between final-state distributions, in nats.
///
/// # Safety
/// `oracle` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_oracle_kl(oracle: *const SlOracle, out: *mut f64) -> SlStatus {
    guard(|| write_out(out, deref(oracle)?.inner.kl_exact))
}

/// Sum over steps of the information each new symbol shares with the
/// preceding state, in nats.
///
/// # Safety
/// `oracle` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_oracle_mi_sum(oracle: *const SlOracle, out: *mut f64) -> SlStatus {
    guard(|| write_out(out, deref(oracle)?.inner.mi_sum()))
}

/// Exact acceptance probabilities under both sources.
///
/// # Safety
/// `oracle` must be live; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_oracle_accept(oracle: *const SlOracle, p_accept: *mut f64, q_accept: *mut f64) -> SlStatus {
    guard(|| {
        let o = deref(oracle)?;
        write_out(p_accept, o.inner.p_accept())?;
        write_out(q_accept, o.inner.q_accept())
    })
}

/// Sampled acceptance probability and its standard error.
///
/// # Safety
/// `alg` must be live; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_simulate(
    alg: *const SlAlgorithm,
    source: SlSource,
    samples: u64,
    seed: u64,
    value: *mut f64,
    stderr: *mut f64,
) -> SlStatus {
    guard(|| {
        let a = deref(alg)?;
        let src = match source {
            SlSource::WithoutReplacement => Source::WithoutReplacement,
            SlSource::WithReplacement => Source::WithReplacement,
        };
        let e = lift(estimate_accept(a.inner.as_ref(), src, samples, seed))?;
        write_out(value, e.value)?;
        write_out(stderr, e.stderr)
    })
}
