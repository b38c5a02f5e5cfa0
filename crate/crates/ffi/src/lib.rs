//! C ABI for `submean`.
//!
//! Every fallible function returns an [`SmStatus`]. On failure a message is
//! kept per thread and can be read with [`sm_last_error_message`]. Sample
//! sets are opaque handles created by [`sm_samples_new`] and released by
//! [`sm_samples_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use submean::data::{make_partition, SampleSet};
use submean::estimators::{self, ConstantsProfile, EstimatorConfig, KRule, Method};
use submean::tournament::defeats_raw;
use submean::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    CorruptPartition = 3,
    BudgetExceeded = 4,
    Parse = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmMethod {
    SampleMean = 0,
    Mom = 1,
    GeomedianMom = 2,
    Lm = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmKRule {
    Paper = 0,
    Practical = 1,
    /// Uses `fixed_k`.
    Fixed = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmProfile {
    /// Constants (400, 240).
    Paper = 0,
    /// Constants (2, 2).
    Practical = 1,
}

/// Estimator settings. Start from [`sm_estimator_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SmEstimatorConfig {
    pub delta: f64,
    pub k_rule: SmKRule,
    pub fixed_k: usize,
    pub odd_k: bool,
    pub seed: u64,
}

/// Outcome of a pairwise defeat test.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SmDefeat {
    pub blocks_for_a: usize,
    pub blocks_for_b: usize,
    pub ties: usize,
    pub k: usize,
    pub a_defeats_b: bool,
    pub b_defeats_a: bool,
}

/// Opaque sample set.
pub struct SmSampleSet {
    inner: SampleSet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SmStatus, message: impl Into<String>) -> SmStatus {
    set_error(message.into());
    status
}

fn from_error(e: Error) -> SmStatus {
    let status = match e {
        Error::InvalidParameter(_) => SmStatus::InvalidParameter,
        Error::CorruptPartition(_) => SmStatus::CorruptPartition,
        Error::BudgetExceeded { .. } => SmStatus::BudgetExceeded,
        Error::Parse { .. } => SmStatus::Parse,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> SmStatus) -> SmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(SmStatus::Panic, "internal panic"),
    }
}

fn k_rule(rule: SmKRule, fixed_k: usize) -> KRule {
    match rule {
        SmKRule::Paper => KRule::Paper,
        SmKRule::Practical => KRule::Practical,
        SmKRule::Fixed => KRule::Fixed(fixed_k),
    }
}

/// Message for the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn sm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn sm_estimator_config_default() -> SmEstimatorConfig {
    let d = EstimatorConfig::default();
    SmEstimatorConfig {
        delta: d.delta,
        k_rule: SmKRule::Practical,
        fixed_k: 0,
        odd_k: d.odd_k,
        seed: d.seed,
    }
}

/// Copies `n * dim` row-major values into a new sample set.
///
/// # Safety
/// `data` must point to `n * dim` readable doubles and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn sm_samples_new(
    data: *const f64,
    n: usize,
    dim: usize,
    out: *mut *mut SmSampleSet,
) -> SmStatus {
    guard(|| {
        if data.is_null() || out.is_null() {
            return fail(SmStatus::NullPointer, "data and out must be non-null");
        }
        let Some(len) = n.checked_mul(dim) else {
            return fail(SmStatus::InvalidParameter, "n * dim overflows");
        };
        let values = std::slice::from_raw_parts(data, len).to_vec();
        match SampleSet::from_flat(values, dim) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SmSampleSet { inner }));
                SmStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a sample set. Null is ignored.
///
/// # Safety
/// `samples` must come from [`sm_samples_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sm_samples_free(samples: *mut SmSampleSet) {
    if !samples.is_null() {
        drop(Box::from_raw(samples));
    }
}

/// # Safety
/// `samples` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sm_samples_len(samples: *const SmSampleSet) -> usize {
    samples.as_ref().map_or(0, |s| s.inner.len())
}

/// # Safety
/// `samples` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sm_samples_dim(samples: *const SmSampleSet) -> usize {
    samples.as_ref().map_or(0, |s| s.inner.dim())
}

/// Runs an estimator and writes `dim` values to `out`. `out_k` may be null.
///
/// # Safety
/// `samples` and `config` must be valid; `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sm_estimate(
    samples: *const SmSampleSet,
    method: SmMethod,
    config: *const SmEstimatorConfig,
    out: *mut f64,
    out_len: usize,
    out_k: *mut usize,
) -> SmStatus {
    guard(|| {
        let (Some(samples), Some(config)) = (samples.as_ref(), config.as_ref()) else {
            return fail(SmStatus::NullPointer, "samples and config must be non-null");
        };
        if out.is_null() {
            return fail(SmStatus::NullPointer, "out must be non-null");
        }
        let dim = samples.inner.dim();
        if out_len < dim {
            return fail(SmStatus::BufferTooSmall, format!("output needs {dim} values, got {out_len}"));
        }
        let method = match method {
            SmMethod::SampleMean => Method::SampleMean,
            SmMethod::Mom => Method::Mom,
            SmMethod::GeomedianMom => Method::GeomedianMom,
            SmMethod::Lm => Method::Lm,
        };
        let config = EstimatorConfig {
            delta: config.delta,
            k_rule: k_rule(config.k_rule, config.fixed_k),
            odd_k: config.odd_k,
            seed: config.seed,
            ..EstimatorConfig::default()
        };
        match estimators::estimate(method, &samples.inner, &config) {
            Ok(est) => {
                std::slice::from_raw_parts_mut(out, dim).copy_from_slice(&est.point);
                if !out_k.is_null() {
                    *out_k = est.k.k;
                }
                SmStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Block count for `n` samples, clamped to `n` when the rule asks for more.
///
/// # Safety
/// `out_k` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_choose_k(
    delta: f64,
    n: usize,
    rule: SmKRule,
    fixed_k: usize,
    odd_k: bool,
    out_k: *mut usize,
) -> SmStatus {
    guard(|| {
        if out_k.is_null() {
            return fail(SmStatus::NullPointer, "out_k must be non-null");
        }
        match estimators::choose_k(delta, n, k_rule(rule, fixed_k), odd_k) {
            Ok(k) => {
                *out_k = k;
                SmStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Radius `max(c1·sqrt(trace/n), c2·sqrt(lambda_max·ln(2/delta)/n))`.
///
/// # Safety
/// `out_r` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_radius_bound(
    trace: f64,
    lambda_max: f64,
    n: usize,
    delta: f64,
    profile: SmProfile,
    out_r: *mut f64,
) -> SmStatus {
    guard(|| {
        if out_r.is_null() {
            return fail(SmStatus::NullPointer, "out_r must be non-null");
        }
        let profile = match profile {
            SmProfile::Paper => ConstantsProfile::Paper,
            SmProfile::Practical => ConstantsProfile::Practical,
        };
        match estimators::radius_bound(trace, lambda_max, n, delta, profile) {
            Ok(r) => {
                *out_r = r.r;
                SmStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Compares `a` and `b` over `k` contiguous blocks of `samples`.
///
/// # Safety
/// `a` and `b` must hold `dim` doubles each; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_defeats(
    samples: *const SmSampleSet,
    k: usize,
    a: *const f64,
    b: *const f64,
    out: *mut SmDefeat,
) -> SmStatus {
    guard(|| {
        let Some(samples) = samples.as_ref() else {
            return fail(SmStatus::NullPointer, "samples must be non-null");
        };
        if a.is_null() || b.is_null() || out.is_null() {
            return fail(SmStatus::NullPointer, "a, b and out must be non-null");
        }
        let dim = samples.inner.dim();
        let a = std::slice::from_raw_parts(a, dim);
        let b = std::slice::from_raw_parts(b, dim);
        let verdict = make_partition(&samples.inner, k).and_then(|p| defeats_raw(a, b, &samples.inner, &p));
        match verdict {
            Ok(v) => {
                *out = SmDefeat {
                    blocks_for_a: v.blocks_for_a,
                    blocks_for_b: v.blocks_for_b,
                    ties: v.ties,
                    k: v.k,
                    a_defeats_b: v.a_defeats_b(),
                    b_defeats_a: v.b_defeats_a(),
                };
                SmStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
