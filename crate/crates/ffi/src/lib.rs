//! C ABI over `dyweights`.
//!
//! Weights are opaque `DwWeight` handles created by the `dw_weight_*`
//! constructors and released with `dw_weight_free`. Every fallible call
//! returns a `DwStatus`; on failure `dw_last_error` describes what went wrong
//! on the calling thread. Strings returned by the library are released with
//! `dw_string_free`.

#![deny(unsafe_op_in_unsafe_fn)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dyweights::norms::{op_norm, EstimateKind, Method, PowerConfig};
use dyweights::operators::{OperatorKind, SignAssignment};
use dyweights::verify::{self, CheckInput, SuiteOptions};
use dyweights::weights::{self, Weight, WeightSpec};
use dyweights::{DyadicTree, Error, LeafFn};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DepthOutOfRange = 3,
    LengthMismatch = 4,
    NotPositive = 5,
    DenseTooLarge = 6,
    UnknownCheck = 7,
    NotLinear = 8,
    Io = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DwOperator {
    Square = 0,
    Paraproduct = 1,
    ParaproductAdjoint = 2,
    Martingale = 3,
    T0 = 4,
    Maximal = 5,
    MaximalWeighted = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DwMethod {
    Dense = 0,
    Power = 1,
    Form = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DwEstimateKind {
    Exact = 0,
    ConvergedIterative = 1,
    LowerBound = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DwNormEstimate {
    pub value: f64,
    pub kind: DwEstimateKind,
    pub iterations: usize,
    pub residual: f64,
}

/// Iteration controls; `tol <= 0` or `max_iters == 0` select the defaults.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DwPowerConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

/// Opaque weight handle.
pub struct DwWeight {
    inner: Weight,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> DwStatus {
    match err {
        Error::DepthOutOfRange(_) | Error::DepthMismatch(..) => DwStatus::DepthOutOfRange,
        Error::LengthMismatch { .. } => DwStatus::LengthMismatch,
        Error::NonPositive(_) | Error::Negative(_) => DwStatus::NotPositive,
        Error::DenseTooLarge { .. } => DwStatus::DenseTooLarge,
        Error::UnknownCheck(_) => DwStatus::UnknownCheck,
        Error::NotLinear => DwStatus::NotLinear,
        Error::Io(_) | Error::Csv(_) => DwStatus::Io,
        _ => DwStatus::InvalidArgument,
    }
}

struct Fail(DwStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail(DwStatus::InvalidArgument, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(DwStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DwStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            DwStatus::Panic
        }
    }
}

unsafe fn weight_ref<'a>(p: *const DwWeight, what: &str) -> Result<&'a Weight, Fail> {
    // SAFETY: the caller passes a live handle or null.
    unsafe { p.as_ref() }
        .map(|w| &w.inner)
        .ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and NUL-terminated per the caller contract.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Fail(DwStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: `p` points to `len` readable doubles per the caller contract.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and writable per the caller contract.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn put_weight(out: *mut *mut DwWeight, w: Weight) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    let h = Box::into_raw(Box::new(DwWeight { inner: w }));
    // SAFETY: checked non-null above.
    unsafe { out.write(h) };
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    let c = CString::new(s).map_err(|e| Fail(DwStatus::InvalidArgument, e.to_string()))?;
    // SAFETY: checked non-null above.
    unsafe { out.write(c.into_raw()) };
    Ok(())
}

/// Message for the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` is null or came from this library and was not freed before.
#[no_mangle]
pub unsafe extern "C" fn dw_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by `CString::into_raw` in `put_string`.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Weight from `2^depth` positive leaf values.
///
/// # Safety
/// `values` points to `len` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dw_weight_from_values(
    depth: u32,
    values: *const f64,
    len: usize,
    out: *mut *mut DwWeight,
) -> DwStatus {
    guard(|| {
        let vals = unsafe { slice_arg(values, len, "values") }?;
        let w = Weight::from_values(DyadicTree::new(depth)?, vals.to_vec())?;
        unsafe { put_weight(out, w) }
    })
}

/// Weight from a JSON weight description.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dw_weight_from_json(
    json: *const c_char,
    out: *mut *mut DwWeight,
) -> DwStatus {
    guard(|| {
        let text = unsafe { str_arg(json, "json") }?;
        let spec: WeightSpec = serde_json::from_str(text)?;
        unsafe { put_weight(out, spec.build()?) }
    })
}

/// Cell averages of `x^alpha`, `alpha` in `(-1, 1)`.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dw_weight_power(
    alpha: f64,
    depth: u32,
    out: *mut *mut DwWeight,
) -> DwStatus {
    guard(|| unsafe { put_weight(out, weights::gen_power_weight(alpha, depth)?) })
}

/// Seeded random martingale weight with jump size `delta` in `(0, 1)`.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dw_weight_random(
    delta: f64,
    seed: u64,
    depth: u32,
    out: *mut *mut DwWeight,
) -> DwStatus {
    guard(|| unsafe { put_weight(out, weights::gen_random_a2_weight(depth, delta, seed)?) })
}

/// # Safety
/// `w` is null or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dw_weight_free(w: *mut DwWeight) {
    if !w.is_null() {
        // SAFETY: produced by `Box::into_raw` in `put_weight`.
        drop(unsafe { Box::from_raw(w) });
    }
}

/// Tree depth of the weight, 0 for a null handle.
///
/// # Safety
/// `w` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dw_weight_depth(w: *const DwWeight) -> u32 {
    unsafe { w.as_ref() }.map_or(0, |w| w.inner.tree().depth())
}

/// Copies the leaf values into `out`, which holds `len` doubles.
///
/// # Safety
/// `w` is a live handle; `out` points to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dw_weight_values(
    w: *const DwWeight,
    out: *mut f64,
    len: usize,
) -> DwStatus {
    guard(|| {
        let w = unsafe { weight_ref(w, "w") }?;
        let vals = w.values();
        if out.is_null() {
            return Err(null("out"));
        }
        if len != vals.len() {
            return Err(Error::LengthMismatch {
                expected: vals.len(),
                got: len,
            }
            .into());
        }
        // SAFETY: `out` holds `len == vals.len()` doubles.
        unsafe { ptr::copy_nonoverlapping(vals.as_ptr(), out, len) };
        Ok(())
    })
}

/// Joint characteristic `sup_I m_I(u^{-1}) m_I(v)`.
///
/// # Safety
/// `u`, `v` are live handles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dw_char_joint_a2(
    u: *const DwWeight,
    v: *const DwWeight,
    out: *mut f64,
) -> DwStatus {
    guard(|| {
        let (u, v) = unsafe { (weight_ref(u, "u")?, weight_ref(v, "v")?) };
        unsafe { put(out, weights::char_joint_a2(u, v)?.value, "out") }
    })
}

/// # Safety
/// `w` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dw_char_rh1(w: *const DwWeight, out: *mut f64) -> DwStatus {
    guard(|| {
        let w = unsafe { weight_ref(w, "w") }?;
        unsafe { put(out, weights::char_rh1(w).value, "out") }
    })
}

/// # Safety
/// `w` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dw_char_ainfty(w: *const DwWeight, out: *mut f64) -> DwStatus {
    guard(|| {
        let w = unsafe { weight_ref(w, "w") }?;
        unsafe { put(out, weights::char_ainfty(w).value, "out") }
    })
}

/// Norm of `op` from `L²(u)` to `L²(v)`.
///
/// `b` holds the paraproduct symbol's `2^depth` leaf values and is ignored
/// (may be null) for other operators. Martingale signs are drawn from
/// `cfg.seed`. A null `cfg` selects the defaults.
///
/// # Safety
/// `u`, `v` are live handles; `b` is null or points to `b_len` doubles;
/// `cfg` is null or readable; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dw_op_norm(
    op: DwOperator,
    method: DwMethod,
    u: *const DwWeight,
    v: *const DwWeight,
    b: *const f64,
    b_len: usize,
    cfg: *const DwPowerConfig,
    out: *mut DwNormEstimate,
) -> DwStatus {
    guard(|| {
        let (u, v) = unsafe { (weight_ref(u, "u")?, weight_ref(v, "v")?) };
        let mut pc = PowerConfig::default();
        if let Some(c) = unsafe { cfg.as_ref() } {
            if c.tol > 0.0 {
                pc.tol = c.tol;
            }
            if c.max_iters > 0 {
                pc.max_iters = c.max_iters;
            }
            pc.seed = c.seed;
        }
        let tree = u.tree();
        let symbol = || -> Result<LeafFn, Fail> {
            let vals = unsafe { slice_arg(b, b_len, "b") }?;
            Ok(LeafFn::new(tree, vals.to_vec())?)
        };
        let kind = match op {
            DwOperator::Square => OperatorKind::SquareFn,
            DwOperator::Paraproduct => OperatorKind::Paraproduct(symbol()?),
            DwOperator::ParaproductAdjoint => OperatorKind::ParaproductAdjoint(symbol()?),
            DwOperator::Martingale => {
                OperatorKind::Martingale(SignAssignment::random(tree, pc.seed))
            }
            DwOperator::T0 => OperatorKind::T0(u.clone(), v.clone()),
            DwOperator::Maximal => OperatorKind::MaximalFlat,
            DwOperator::MaximalWeighted => OperatorKind::MaximalWeighted(v.clone()),
        };
        let method = match method {
            DwMethod::Dense => Method::Dense,
            DwMethod::Power => Method::Power,
            DwMethod::Form => Method::Form,
        };
        let e = op_norm(&kind, u, v, method, &pc)?;
        let est = DwNormEstimate {
            value: e.value,
            kind: match e.kind {
                EstimateKind::Exact => DwEstimateKind::Exact,
                EstimateKind::ConvergedIterative => DwEstimateKind::ConvergedIterative,
                EstimateKind::LowerBound => DwEstimateKind::LowerBound,
            },
            iterations: e.iterations,
            residual: e.residual,
        };
        unsafe { put(out, est, "out") }
    })
}

/// Runs one registered check. `input_json` is a check input object
/// (`{"u": spec, "v": spec, "b": bspec?, "seed": n}`); the report is written
/// to `out` as JSON.
///
/// # Safety
/// `id` and `input_json` are NUL-terminated strings; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dw_check_json(
    id: *const c_char,
    input_json: *const c_char,
    out: *mut *mut c_char,
) -> DwStatus {
    guard(|| {
        let id = unsafe { str_arg(id, "id") }?;
        let input: CheckInput =
            serde_json::from_str(unsafe { str_arg(input_json, "input_json") }?)?;
        let report = verify::run_check(id, &input)?;
        unsafe { put_string(out, serde_json::to_string(&report)?) }
    })
}

/// Runs the default corpus at the given depths and writes the report CSV to
/// `out`. `exact_failures` receives the number of failed exact checks.
///
/// # Safety
/// `depths` points to `n_depths` values; `out` and `exact_failures` are
/// writable.
#[no_mangle]
pub unsafe extern "C" fn dw_suite_csv(
    depths: *const u32,
    n_depths: usize,
    seed: u64,
    out: *mut *mut c_char,
    exact_failures: *mut usize,
) -> DwStatus {
    guard(|| {
        if depths.is_null() {
            return Err(null("depths"));
        }
        // SAFETY: `depths` points to `n_depths` values.
        let ds = unsafe { std::slice::from_raw_parts(depths, n_depths) };
        let first = *ds
            .first()
            .ok_or_else(|| Fail(DwStatus::InvalidArgument, "no depths".into()))?;
        let res = verify::run_suite(
            &verify::default_corpus(first),
            &verify::default_bspecs(seed),
            ds,
            seed,
            &SuiteOptions::default(),
        )?;
        let mut buf = Vec::new();
        verify::write_csv(&res.reports, &mut buf)?;
        let text = String::from_utf8(buf).map_err(|e| Fail(DwStatus::Io, e.to_string()))?;
        unsafe {
            put(
                exact_failures,
                res.summary.exact_failures(),
                "exact_failures",
            )?;
            put_string(out, text)
        }
    })
}
