//! C ABI over `cone-core`.
//!
//! Every fallible call returns a [`ConeStatus`]; on failure the message is
//! available from [`cone_last_error`] on the same thread until the next
//! failing call. Handles are opaque and must be released with their `_free`
//! function. Decisions are 0-based. Panics never cross the boundary; they
//! surface as `CONE_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cone_core::allocation::{self, ConeParams, DEFAULT_MAX_REJECTIONS};
use cone_core::harness;
use cone_core::numerics;
use cone_core::sne::{self, SneParams};
use cone_core::{Context, ContextBox, Dataset, Decision, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Value = 3,
    Argument = 4,
    NoData = 5,
    StdUnavailable = 6,
    Uninitialized = 7,
    Numeric = 8,
    Config = 9,
    Io = 10,
    Parse = 11,
    Utf8 = 12,
    Panic = 13,
}

impl From<&Error> for ConeStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => ConeStatus::Domain,
            Error::Value(_) => ConeStatus::Value,
            Error::Argument(_) => ConeStatus::Argument,
            Error::NoData { .. } => ConeStatus::NoData,
            Error::StdUnavailable { .. } => ConeStatus::StdUnavailable,
            Error::Uninitialized(_) => ConeStatus::Uninitialized,
            Error::Numeric(_) => ConeStatus::Numeric,
            Error::Config(_) => ConeStatus::Config,
            Error::Io { .. } => ConeStatus::Io,
            Error::Parse { .. } => ConeStatus::Parse,
        }
    }
}

/// Observation history for one problem, with its estimator settings and a
/// private random stream for tie-breaking and sampling.
pub struct ConeDataset {
    data: Dataset,
    sne: SneParams,
    rng: ChaCha8Rng,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(ConeStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(ConeStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(ConeStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ConeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ConeStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            ConeStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn handle<'a>(ds: *const ConeDataset) -> Result<&'a ConeDataset, Fail> {
    ds.as_ref().ok_or_else(|| null("dataset"))
}

unsafe fn handle_mut<'a>(ds: *mut ConeDataset) -> Result<&'a mut ConeDataset, Fail> {
    ds.as_mut().ok_or_else(|| null("dataset"))
}

unsafe fn c_path<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Fail(ConeStatus::Utf8, "path is not valid UTF-8".into()))
}

unsafe fn query(ds: &ConeDataset, coords: *const f64, dim: usize) -> Result<Context, Fail> {
    if dim != ds.data.dim() {
        return Err(Fail(
            ConeStatus::Argument,
            format!("query has dimension {dim}, dataset has {}", ds.data.dim()),
        ));
    }
    Ok(Context::new(slice(coords, dim, "coords")?.to_vec()))
}

unsafe fn write<T>(out: *mut T, v: T) {
    if !out.is_null() {
        *out = v;
    }
}

unsafe fn new_handle(
    data: Dataset,
    xi: f64,
    seed: u64,
    out: *mut *mut ConeDataset,
) -> Result<(), Fail> {
    let sne = SneParams::for_box(data.context_box(), xi)?;
    let h = Box::new(ConeDataset {
        data,
        sne,
        rng: ChaCha8Rng::seed_from_u64(seed),
    });
    *out = Box::into_raw(h);
    Ok(())
}

/// Message of the last failing call on this thread, or null if none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn cone_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Create an empty dataset over the box `[lower, upper]` of dimension `dim`.
/// `xi` is the neighborhood exponent (0.5 is the usual choice); the radius
/// constant takes its default for the box. `seed` drives tie-breaking and
/// sampling on this handle.
///
/// # Safety
/// `lower` and `upper` must point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cone_dataset_new(
    lower: *const f64,
    upper: *const f64,
    dim: usize,
    n_decisions: usize,
    xi: f64,
    seed: u64,
    out: *mut *mut ConeDataset,
) -> ConeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let bx = ContextBox::new(slice(lower, dim, "lower")?.to_vec(), slice(upper, dim, "upper")?.to_vec())?;
        new_handle(Dataset::new(bx, n_decisions)?, xi, seed, out)
    })
}

/// Load a dataset saved by [`cone_dataset_save`] or by `cone run --save-datasets`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `lower`/`upper` must point to `dim`
/// doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cone_dataset_load(
    path: *const c_char,
    lower: *const f64,
    upper: *const f64,
    dim: usize,
    n_decisions: usize,
    xi: f64,
    seed: u64,
    out: *mut *mut ConeDataset,
) -> ConeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = c_path(path)?;
        let bx = ContextBox::new(slice(lower, dim, "lower")?.to_vec(), slice(upper, dim, "upper")?.to_vec())?;
        new_handle(harness::load_dataset(p, bx, n_decisions)?, xi, seed, out)
    })
}

/// Write the dataset as CSV (`stage,decision,y_1..y_d,value`).
///
/// # Safety
/// `ds` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cone_dataset_save(ds: *const ConeDataset, path: *const c_char) -> ConeStatus {
    guard(|| {
        let ds = handle(ds)?;
        harness::save_dataset(&ds.data, c_path(path)?)?;
        Ok(())
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cone_dataset_free(ds: *mut ConeDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of observations; 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cone_dataset_len(ds: *const ConeDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.data.len())
}

/// Dimension of the context box; 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cone_dataset_dim(ds: *const ConeDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.data.dim())
}

/// Append an observation; its 1-based stage is written to `stage` if non-null.
///
/// # Safety
/// `ds` must be a live handle; `coords` must point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn cone_dataset_append(
    ds: *mut ConeDataset,
    decision: usize,
    coords: *const f64,
    dim: usize,
    value: f64,
    stage: *mut usize,
) -> ConeStatus {
    guard(|| {
        let ds = handle_mut(ds)?;
        let ctx = query(ds, coords, dim)?;
        let t = ds.data.append(Decision(decision), ctx, value)?;
        write(stage, t);
        Ok(())
    })
}

/// Neighborhood estimate of `decision` at a query context.
///
/// Writes the neighborhood size to `psi`, its mean to `mean` and its sample
/// standard deviation, floored at 1e-6, to `std`. With fewer than two
/// members the call fails (`NO_DATA` or `STD_UNAVAILABLE`) after writing
/// whatever is defined (`psi`, and `mean` when `psi == 1`).
///
/// # Safety
/// `ds` must be a live handle; `coords` must point to `dim` doubles; each
/// output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn cone_sne_estimate(
    ds: *const ConeDataset,
    decision: usize,
    coords: *const f64,
    dim: usize,
    mean: *mut f64,
    std: *mut f64,
    psi: *mut usize,
) -> ConeStatus {
    guard(|| {
        let ds = handle(ds)?;
        let q = query(ds, coords, dim)?;
        let h = sne::neighborhood(&ds.data, Decision(decision), &q, &ds.sne)?;
        write(psi, h.psi);
        let m = h.mean.ok_or(Error::NoData { decision })?;
        write(mean, m);
        let s = h.std.ok_or(Error::StdUnavailable { decision, psi: h.psi })?;
        write(std, s.max(ds.sne.sigma_floor));
        Ok(())
    })
}

/// Decision with the smallest estimated mean at a query (ties broken at random).
///
/// # Safety
/// `ds` must be a live handle; `coords` must point to `dim` doubles;
/// `decision` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cone_predict_best(
    ds: *mut ConeDataset,
    coords: *const f64,
    dim: usize,
    decision: *mut usize,
) -> ConeStatus {
    guard(|| {
        let ds = handle_mut(ds)?;
        if decision.is_null() {
            return Err(null("decision"));
        }
        let q = query(ds, coords, dim)?;
        *decision = sne::predict_best(&ds.data, &q, &ds.sne, &mut ds.rng)?.0;
        Ok(())
    })
}

/// Next CONE sampling pair. `lambda_lo <= lambda_hi` truncate the sampling
/// field (0.01 and 100 are the usual choices). Every decision needs at least
/// two observations first. The context is written to `ctx_out` (`dim` doubles).
///
/// # Safety
/// `ds` must be a live handle; `decision` must be writable; `ctx_out` must
/// point to `dim` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cone_next(
    ds: *mut ConeDataset,
    lambda_lo: f64,
    lambda_hi: f64,
    decision: *mut usize,
    ctx_out: *mut f64,
    dim: usize,
) -> ConeStatus {
    guard(|| {
        let ds = handle_mut(ds)?;
        if decision.is_null() {
            return Err(null("decision"));
        }
        if dim != ds.data.dim() {
            return Err(Fail(
                ConeStatus::Argument,
                format!("output has dimension {dim}, dataset has {}", ds.data.dim()),
            ));
        }
        if ctx_out.is_null() && dim > 0 {
            return Err(null("ctx_out"));
        }
        let params = ConeParams::new(lambda_lo, lambda_hi, ds.sne, DEFAULT_MAX_REJECTIONS)?;
        let p = allocation::cone_next(&ds.data, &params, &mut ds.rng)?;
        *decision = p.decision.0;
        if dim > 0 {
            std::slice::from_raw_parts_mut(ctx_out, dim).copy_from_slice(p.context.coords());
        }
        Ok(())
    })
}

/// Default radius constant for a box of dimension `dim` and exponent `xi`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cone_default_c(dim: usize, xi: f64, out: *mut f64) -> ConeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let bx = ContextBox::cube(dim, 0.0, 1.0)?;
        *out = sne::default_c(&bx, xi)?;
        Ok(())
    })
}

/// Lower real branch of the Lambert W function, for `z` in `[-1/e, 0)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cone_lambert_w_minus1(z: f64, out: *mut f64) -> ConeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = numerics::lambert_w_minus1(z)?;
        Ok(())
    })
}

/// `-W_{-1}(-exp(-zeta - 1))` for `zeta > 0`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cone_neg_w_factor(zeta: f64, out: *mut f64) -> ConeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = numerics::neg_w_factor(zeta)?;
        Ok(())
    })
}
