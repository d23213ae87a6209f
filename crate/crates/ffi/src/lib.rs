//! C ABI for `fairalloc`.
//!
//! Instances and mechanism results are opaque handles created and destroyed
//! through this interface. Every fallible call returns a [`FaStatus`]; the
//! message of the most recent failure on the calling thread is available
//! from [`fa_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fairalloc::cli::harness::run_canonical;
use fairalloc::model::EPS;
use fairalloc::{fair_benchmark, properties, social_welfare, utilization, Error, Instance, Mechanism, MechanismResult};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    WrongArity = 3,
    UnknownMechanism = 4,
    BufferTooSmall = 5,
    SolverFailure = 6,
    Panic = 7,
}

/// Opaque instance handle.
pub struct FaInstance {
    inner: Instance,
}

/// Opaque mechanism result handle; keeps a copy of its instance.
pub struct FaResult {
    result: MechanismResult,
    instance: Instance,
}

/// Outcome of the four property checks (1 = holds, 0 = violated).
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FaProperties {
    pub sharing_incentive: u8,
    pub envy_free: u8,
    pub pareto_optimal: u8,
    pub non_wasteful: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> FaStatus {
    match err {
        Error::WrongArity { .. } | Error::OutOfDomain(_) => FaStatus::WrongArity,
        Error::Lp(_) | Error::DegenerateDenominator { .. } => FaStatus::SolverFailure,
        _ => FaStatus::InvalidInput,
    }
}

fn guard(body: impl FnOnce() -> Result<(), FaStatus>) -> FaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => FaStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("panic inside fairalloc".into());
            FaStatus::Panic
        }
    }
}

fn fail(err: Error) -> FaStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn null(what: &str) -> FaStatus {
    set_error(format!("{what} is null"));
    FaStatus::NullPointer
}

unsafe fn copy_out(values: impl ExactSizeIterator<Item = f64>, out: *mut f64, len: usize) -> Result<(), FaStatus> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len < values.len() {
        set_error(format!("buffer holds {len} values, {} needed", values.len()));
        return Err(FaStatus::BufferTooSmall);
    }
    for (k, v) in values.enumerate() {
        *out.add(k) = v;
    }
    Ok(())
}

/// Builds an instance from a row-major `agents x resources` demand matrix.
/// Rows are normalized by their maximum.
///
/// # Safety
/// `demands` must point to `agents * resources` readable doubles and `out`
/// must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn fa_instance_new(
    demands: *const f64,
    agents: usize,
    resources: usize,
    out: *mut *mut FaInstance,
) -> FaStatus {
    guard(|| {
        if demands.is_null() {
            return Err(null("demands"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let total = agents.checked_mul(resources).ok_or_else(|| fail(Error::ShapeMismatch("size overflow".into())))?;
        let flat = std::slice::from_raw_parts(demands, total);
        let rows = if resources == 0 { Vec::new() } else { flat.chunks(resources).map(<[f64]>::to_vec).collect() };
        let inner = Instance::new(rows).map_err(fail)?;
        *out = Box::into_raw(Box::new(FaInstance { inner }));
        Ok(())
    })
}

/// # Safety
/// `instance` must come from [`fa_instance_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fa_instance_free(instance: *mut FaInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// # Safety
/// `instance` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fa_instance_agents(instance: *const FaInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.agents())
}

/// # Safety
/// `instance` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fa_instance_resources(instance: *const FaInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.resources())
}

/// Runs the mechanism named by `tag` (`drf`, `f1`, `f2`, `f2star`,
/// `fg:SCORE`, `gf1[:R]`, `hybrid-sw`, `hybrid-util`). Two-resource
/// mechanisms get the same resource relabeling as the command line.
///
/// # Safety
/// `instance` must be live, `tag` a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fa_run(instance: *const FaInstance, tag: *const c_char, out: *mut *mut FaResult) -> FaStatus {
    guard(|| {
        let instance = instance.as_ref().ok_or_else(|| null("instance"))?;
        if tag.is_null() {
            return Err(null("tag"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let tag = CStr::from_ptr(tag).to_str().map_err(|_| {
            set_error("mechanism tag is not UTF-8".into());
            FaStatus::UnknownMechanism
        })?;
        let mechanism: Mechanism = tag.parse().map_err(|e: Error| {
            set_error(e.to_string());
            FaStatus::UnknownMechanism
        })?;
        let result = run_canonical(&mechanism, &instance.inner, EPS).map_err(fail)?;
        *out = Box::into_raw(Box::new(FaResult { result, instance: instance.inner.clone() }));
        Ok(())
    })
}

/// # Safety
/// `result` must come from [`fa_run`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fa_result_free(result: *mut FaResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Copies the dominant shares (one per agent).
///
/// # Safety
/// `result` must be live and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fa_result_shares(result: *const FaResult, out: *mut f64, len: usize) -> FaStatus {
    guard(|| {
        let result = result.as_ref().ok_or_else(|| null("result"))?;
        copy_out(result.result.allocation.shares.iter().copied(), out, len)
    })
}

/// Copies the allocation matrix row-major (`agents * resources` values).
///
/// # Safety
/// `result` must be live and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fa_result_matrix(result: *const FaResult, out: *mut f64, len: usize) -> FaStatus {
    guard(|| {
        let result = result.as_ref().ok_or_else(|| null("result"))?;
        let values: Vec<f64> = result.result.allocation.matrix.iter().flatten().copied().collect();
        copy_out(values.into_iter(), out, len)
    })
}

/// # Safety
/// `result` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fa_result_social_welfare(result: *const FaResult, out: *mut f64) -> FaStatus {
    guard(|| {
        let result = result.as_ref().ok_or_else(|| null("result"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = social_welfare(&result.result.allocation, &result.instance);
        Ok(())
    })
}

/// # Safety
/// `result` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fa_result_utilization(result: *const FaResult, out: *mut f64) -> FaStatus {
    guard(|| {
        let result = result.as_ref().ok_or_else(|| null("result"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = utilization(&result.result.allocation);
        Ok(())
    })
}

/// Runs the SI, EF, PO and non-wastefulness checks at the default tolerance.
///
/// # Safety
/// `result` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fa_result_check(result: *const FaResult, out: *mut FaProperties) -> FaStatus {
    guard(|| {
        let result = result.as_ref().ok_or_else(|| null("result"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let report = properties::verify(&result.result.allocation, &result.instance, EPS).map_err(fail)?;
        *out = FaProperties {
            sharing_incentive: report.si.pass.into(),
            envy_free: report.ef.pass.into(),
            pareto_optimal: report.po.is_some_and(|p| p.pass).into(),
            non_wasteful: report.non_wasteful.pass.into(),
        };
        Ok(())
    })
}

/// Best social welfare and utilization over fair allocations.
///
/// # Safety
/// `instance` must be live; `sw_opt` and `util_opt` writable.
#[no_mangle]
pub unsafe extern "C" fn fa_fair_benchmark(instance: *const FaInstance, sw_opt: *mut f64, util_opt: *mut f64) -> FaStatus {
    guard(|| {
        let instance = instance.as_ref().ok_or_else(|| null("instance"))?;
        let sw_opt = sw_opt.as_mut().ok_or_else(|| null("sw_opt"))?;
        let util_opt = util_opt.as_mut().ok_or_else(|| null("util_opt"))?;
        let bench = fair_benchmark(&instance.inner).map_err(fail)?;
        *sw_opt = bench.sw_opt;
        *util_opt = bench.util_opt;
        Ok(())
    })
}

/// Copies the last error message of this thread as a NUL-terminated string,
/// truncated to fit. Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must hold `len` bytes, or be null to query the length.
#[no_mangle]
pub unsafe extern "C" fn fa_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn fa_status_str(status: FaStatus) -> *const c_char {
    let s: &'static CStr = match status {
        FaStatus::Ok => c"ok",
        FaStatus::NullPointer => c"null pointer argument",
        FaStatus::InvalidInput => c"invalid input",
        FaStatus::WrongArity => c"mechanism does not apply to this many resources",
        FaStatus::UnknownMechanism => c"unknown mechanism tag",
        FaStatus::BufferTooSmall => c"output buffer too small",
        FaStatus::SolverFailure => c"linear program failed",
        FaStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}
