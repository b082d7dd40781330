//! C ABI over the `qpaug` library.
//!
//! Instances and solutions are opaque handles created by this library and
//! released with the matching `*_free` function. Every fallible call returns a
//! [`QpaugStatus`]; on failure the message is available from
//! [`qpaug_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qpaug::generators::{gen_lp, gen_qp};
use qpaug::io::{from_json, to_json};
use qpaug::transforms::{apply_policy, AugmentPolicy};
use qpaug::{kkt_residuals, solve_splitting, Error, LcqpInstance, SolveError, Solution, SolverConfig};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QpaugStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Dimension = 3,
    SolutionRequired = 4,
    Infeasible = 5,
    Unbounded = 6,
    NotConverged = 7,
    NotConvex = 8,
    BufferTooSmall = 9,
    Panic = 10,
    Other = 11,
}

/// Opaque instance handle.
pub struct QpaugInstance(LcqpInstance);

/// Opaque primal/dual solution handle.
pub struct QpaugSolution(Solution);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QpaugStatus {
    match e {
        Error::Dimension(_) => QpaugStatus::Dimension,
        Error::InvalidInput(_) | Error::NonFinite(_) | Error::Asymmetric { .. } | Error::Format(_) => {
            QpaugStatus::InvalidInput
        }
        Error::SolutionRequired { .. } => QpaugStatus::SolutionRequired,
        Error::NotPositiveDefinite { .. } => QpaugStatus::NotConvex,
        Error::Solve(s) => solve_status(s),
        _ => QpaugStatus::Other,
    }
}

fn solve_status(e: &SolveError) -> QpaugStatus {
    match e {
        SolveError::Unconverged { .. } => QpaugStatus::NotConverged,
        SolveError::Unbounded => QpaugStatus::Unbounded,
        SolveError::Infeasible | SolveError::InfeasibleOrUnbounded => QpaugStatus::Infeasible,
        SolveError::NotConvex => QpaugStatus::NotConvex,
        SolveError::TooLarge { .. } | SolveError::InvalidConfig(_) => QpaugStatus::InvalidInput,
    }
}

struct Fail(QpaugStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

impl From<SolveError> for Fail {
    fn from(e: SolveError) -> Self {
        Fail(solve_status(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(QpaugStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QpaugStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QpaugStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            QpaugStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(QpaugStatus::InvalidInput, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failing call on this thread, or null. Owned by the
/// library and valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn qpaug_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses an instance file's JSON text. `*out_sol` receives the stored
/// solution or null; pass `out_sol = NULL` to ignore it.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpaug_instance_from_json(
    json: *const c_char,
    out: *mut *mut QpaugInstance,
    out_sol: *mut *mut QpaugSolution,
) -> QpaugStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let out = out_arg(out, "out")?;
        let li = from_json(text)?;
        if let Some(slot) = out_sol.as_mut() {
            *slot = li.solution.map_or(ptr::null_mut(), |s| boxed(QpaugSolution(s)));
        }
        *out = boxed(QpaugInstance(li.instance));
        Ok(())
    })
}

/// Serializes an instance, with `sol` as its label when non-null. Release the
/// string with [`qpaug_string_free`].
///
/// # Safety
/// Handles must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpaug_instance_to_json(
    inst: *const QpaugInstance,
    sol: *const QpaugSolution,
    out: *mut *mut c_char,
) -> QpaugStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let out = out_arg(out, "out")?;
        let text = to_json(&inst.0, sol.as_ref().map(|s| &s.0))?;
        *out = CString::new(text).map_err(|e| Fail(QpaugStatus::Other, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Random LP (`qp == 0`) or strictly convex QP with `m` rows, `n` variables
/// and the given densities. `density_q` is ignored for LPs.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpaug_generate(
    qp: i32,
    m: usize,
    n: usize,
    density_a: f64,
    density_q: f64,
    seed: u64,
    out: *mut *mut QpaugInstance,
) -> QpaugStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inst = if qp != 0 {
            gen_qp(m, n, density_a, density_q, seed)?
        } else {
            gen_lp(m, n, density_a, seed)?
        };
        *out = boxed(QpaugInstance(inst));
        Ok(())
    })
}

/// Writes the variable and constraint counts.
///
/// # Safety
/// `inst` must come from this library; `n` and `m` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpaug_instance_dims(inst: *const QpaugInstance, n: *mut usize, m: *mut usize) -> QpaugStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        *out_arg(n, "n")? = inst.0.n();
        *out_arg(m, "m")? = inst.0.m();
        Ok(())
    })
}

/// Solves with the splitting method. Non-positive `tol` or zero `max_iter`
/// select the defaults.
///
/// # Safety
/// `inst` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpaug_solve(
    inst: *const QpaugInstance,
    tol: f64,
    max_iter: usize,
    out: *mut *mut QpaugSolution,
) -> QpaugStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let out = out_arg(out, "out")?;
        let d = SolverConfig::default();
        let cfg = SolverConfig {
            tol: if tol > 0.0 { tol } else { d.tol },
            max_iter: if max_iter > 0 { max_iter } else { d.max_iter },
            ..d
        };
        *out = boxed(QpaugSolution(solve_splitting(&inst.0, &cfg)?));
        Ok(())
    })
}

/// Largest KKT residual of `sol` (relative when `relative != 0`).
///
/// # Safety
/// Handles must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpaug_kkt_max_residual(
    inst: *const QpaugInstance,
    sol: *const QpaugSolution,
    relative: i32,
    out: *mut f64,
) -> QpaugStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        *out_arg(out, "out")? = kkt_residuals(&inst.0, &sol.0, relative != 0)?.max_residual();
        Ok(())
    })
}

/// Objective value of `sol`.
///
/// # Safety
/// `sol` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpaug_solution_objective(sol: *const QpaugSolution, out: *mut f64) -> QpaugStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        *out_arg(out, "out")? = sol.0.objective;
        Ok(())
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Fail> {
    if len < src.len() {
        return Err(Fail(
            QpaugStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

/// Copies the primal vector (length n) into `buf`.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qpaug_solution_x(sol: *const QpaugSolution, buf: *mut f64, len: usize) -> QpaugStatus {
    guard(|| copy_out(&sol.as_ref().ok_or_else(|| null("sol"))?.0.x, buf, len))
}

/// Copies the multipliers (length m) into `buf`.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qpaug_solution_lambda(sol: *const QpaugSolution, buf: *mut f64, len: usize) -> QpaugStatus {
    guard(|| copy_out(&sol.as_ref().ok_or_else(|| null("sol"))?.0.lam, buf, len))
}

/// Applies the ops in `ops` (`name:strength,...`) with strengths used as
/// given. `sol` may be null when every op is solution-independent.
/// `*out_sol` receives the mapped solution or null.
///
/// # Safety
/// Handles must come from this library; `ops` must be NUL-terminated;
/// `out` and `out_sol` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpaug_augment(
    inst: *const QpaugInstance,
    sol: *const QpaugSolution,
    ops: *const c_char,
    ops_per_instance: usize,
    seed: u64,
    out: *mut *mut QpaugInstance,
    out_sol: *mut *mut QpaugSolution,
) -> QpaugStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let strengths = AugmentPolicy::parse_ops(str_arg(ops, "ops")?)?;
        let out = out_arg(out, "out")?;
        let out_sol = out_arg(out_sol, "out_sol")?;
        let policy = AugmentPolicy {
            strengths,
            ops_per_instance,
            interpolate: false,
            seed,
        };
        let res = apply_policy(&inst.0, sol.as_ref().map(|s| &s.0), &policy)?;
        *out_sol = res.solution.map_or(ptr::null_mut(), |s| boxed(QpaugSolution(s)));
        *out = boxed(QpaugInstance(res.instance));
        Ok(())
    })
}

/// # Safety
/// `inst` must come from this library (or be null) and not be used after.
#[no_mangle]
pub unsafe extern "C" fn qpaug_instance_free(inst: *mut QpaugInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// # Safety
/// `sol` must come from this library (or be null) and not be used after.
#[no_mangle]
pub unsafe extern "C" fn qpaug_solution_free(sol: *mut QpaugSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// # Safety
/// `s` must come from [`qpaug_instance_to_json`] (or be null).
#[no_mangle]
pub unsafe extern "C" fn qpaug_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
