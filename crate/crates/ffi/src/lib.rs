//! C ABI over the solver.
//!
//! Problems and solutions are opaque handles released with their `_free` function.
//! Every entry point returns a [`CcStatus`]; on failure the message is available from
//! [`cc_last_error`] on the same thread until the next failing call. Panics are caught
//! at the boundary and reported as [`CcStatus::Panic`].
//!
//! Control signals cross the boundary as row-major `n_time_steps x control_dim` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use continuity_control::flow::ControlSignal;
use continuity_control::oracle::mc_cost;
use continuity_control::problem::{make_benchmark, parse_problem_config, Integrator, Overrides, ProblemInstance};
use continuity_control::solver::{cost_only, initial_control, solve, ResidualTolerance, SolverConfig, SolverState};
use continuity_control::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numeric = 4,
    BufferTooSmall = 5,
    Io = 6,
    Panic = 7,
}

/// Characteristic integrator selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcIntegrator {
    Euler = 0,
    Heun = 1,
}

/// Opaque problem handle.
pub struct CcProblem {
    inner: ProblemInstance,
}

/// Opaque solver result handle.
pub struct CcSolution {
    inner: SolverState,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(e: &Error) -> CcStatus {
    match e {
        Error::UnknownBenchmark(_)
        | Error::UnknownKey(_)
        | Error::FixedParameter { .. }
        | Error::InvalidParameter { .. }
        | Error::Config(_) => CcStatus::Config,
        Error::InvalidArgument(_)
        | Error::LengthMismatch { .. }
        | Error::Precondition(_)
        | Error::Unsupported(_)
        | Error::MissingBaseline(_) => CcStatus::InvalidArgument,
        Error::Io(_) => CcStatus::Io,
        _ => CcStatus::Numeric,
    }
}

struct Failure(CcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CcStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {message}"));
            CcStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CcStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CcStatus::InvalidArgument, format!("`{what}` is not valid UTF-8")))
}

unsafe fn read_signal(problem: &ProblemInstance, data: *const f64, len: usize) -> Result<ControlSignal, Failure> {
    let n = problem.n_time_steps;
    let m = problem.control_dim();
    if len != n * m {
        return Err(Failure(
            CcStatus::InvalidArgument,
            format!("control array has {len} entries, expected {n} x {m}"),
        ));
    }
    if data.is_null() && len > 0 {
        return Err(null("controls"));
    }
    let flat = if len == 0 { &[][..] } else { std::slice::from_raw_parts(data, len) };
    Ok(ControlSignal::from_flat(flat, m, problem.dt())?)
}

unsafe fn write_slice(values: &[f64], out: *mut f64, capacity: usize, written: *mut usize) -> Result<(), Failure> {
    if !written.is_null() {
        *written = values.len();
    }
    if capacity < values.len() {
        return Err(Failure(
            CcStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, need {}", values.len()),
        ));
    }
    if values.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(null("out"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

/// Message of the last failed call on this thread (empty if none). The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Built-in benchmark `name` ("boat", "pendulum" or "sheep") with default parameters.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_problem_from_benchmark(name: *const c_char, out: *mut *mut CcProblem) -> CcStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = ptr::null_mut();
        let problem = make_benchmark(as_str(name, "name")?, &Overrides::new())?;
        *out = Box::into_raw(Box::new(CcProblem { inner: problem }));
        Ok(())
    })
}

/// Problem from the text of a TOML configuration.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_problem_from_config(text: *const c_char, out: *mut *mut CcProblem) -> CcStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = ptr::null_mut();
        let problem = parse_problem_config(as_str(text, "text")?)?.build()?;
        *out = Box::into_raw(Box::new(CcProblem { inner: problem }));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from a `cc_problem_from_*` call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cc_problem_free(problem: *mut CcProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Change the time grid and the number of boundary points.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_problem_set_discretization(
    problem: *mut CcProblem,
    n_time_steps: usize,
    n_boundary_pts: usize,
) -> CcStatus {
    guard(|| {
        let p = as_mut(problem, "problem")?;
        let updated = p
            .inner
            .clone()
            .with_time_steps(n_time_steps)?
            .with_boundary_pts(n_boundary_pts)?;
        p.inner = updated;
        Ok(())
    })
}

/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_problem_set_integrator(problem: *mut CcProblem, integrator: CcIntegrator) -> CcStatus {
    guard(|| {
        let p = as_mut(problem, "problem")?;
        let chosen = match integrator {
            CcIntegrator::Euler => Integrator::Euler,
            CcIntegrator::Heun => Integrator::Heun,
        };
        p.inner = p.inner.clone().with_integrator(chosen);
        Ok(())
    })
}

/// # Safety
/// `problem` must be a live handle; the out pointers may be null to skip a value.
#[no_mangle]
pub unsafe extern "C" fn cc_problem_dimensions(
    problem: *const CcProblem,
    n_time_steps: *mut usize,
    control_dim: *mut usize,
    horizon: *mut f64,
) -> CcStatus {
    guard(|| {
        let p = &as_ref(problem, "problem")?.inner;
        if let Some(n) = n_time_steps.as_mut() {
            *n = p.n_time_steps;
        }
        if let Some(m) = control_dim.as_mut() {
            *m = p.control_dim();
        }
        if let Some(t) = horizon.as_mut() {
            *t = p.horizon;
        }
        Ok(())
    })
}

/// Cost of a control given as a row-major `n_time_steps x control_dim` array.
///
/// # Safety
/// `problem` must be a live handle, `controls` must hold `len` doubles and `cost` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_evaluate_cost(
    problem: *const CcProblem,
    controls: *const f64,
    len: usize,
    cost: *mut f64,
) -> CcStatus {
    guard(|| {
        let p = &as_ref(problem, "problem")?.inner;
        let cost = as_mut(cost, "cost")?;
        let signal = read_signal(p, controls, len)?;
        *cost = cost_only(p, &signal)?;
        Ok(())
    })
}

/// Monte-Carlo estimate of the cost of a control.
///
/// # Safety
/// As for [`cc_evaluate_cost`]; `value` and `std_error` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cc_mc_cost(
    problem: *const CcProblem,
    controls: *const f64,
    len: usize,
    n_samples: usize,
    seed: u64,
    value: *mut f64,
    std_error: *mut f64,
) -> CcStatus {
    guard(|| {
        let p = &as_ref(problem, "problem")?.inner;
        let value = as_mut(value, "value")?;
        let std_error = as_mut(std_error, "std_error")?;
        let signal = read_signal(p, controls, len)?;
        let estimate = mc_cost(p, &signal, n_samples, seed)?;
        *value = estimate.value;
        *std_error = estimate.std_error;
        Ok(())
    })
}

/// Run the solver from the default initial control. `tol_g <= 0` selects the default
/// relative residual tolerance; a positive value is an absolute tolerance.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_solve(
    problem: *const CcProblem,
    max_iters: usize,
    tol_g: f64,
    out: *mut *mut CcSolution,
) -> CcStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = ptr::null_mut();
        let p = &as_ref(problem, "problem")?.inner;
        if tol_g.is_nan() {
            return Err(Failure(CcStatus::InvalidArgument, "tol_g is NaN".into()));
        }
        let mut config = SolverConfig {
            max_iters,
            ..Default::default()
        };
        if tol_g > 0.0 {
            config.tol_g = ResidualTolerance::Absolute(tol_g);
        }
        let state = solve(p, initial_control(p)?, &config)?;
        *out = Box::into_raw(Box::new(CcSolution { inner: state }));
        Ok(())
    })
}

/// # Safety
/// `solution` must come from [`cc_solve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cc_solution_free(solution: *mut CcSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Final cost, final residual and the number of iterations run.
///
/// # Safety
/// `solution` must be a live handle; the out pointers may be null to skip a value.
#[no_mangle]
pub unsafe extern "C" fn cc_solution_summary(
    solution: *const CcSolution,
    cost: *mut f64,
    residual: *mut f64,
    iterations: *mut usize,
) -> CcStatus {
    guard(|| {
        let s = &as_ref(solution, "solution")?.inner;
        if let Some(c) = cost.as_mut() {
            *c = s.cost;
        }
        if let Some(r) = residual.as_mut() {
            *r = s.residual;
        }
        if let Some(k) = iterations.as_mut() {
            *k = s.iteration;
        }
        Ok(())
    })
}

/// Copy the cost sequence (initial cost first) into `out`. `written` receives the
/// required length even when the buffer is too small.
///
/// # Safety
/// `solution` must be a live handle; `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn cc_solution_cost_history(
    solution: *const CcSolution,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> CcStatus {
    guard(|| {
        let s = &as_ref(solution, "solution")?.inner;
        write_slice(&s.cost_history(), out, capacity, written)
    })
}

/// Copy the final control, row-major, into `out`.
///
/// # Safety
/// As for [`cc_solution_cost_history`].
#[no_mangle]
pub unsafe extern "C" fn cc_solution_control(
    solution: *const CcSolution,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> CcStatus {
    guard(|| {
        let s = &as_ref(solution, "solution")?.inner;
        write_slice(&s.control.flatten(), out, capacity, written)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(cc_last_error()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn panics_become_status_codes() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, CcStatus::Panic);
        assert_eq!(last_error(), "panic: boom");
    }

    #[test]
    fn errors_map_to_codes() {
        assert_eq!(status_of(&Error::UnknownKey("x".into())), CcStatus::Config);
        assert_eq!(status_of(&Error::TooFewVertices(3)), CcStatus::Numeric);
        assert_eq!(
            status_of(&Error::LengthMismatch { expected: 1, actual: 2 }),
            CcStatus::InvalidArgument
        );
    }

    #[test]
    fn version_is_the_crate_version() {
        let v = unsafe { CStr::from_ptr(cc_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
