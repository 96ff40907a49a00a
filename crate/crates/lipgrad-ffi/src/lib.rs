//! C ABI for the solver and the test-function generator.
//!
//! Handles are opaque; every fallible call returns a [`LipgradStatus`] and
//! writes its output through pointers. The last error message is kept per
//! thread and can be copied out with [`lipgrad_last_error`]. A C header is
//! generated into `include/lipgrad.h` at build time.

use std::cell::RefCell;
use std::ffi::c_void;
use std::panic::{catch_unwind, AssertUnwindSafe};

use lipgrad::error::Error;
use lipgrad::gkls::{generate_function, ClassParams, GklsFunction};
use lipgrad::objective::Problem;
use lipgrad::run::{RunResult, StopReason};
use lipgrad::smoothd::{solve, SolverConfig};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LipgradStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DomainViolation = 3,
    EvaluationFailed = 4,
    BudgetExhausted = 5,
    GenerationFailed = 6,
    InternalError = 7,
}

/// Why a solver run ended.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LipgradStopReason {
    Converged = 0,
    BudgetExhausted = 1,
    TargetReached = 2,
}

/// Solver parameters; obtain defaults from
/// [`lipgrad_solver_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LipgradSolverConfig {
    /// Reliability base, must exceed 1.
    pub r_bar: f64,
    /// Adaptive term: the parameter at iteration k is `r_bar + c / k`.
    pub c: f64,
    /// Floor for the adaptive constant estimate.
    pub xi: f64,
    /// Stopping tolerance relative to the root diagonal.
    pub eps: f64,
    /// Trial budget.
    pub max_trials: u64,
}

/// Joint evaluation callback: write `f(x)` to `value_out` and, when
/// `grad_out` is non-null, the `n` gradient components to `grad_out`.
/// Return 0 on success; any other value aborts the run.
pub type LipgradEvalFn = Option<
    extern "C" fn(x: *const f64, n: usize, value_out: *mut f64, grad_out: *mut f64, user: *mut c_void) -> i32,
>;

/// Opaque generated test function.
pub struct LipgradGkls {
    function: GklsFunction,
}

/// Opaque run result.
pub struct LipgradRunResult {
    result: RunResult,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: impl Into<String>) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message.into());
}

fn status_of(err: &Error) -> LipgradStatus {
    match err {
        Error::InvalidConfig(_) | Error::UnknownInterval(_) => LipgradStatus::InvalidArgument,
        Error::DomainViolation { .. } => LipgradStatus::DomainViolation,
        Error::NonFiniteEvaluation { .. } | Error::VertexCollision { .. } => {
            LipgradStatus::EvaluationFailed
        }
        Error::Generation { .. } => LipgradStatus::GenerationFailed,
        _ => LipgradStatus::InternalError,
    }
}

fn fail(err: Error) -> LipgradStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn guarded(body: impl FnOnce() -> LipgradStatus) -> LipgradStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            LipgradStatus::InternalError
        }
    }
}

/// Copies the calling thread's last error message (NUL-terminated) into
/// `buf` and returns the untruncated message length in bytes.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null (query mode).
#[no_mangle]
pub unsafe extern "C" fn lipgrad_last_error(buf: *mut u8, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Default solver parameters.
#[no_mangle]
pub extern "C" fn lipgrad_solver_config_default() -> LipgradSolverConfig {
    let d = SolverConfig::default();
    LipgradSolverConfig {
        r_bar: d.r_bar,
        c: d.c,
        xi: d.xi,
        eps: d.eps,
        max_trials: d.max_trials,
    }
}

/// Generates function `index` (1..=100) of standard class `class_id`
/// (1..=8) and returns an owned handle through `out`.
///
/// # Safety
/// `out` must be a valid pointer. The handle must be released with
/// [`lipgrad_gkls_destroy`].
#[no_mangle]
pub unsafe extern "C" fn lipgrad_gkls_create(
    class_id: u8,
    index: u32,
    seed: u64,
    out: *mut *mut LipgradGkls,
) -> LipgradStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out pointer is null");
            return LipgradStatus::NullPointer;
        }
        let params = match ClassParams::table_class(class_id, seed) {
            Ok(p) => p,
            Err(e) => return fail(e),
        };
        match generate_function(&params, index as usize) {
            Ok(function) => {
                let handle = Box::new(LipgradGkls { function });
                unsafe { *out = Box::into_raw(handle) };
                LipgradStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a generated function handle. Null is a no-op.
///
/// # Safety
/// `handle` must come from [`lipgrad_gkls_create`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn lipgrad_gkls_destroy(handle: *mut LipgradGkls) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Dimension of the generated function, or 0 for a null handle.
///
/// # Safety
/// `handle` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn lipgrad_gkls_dimension(handle: *const LipgradGkls) -> usize {
    if handle.is_null() {
        return 0;
    }
    unsafe { &*handle }.function.dimension()
}

unsafe fn slice_arg<'a>(x: *const f64, n: usize) -> Option<&'a [f64]> {
    if x.is_null() {
        None
    } else {
        Some(unsafe { std::slice::from_raw_parts(x, n) })
    }
}

/// Evaluates the function at `x` (length `n`).
///
/// # Safety
/// `x` must point to `n` doubles; `value_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lipgrad_gkls_eval(
    handle: *const LipgradGkls,
    x: *const f64,
    n: usize,
    value_out: *mut f64,
) -> LipgradStatus {
    guarded(|| {
        if handle.is_null() || value_out.is_null() {
            set_error("null pointer argument");
            return LipgradStatus::NullPointer;
        }
        let Some(x) = (unsafe { slice_arg(x, n) }) else {
            set_error("x is null");
            return LipgradStatus::NullPointer;
        };
        match unsafe { &*handle }.function.eval_f(x) {
            Ok(v) => {
                unsafe { *value_out = v };
                LipgradStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Writes the analytic gradient at `x` into `grad_out` (length `n`).
///
/// # Safety
/// `x` and `grad_out` must point to `n` doubles each.
#[no_mangle]
pub unsafe extern "C" fn lipgrad_gkls_gradient(
    handle: *const LipgradGkls,
    x: *const f64,
    n: usize,
    grad_out: *mut f64,
) -> LipgradStatus {
    guarded(|| {
        if handle.is_null() || grad_out.is_null() {
            set_error("null pointer argument");
            return LipgradStatus::NullPointer;
        }
        let Some(x) = (unsafe { slice_arg(x, n) }) else {
            set_error("x is null");
            return LipgradStatus::NullPointer;
        };
        match unsafe { &*handle }.function.eval_grad(x) {
            Ok(g) => {
                unsafe { std::ptr::copy_nonoverlapping(g.as_ptr(), grad_out, g.len()) };
                LipgradStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Writes the known global minimizer into `x_out` (length `n`) and its
/// value into `value_out` (which may be null).
///
/// # Safety
/// `x_out` must point to `n` doubles; `n` must equal the dimension.
#[no_mangle]
pub unsafe extern "C" fn lipgrad_gkls_minimizer(
    handle: *const LipgradGkls,
    x_out: *mut f64,
    n: usize,
    value_out: *mut f64,
) -> LipgradStatus {
    guarded(|| {
        if handle.is_null() || x_out.is_null() {
            set_error("null pointer argument");
            return LipgradStatus::NullPointer;
        }
        let function = &unsafe { &*handle }.function;
        if n != function.dimension() {
            set_error(format!(
                "buffer length {n} does not match dimension {}",
                function.dimension()
            ));
            return LipgradStatus::InvalidArgument;
        }
        let (x_star, f_star) = function.global_minimizer();
        unsafe {
            std::ptr::copy_nonoverlapping(x_star.as_ptr(), x_out, n);
            if !value_out.is_null() {
                *value_out = f_star;
            }
        }
        LipgradStatus::Ok
    })
}

struct UserData(*mut c_void);
// Callback and context are handed over by the caller, who guarantees they
// may be invoked from this thread for the duration of the call.
unsafe impl Send for UserData {}
unsafe impl Sync for UserData {}

impl UserData {
    fn get(&self) -> *mut c_void {
        self.0
    }
}

fn config_of(config: *const LipgradSolverConfig) -> SolverConfig {
    let defaults = SolverConfig::default();
    if config.is_null() {
        return defaults;
    }
    let c = unsafe { &*config };
    SolverConfig {
        r_bar: c.r_bar,
        c: c.c,
        xi: c.xi,
        eps: c.eps,
        max_trials: c.max_trials,
        r_ladder: None,
    }
}

fn run_solver(
    problem: &Problem,
    config: SolverConfig,
    out: *mut *mut LipgradRunResult,
) -> LipgradStatus {
    match solve(problem, &config) {
        Ok(result) => {
            let exhausted = result.stop == StopReason::BudgetExhausted;
            let handle = Box::new(LipgradRunResult { result });
            unsafe { *out = Box::into_raw(handle) };
            if exhausted {
                set_error("trial budget exhausted");
                LipgradStatus::BudgetExhausted
            } else {
                LipgradStatus::Ok
            }
        }
        Err(e) => fail(e),
    }
}

/// Minimizes a caller-supplied objective over the box `[lower, upper]`.
/// On `BUDGET_EXHAUSTED` a result handle is still returned with the best
/// point found. `config` may be null for defaults.
///
/// # Safety
/// `lower` and `upper` must point to `dimension` doubles; `evaluator` must
/// be callable with the documented contract for the duration of the call;
/// `out` must be writable. Release the handle with
/// [`lipgrad_result_destroy`].
#[no_mangle]
pub unsafe extern "C" fn lipgrad_solve(
    dimension: usize,
    lower: *const f64,
    upper: *const f64,
    evaluator: LipgradEvalFn,
    user: *mut c_void,
    config: *const LipgradSolverConfig,
    out: *mut *mut LipgradRunResult,
) -> LipgradStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out pointer is null");
            return LipgradStatus::NullPointer;
        }
        let (Some(lower), Some(upper)) =
            (unsafe { slice_arg(lower, dimension) }, unsafe { slice_arg(upper, dimension) })
        else {
            set_error("bounds are null");
            return LipgradStatus::NullPointer;
        };
        let Some(eval) = evaluator else {
            set_error("evaluator is null");
            return LipgradStatus::NullPointer;
        };
        let user = UserData(user);
        let dim = dimension;
        let problem = match Problem::new(lower.to_vec(), upper.to_vec(), move |x| {
            let mut value = f64::NAN;
            let mut grad = vec![f64::NAN; dim];
            let rc = eval(x.as_ptr(), dim, &mut value, grad.as_mut_ptr(), user.get());
            if rc != 0 {
                // poison the outputs so the run aborts with a clear error
                value = f64::NAN;
                grad.fill(f64::NAN);
            }
            (value, grad)
        }) {
            Ok(p) => p,
            Err(e) => return fail(e),
        };
        run_solver(&problem, config_of(config), out)
    })
}

/// Minimizes a generated test function with its analytic gradient.
///
/// # Safety
/// `handle` must be a valid generated-function handle; `out` must be
/// writable. Release the result with [`lipgrad_result_destroy`].
#[no_mangle]
pub unsafe extern "C" fn lipgrad_solve_gkls(
    handle: *const LipgradGkls,
    config: *const LipgradSolverConfig,
    out: *mut *mut LipgradRunResult,
) -> LipgradStatus {
    guarded(|| {
        if handle.is_null() || out.is_null() {
            set_error("null pointer argument");
            return LipgradStatus::NullPointer;
        }
        let problem = match unsafe { &*handle }.function.to_problem() {
            Ok(p) => p,
            Err(e) => return fail(e),
        };
        run_solver(&problem, config_of(config), out)
    })
}

/// Releases a run result. Null is a no-op.
///
/// # Safety
/// `handle` must come from a solve call and not be used again.
#[no_mangle]
pub unsafe extern "C" fn lipgrad_result_destroy(handle: *mut LipgradRunResult) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Best objective value found.
///
/// # Safety
/// `handle` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lipgrad_result_best_value(handle: *const LipgradRunResult) -> f64 {
    unsafe { &*handle }.result.best_value
}

/// Total trials performed.
///
/// # Safety
/// `handle` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lipgrad_result_trials(handle: *const LipgradRunResult) -> u64 {
    unsafe { &*handle }.result.trials
}

/// Iterations performed.
///
/// # Safety
/// `handle` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lipgrad_result_iterations(handle: *const LipgradRunResult) -> u64 {
    unsafe { &*handle }.result.iterations
}

/// Evaluations served from the shared vertex database.
///
/// # Safety
/// `handle` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lipgrad_result_reuse_hits(handle: *const LipgradRunResult) -> u64 {
    unsafe { &*handle }.result.reuse_hits
}

/// Why the run stopped.
///
/// # Safety
/// `handle` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lipgrad_result_stop_reason(
    handle: *const LipgradRunResult,
) -> LipgradStopReason {
    match unsafe { &*handle }.result.stop {
        StopReason::Converged => LipgradStopReason::Converged,
        StopReason::BudgetExhausted => LipgradStopReason::BudgetExhausted,
        StopReason::TargetReached => LipgradStopReason::TargetReached,
    }
}

/// Copies the best point found into `x_out` (length `n`).
///
/// # Safety
/// `x_out` must point to `n` doubles; `n` must equal the dimension.
#[no_mangle]
pub unsafe extern "C" fn lipgrad_result_best_point(
    handle: *const LipgradRunResult,
    x_out: *mut f64,
    n: usize,
) -> LipgradStatus {
    guarded(|| {
        if handle.is_null() || x_out.is_null() {
            set_error("null pointer argument");
            return LipgradStatus::NullPointer;
        }
        let best = &unsafe { &*handle }.result.best_point;
        if n != best.len() {
            set_error(format!("buffer length {n} does not match dimension {}", best.len()));
            return LipgradStatus::InvalidArgument;
        }
        unsafe { std::ptr::copy_nonoverlapping(best.as_ptr(), x_out, n) };
        LipgradStatus::Ok
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gkls_round_trip_through_the_c_abi() {
        unsafe {
            let mut handle: *mut LipgradGkls = std::ptr::null_mut();
            let status = lipgrad_gkls_create(1, 58, 1729, &mut handle);
            assert_eq!(status, LipgradStatus::Ok);
            let dim = lipgrad_gkls_dimension(handle);
            assert_eq!(dim, 2);

            let mut x_star = vec![0.0; dim];
            let mut f_star = 0.0;
            assert_eq!(
                lipgrad_gkls_minimizer(handle, x_star.as_mut_ptr(), dim, &mut f_star),
                LipgradStatus::Ok
            );
            assert_eq!(f_star, -1.0);

            let mut value = 0.0;
            assert_eq!(
                lipgrad_gkls_eval(handle, x_star.as_ptr(), dim, &mut value),
                LipgradStatus::Ok
            );
            assert!((value + 1.0).abs() < 1e-12);

            let mut grad = vec![1.0; dim];
            assert_eq!(
                lipgrad_gkls_gradient(handle, x_star.as_ptr(), dim, grad.as_mut_ptr()),
                LipgradStatus::Ok
            );
            assert!(grad.iter().all(|g| g.abs() < 1e-12));

            let outside = [2.0, 0.0];
            let status = lipgrad_gkls_eval(handle, outside.as_ptr(), dim, &mut value);
            assert_eq!(status, LipgradStatus::DomainViolation);
            let mut buf = vec![0u8; 256];
            let len = lipgrad_last_error(buf.as_mut_ptr(), buf.len());
            assert!(len > 0);

            lipgrad_gkls_destroy(handle);
        }
    }

    #[test]
    fn solve_gkls_through_the_c_abi() {
        unsafe {
            let mut handle: *mut LipgradGkls = std::ptr::null_mut();
            assert_eq!(
                lipgrad_gkls_create(1, 3, 1729, &mut handle),
                LipgradStatus::Ok
            );
            let mut config = lipgrad_solver_config_default();
            config.r_bar = 5.8;
            let mut result: *mut LipgradRunResult = std::ptr::null_mut();
            assert_eq!(
                lipgrad_solve_gkls(handle, &config, &mut result),
                LipgradStatus::Ok
            );
            assert!(lipgrad_result_best_value(result) < -0.99);
            assert!(lipgrad_result_trials(result) > 2);
            assert_eq!(
                lipgrad_result_stop_reason(result),
                LipgradStopReason::Converged
            );
            let mut point = vec![0.0; 2];
            assert_eq!(
                lipgrad_result_best_point(result, point.as_mut_ptr(), 2),
                LipgradStatus::Ok
            );
            lipgrad_result_destroy(result);
            lipgrad_gkls_destroy(handle);
        }
    }

    extern "C" fn paraboloid(
        x: *const f64,
        n: usize,
        value_out: *mut f64,
        grad_out: *mut f64,
        user: *mut c_void,
    ) -> i32 {
        let shift = unsafe { *(user as *const f64) };
        let x = unsafe { std::slice::from_raw_parts(x, n) };
        let mut value = 0.0;
        for (j, xi) in x.iter().enumerate() {
            let d = xi - shift;
            value += d * d;
            unsafe { *grad_out.add(j) = 2.0 * d };
        }
        unsafe { *value_out = value };
        0
    }

    #[test]
    fn solve_with_callback_evaluator() {
        unsafe {
            let shift = 0.25f64;
            let lower = [0.0, 0.0];
            let upper = [1.0, 1.0];
            let mut result: *mut LipgradRunResult = std::ptr::null_mut();
            let status = lipgrad_solve(
                2,
                lower.as_ptr(),
                upper.as_ptr(),
                Some(paraboloid),
                &shift as *const f64 as *mut c_void,
                std::ptr::null(),
                &mut result,
            );
            assert_eq!(status, LipgradStatus::Ok);
            let mut best = vec![0.0; 2];
            assert_eq!(
                lipgrad_result_best_point(result, best.as_mut_ptr(), 2),
                LipgradStatus::Ok
            );
            assert!((best[0] - 0.25).abs() < 0.01);
            assert!((best[1] - 0.25).abs() < 0.01);
            lipgrad_result_destroy(result);
        }
    }

    extern "C" fn failing_eval(
        _x: *const f64,
        _n: usize,
        _value_out: *mut f64,
        _grad_out: *mut f64,
        _user: *mut c_void,
    ) -> i32 {
        -1
    }

    #[test]
    fn callback_failure_surfaces_as_evaluation_error() {
        unsafe {
            let lower = [0.0];
            let upper = [1.0];
            let mut result: *mut LipgradRunResult = std::ptr::null_mut();
            let status = lipgrad_solve(
                1,
                lower.as_ptr(),
                upper.as_ptr(),
                Some(failing_eval),
                std::ptr::null_mut(),
                std::ptr::null(),
                &mut result,
            );
            assert_eq!(status, LipgradStatus::EvaluationFailed);
            assert!(result.is_null());
        }
    }

    #[test]
    fn invalid_class_is_rejected() {
        unsafe {
            let mut handle: *mut LipgradGkls = std::ptr::null_mut();
            assert_eq!(
                lipgrad_gkls_create(9, 1, 0, &mut handle),
                LipgradStatus::InvalidArgument
            );
            assert!(handle.is_null());
        }
    }
}
