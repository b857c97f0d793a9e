//! C ABI over `influence-core`.
//!
//! Scenarios and traces cross the boundary as opaque handles that must be released with their
//! `*_free` function. Every fallible call returns an [`InflStatus`]; on failure a description is
//! available from [`infl_last_error`] on the same thread. Strings returned by the library are
//! released with [`infl_string_free`].

use influence_core::io::{parse_scenario, write_trace, TraceFormat};
use influence_core::{
    compute_weights, quality_coefficient, simulate, solve_utility_min_norm, update_relationship,
    Branch, Error, InfluenceMatrix, ModelOptions, PerformanceVector, Scenario, SimulationTrace,
    UtilityMatrix,
};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InflStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad input: syntax, validation, shape or domain error.
    InvalidInput = 2,
    /// Numerical failure: infeasible row, degenerate ranking, no convergence.
    Numerical = 3,
    InvalidUtf8 = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InflBranch {
    OneZero = 0,
    Equal = 1,
    Ratio = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InflTraceFormat {
    Table = 0,
    Structured = 1,
}

/// Opaque validated scenario.
pub struct InflScenario(Scenario);

/// Opaque simulation trace.
pub struct InflTrace(SimulationTrace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> InflStatus {
    set_error(err.to_string());
    if err.is_numerical() {
        InflStatus::Numerical
    } else {
        InflStatus::InvalidInput
    }
}

fn guard(f: impl FnOnce() -> InflStatus) -> InflStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            InflStatus::Panic
        }
    }
}

/// Message for the last failed call on this thread, or NULL. Valid until the next call.
#[no_mangle]
pub extern "C" fn infl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn infl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a scenario document.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn infl_scenario_parse(
    text: *const c_char,
    out: *mut *mut InflScenario,
) -> InflStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            set_error("null argument");
            return InflStatus::NullPointer;
        }
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            set_error("scenario text is not UTF-8");
            return InflStatus::InvalidUtf8;
        };
        match parse_scenario(text) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(InflScenario(s)));
                InflStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// # Safety
/// `s` must be NULL or a handle from [`infl_scenario_parse`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn infl_scenario_free(s: *mut InflScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of subsystems, or 0 for NULL.
///
/// # Safety
/// `s` must be NULL or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn infl_scenario_size(s: *const InflScenario) -> usize {
    s.as_ref().map_or(0, |s| s.0.subsystems.len())
}

/// Default horizon stored in the scenario, or 0 for NULL.
///
/// # Safety
/// `s` must be NULL or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn infl_scenario_horizon(s: *const InflScenario) -> usize {
    s.as_ref().map_or(0, |s| s.0.horizon)
}

/// Runs `horizon` steps; 0 uses the scenario's own horizon.
///
/// # Safety
/// `s` must be a live scenario handle; `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn infl_simulate(
    s: *const InflScenario,
    horizon: usize,
    out: *mut *mut InflTrace,
) -> InflStatus {
    guard(|| {
        let (Some(s), false) = (s.as_ref(), out.is_null()) else {
            set_error("null argument");
            return InflStatus::NullPointer;
        };
        let horizon = if horizon == 0 { s.0.horizon } else { horizon };
        match simulate(&s.0, horizon) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(InflTrace(t)));
                InflStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// # Safety
/// `t` must be NULL or a handle from [`infl_simulate`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn infl_trace_free(t: *mut InflTrace) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `t` must be NULL or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn infl_trace_len(t: *const InflTrace) -> usize {
    t.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `t` must be NULL or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn infl_trace_dim(t: *const InflTrace) -> usize {
    t.as_ref().map_or(0, |t| t.0.subsystems().len())
}

/// Copies step `k`: its timestamp, `n` performance values and the `n*n` row-major strengths.
/// Any output pointer may be NULL to skip it.
///
/// # Safety
/// `t` must be a live trace handle; non-NULL outputs must hold 1, `n` and `n*n` values.
#[no_mangle]
pub unsafe extern "C" fn infl_trace_step(
    t: *const InflTrace,
    k: usize,
    t_out: *mut i64,
    w_out: *mut f64,
    r_out: *mut f64,
) -> InflStatus {
    guard(|| {
        let Some(trace) = t.as_ref() else {
            set_error("null trace");
            return InflStatus::NullPointer;
        };
        let Some(step) = trace.0.steps().get(k) else {
            set_error(format!("step {k} out of range (len {})", trace.0.len()));
            return InflStatus::InvalidInput;
        };
        if !t_out.is_null() {
            *t_out = step.timestamp();
        }
        if !w_out.is_null() {
            ptr::copy_nonoverlapping(step.w.values().as_ptr(), w_out, step.w.len());
        }
        if !r_out.is_null() {
            let r = step.r.as_slice();
            ptr::copy_nonoverlapping(r.as_ptr(), r_out, r.len());
        }
        InflStatus::Ok
    })
}

/// Serializes the trace; free the result with [`infl_string_free`].
///
/// # Safety
/// `t` must be a live trace handle; `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn infl_trace_write(
    t: *const InflTrace,
    format: InflTraceFormat,
    out: *mut *mut c_char,
) -> InflStatus {
    guard(|| {
        let (Some(trace), false) = (t.as_ref(), out.is_null()) else {
            set_error("null argument");
            return InflStatus::NullPointer;
        };
        let format = match format {
            InflTraceFormat::Table => TraceFormat::Table,
            InflTraceFormat::Structured => TraceFormat::Structured,
        };
        match CString::new(write_trace(&trace.0, format)) {
            Ok(s) => {
                *out = s.into_raw();
                InflStatus::Ok
            }
            Err(_) => {
                set_error("trace text contains NUL");
                InflStatus::Panic
            }
        }
    })
}

unsafe fn square(p: *const f64, n: usize) -> Vec<Vec<f64>> {
    std::slice::from_raw_parts(p, n * n)
        .chunks(n)
        .map(<[f64]>::to_vec)
        .collect()
}

/// `w_out[i] = Σ_j r[i*n+j] * u[i*n+j]`.
///
/// # Safety
/// `r` and `u` must hold `n*n` values, `w_out` must hold `n`.
#[no_mangle]
pub unsafe extern "C" fn infl_compute_weights(
    r: *const f64,
    u: *const f64,
    n: usize,
    w_out: *mut f64,
) -> InflStatus {
    guard(|| {
        if r.is_null() || u.is_null() || w_out.is_null() {
            set_error("null argument");
            return InflStatus::NullPointer;
        }
        if n == 0 {
            set_error("n must be positive");
            return InflStatus::InvalidInput;
        }
        let result = InfluenceMatrix::new(square(r, n), 0).and_then(|r| {
            let u = UtilityMatrix::new(square(u, n))?;
            compute_weights(&r, &u)
        });
        match result {
            Ok(w) => {
                ptr::copy_nonoverlapping(w.values().as_ptr(), w_out, n);
                InflStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// One relationship-strength update. `branch_out` may be NULL.
///
/// # Safety
/// `value_out` must be valid for a write; `branch_out` NULL or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn infl_update_relationship(
    dw_i: f64,
    dw_j: f64,
    r_prev: f64,
    clamp: bool,
    eps_delta: f64,
    value_out: *mut f64,
    branch_out: *mut InflBranch,
) -> InflStatus {
    guard(|| {
        if value_out.is_null() {
            set_error("null argument");
            return InflStatus::NullPointer;
        }
        let opts = ModelOptions {
            clamp,
            eps_delta,
            ..Default::default()
        };
        if let Err(e) = opts.validate() {
            return status_of(&e);
        }
        match update_relationship(dw_i, dw_j, r_prev, &opts) {
            Ok(u) => {
                *value_out = u.value;
                if !branch_out.is_null() {
                    *branch_out = match u.branch {
                        Branch::OneZero => InflBranch::OneZero,
                        Branch::Equal => InflBranch::Equal,
                        Branch::Ratio => InflBranch::Ratio,
                    };
                }
                InflStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Minimum-norm utility weights reproducing `w` from `r`; writes `n*n` values to `u_out`.
///
/// # Safety
/// `r` and `u_out` must hold `n*n` values, `w` must hold `n`.
#[no_mangle]
pub unsafe extern "C" fn infl_solve_utility(
    r: *const f64,
    w: *const f64,
    n: usize,
    u_out: *mut f64,
) -> InflStatus {
    guard(|| {
        if r.is_null() || w.is_null() || u_out.is_null() {
            set_error("null argument");
            return InflStatus::NullPointer;
        }
        if n == 0 {
            set_error("n must be positive");
            return InflStatus::InvalidInput;
        }
        let result = InfluenceMatrix::new(square(r, n), 0).and_then(|r| {
            let w = PerformanceVector::new(std::slice::from_raw_parts(w, n).to_vec(), 0)?;
            solve_utility_min_norm(&r, &w)
        });
        match result {
            Ok((u, _)) => {
                let flat: Vec<f64> = u.rows().into_iter().flatten().collect();
                ptr::copy_nonoverlapping(flat.as_ptr(), u_out, flat.len());
                InflStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Quality coefficient `mean(w) / ihdi`.
///
/// # Safety
/// `w` must hold `n` values; `qc_out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn infl_quality_coefficient(
    w: *const f64,
    n: usize,
    ihdi: f64,
    qc_out: *mut f64,
) -> InflStatus {
    guard(|| {
        if w.is_null() || qc_out.is_null() {
            set_error("null argument");
            return InflStatus::NullPointer;
        }
        let result = PerformanceVector::new(std::slice::from_raw_parts(w, n).to_vec(), 0)
            .and_then(|w| quality_coefficient(&w, ihdi));
        match result {
            Ok(p) => {
                *qc_out = p.qc;
                InflStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}
