//! C ABI for the cnls-pml solver.
//!
//! Conventions:
//! * every fallible function returns an `int` status code (`CNLS_OK` on
//!   success) and reports results through out-pointers;
//! * `cnls_last_error()` returns a thread-local message describing the most
//!   recent failure on the calling thread;
//! * handles (`CnlsConfig`, `CnlsRun`) are opaque and must be released with
//!   the matching `*_free` function; `free` on a null handle is a no-op.
//!
//! The header `include/cnls_pml.h` is regenerated by the build script.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use cnls_pml::analysis::threshold_sigma1;
use cnls_pml::error::Error;
use cnls_pml::experiments::{
    apply_scale, config_to_toml, parse_config, run_simulation, scenario, SimulationRun,
};
use cnls_pml::model::ScenarioConfig;

/// Success.
pub const CNLS_OK: i32 = 0;
/// Null pointer, invalid UTF-8, bad buffer length or an internal panic.
pub const CNLS_ERR_ARGUMENT: i32 = 1;
/// The configuration failed validation or an input could not be parsed.
pub const CNLS_ERR_INVALID: i32 = 2;
/// A linear or nonlinear solve failed to converge.
pub const CNLS_ERR_NUMERICAL: i32 = 3;

pub struct CnlsConfig {
    inner: ScenarioConfig,
}

pub struct CnlsRun {
    inner: SimulationRun,
    warning: Option<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn error_code(e: &Error) -> i32 {
    match e.exit_code() {
        3 => CNLS_ERR_NUMERICAL,
        _ => CNLS_ERR_INVALID,
    }
}

fn fail(e: Error) -> i32 {
    set_error(&e.to_string());
    error_code(&e)
}

fn guard(f: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic crossed the C boundary");
            CNLS_ERR_ARGUMENT
        }
    }
}

fn arg_error(msg: &str) -> i32 {
    set_error(msg);
    CNLS_ERR_ARGUMENT
}

/// # Safety
/// `ptr` must be a valid NUL-terminated string or null.
unsafe fn utf8_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, i32> {
    if ptr.is_null() {
        return Err(arg_error(&format!("{what} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| arg_error(&format!("{what} is not valid UTF-8")))
}

/// Message describing the most recent failure on the calling thread. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cnls_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a TOML scenario configuration.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn cnls_config_from_toml(
    text: *const c_char,
    out: *mut *mut CnlsConfig,
) -> i32 {
    guard(|| {
        if out.is_null() {
            return arg_error("out is null");
        }
        let text = match utf8_arg(text, "text") {
            Ok(t) => t,
            Err(c) => return c,
        };
        match parse_config(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(CnlsConfig { inner }));
                CNLS_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Loads one of the built-in scenario presets by name (for example
/// `"lin-beta0"` or `"nl-mixed"`).
///
/// # Safety
/// `name` must be a valid NUL-terminated string; `out` must be a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn cnls_config_from_scenario(
    name: *const c_char,
    out: *mut *mut CnlsConfig,
) -> i32 {
    guard(|| {
        if out.is_null() {
            return arg_error("out is null");
        }
        let name = match utf8_arg(name, "name") {
            Ok(t) => t,
            Err(c) => return c,
        };
        match scenario(name) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(CnlsConfig { inner }));
                CNLS_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Coarsens the spatial resolution by `scale` in `(0, 1]` (1 keeps the
/// configured grid, 0.5 doubles both grid spacings).
///
/// # Safety
/// `config` must be a live handle from a `cnls_config_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn cnls_config_set_scale(config: *mut CnlsConfig, scale: f64) -> i32 {
    guard(|| {
        let Some(config) = config.as_mut() else {
            return arg_error("config is null");
        };
        match apply_scale(&mut config.inner, scale) {
            Ok(()) => CNLS_OK,
            Err(e) => fail(e),
        }
    })
}

/// Serializes the configuration back to TOML. The returned string must be
/// released with `cnls_string_free`.
///
/// # Safety
/// `config` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cnls_config_to_toml(
    config: *const CnlsConfig,
    out: *mut *mut c_char,
) -> i32 {
    guard(|| {
        if out.is_null() {
            return arg_error("out is null");
        }
        let Some(config) = config.as_ref() else {
            return arg_error("config is null");
        };
        match config_to_toml(&config.inner) {
            Ok(text) => match CString::new(text) {
                Ok(c) => {
                    *out = c.into_raw();
                    CNLS_OK
                }
                Err(_) => arg_error("serialized config contains NUL"),
            },
            Err(e) => fail(e),
        }
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from `cnls_config_to_toml` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cnls_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a configuration handle.
///
/// # Safety
/// `config` must come from a `cnls_config_*` constructor and not be freed
/// twice.
#[no_mangle]
pub unsafe extern "C" fn cnls_config_free(config: *mut CnlsConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Largest stable absorption magnitude `σ₁(β̃)` for the normalized mixed
/// coefficient `tilde_beta` with `|β̃| ≤ 1`. Writes `INFINITY` when every
/// magnitude is stable (`β̃ = 0`).
///
/// # Safety
/// `out_sigma` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cnls_threshold_sigma1(tilde_beta: f64, out_sigma: *mut f64) -> i32 {
    guard(|| {
        if out_sigma.is_null() {
            return arg_error("out_sigma is null");
        }
        match threshold_sigma1(tilde_beta) {
            Ok(t) => {
                *out_sigma = t.value().unwrap_or(f64::INFINITY);
                CNLS_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Integrates the configured scenario to its final time and returns a run
/// handle for inspection. Release it with `cnls_run_free`.
///
/// # Safety
/// `config` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cnls_run(config: *const CnlsConfig, out: *mut *mut CnlsRun) -> i32 {
    guard(|| {
        if out.is_null() {
            return arg_error("out is null");
        }
        let Some(config) = config.as_ref() else {
            return arg_error("config is null");
        };
        match run_simulation(&config.inner) {
            Ok(inner) => {
                let warning = inner
                    .stability_warning
                    .as_deref()
                    .and_then(|w| CString::new(w.replace('\0', " ")).ok());
                *out = Box::into_raw(Box::new(CnlsRun { inner, warning }));
                CNLS_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a run handle.
///
/// # Safety
/// `run` must come from `cnls_run` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cnls_run_free(run: *mut CnlsRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Grid shape of the run: points per direction and number of components.
///
/// # Safety
/// `run` must be a live handle; the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cnls_run_shape(
    run: *const CnlsRun,
    out_nx: *mut u64,
    out_ny: *mut u64,
    out_components: *mut u64,
) -> i32 {
    guard(|| {
        let Some(run) = run.as_ref() else {
            return arg_error("run is null");
        };
        if out_nx.is_null() || out_ny.is_null() || out_components.is_null() {
            return arg_error("shape out-pointer is null");
        }
        *out_nx = run.inner.grid.nx as u64;
        *out_ny = run.inner.grid.ny as u64;
        *out_components = run.inner.output.final_state.n_components as u64;
        CNLS_OK
    })
}

/// Simulated time reached and the number of time steps taken.
///
/// # Safety
/// `run` must be a live handle; the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cnls_run_progress(
    run: *const CnlsRun,
    out_final_time: *mut f64,
    out_steps: *mut u64,
) -> i32 {
    guard(|| {
        let Some(run) = run.as_ref() else {
            return arg_error("run is null");
        };
        if out_final_time.is_null() || out_steps.is_null() {
            return arg_error("progress out-pointer is null");
        }
        *out_final_time = run.inner.output.final_time;
        *out_steps = run.inner.output.steps as u64;
        CNLS_OK
    })
}

/// Largest field magnitude of the final state over all components.
///
/// # Safety
/// `run` must be a live handle; `out_max_abs` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cnls_run_max_abs(run: *const CnlsRun, out_max_abs: *mut f64) -> i32 {
    guard(|| {
        let Some(run) = run.as_ref() else {
            return arg_error("run is null");
        };
        if out_max_abs.is_null() {
            return arg_error("out_max_abs is null");
        }
        *out_max_abs = run.inner.output.final_state.max_abs();
        CNLS_OK
    })
}

/// Copies one component of the final state into caller-owned real and
/// imaginary buffers of `len` = nx·ny entries each, row-major in y
/// (index `iy·nx + ix`).
///
/// # Safety
/// `run` must be a live handle; `out_re` and `out_im` must point to `len`
/// writable doubles each.
#[no_mangle]
pub unsafe extern "C" fn cnls_run_field(
    run: *const CnlsRun,
    component: u64,
    out_re: *mut f64,
    out_im: *mut f64,
    len: u64,
) -> i32 {
    guard(|| {
        let Some(run) = run.as_ref() else {
            return arg_error("run is null");
        };
        if out_re.is_null() || out_im.is_null() {
            return arg_error("field out-pointer is null");
        }
        let state = &run.inner.output.final_state;
        if component as usize >= state.n_components {
            return arg_error("component index out of range");
        }
        let field = state.component(component as usize);
        if len as usize != field.len() {
            return arg_error("field buffer length does not match nx*ny");
        }
        let re = std::slice::from_raw_parts_mut(out_re, field.len());
        let im = std::slice::from_raw_parts_mut(out_im, field.len());
        for (k, z) in field.iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        CNLS_OK
    })
}

/// Stability warning emitted for this run, or null if the absorption
/// magnitudes were inside the stable range. The pointer stays valid for the
/// lifetime of the run handle.
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cnls_run_stability_warning(run: *const CnlsRun) -> *const c_char {
    match run.as_ref() {
        Some(run) => run
            .warning
            .as_ref()
            .map_or(std::ptr::null(), |w| w.as_ptr()),
        None => std::ptr::null(),
    }
}
