//! C ABI for `wallgap`.
//!
//! Every fallible call returns a [`WgStatus`]; on failure the message is kept
//! per thread and read back with [`wg_last_error`]. Output arrays follow one
//! convention: the caller passes `buf`/`cap`, the library stores the required
//! length in `*len`, and returns `WG_BUFFER_TOO_SMALL` when `cap` is short
//! (pass `buf = NULL, cap = 0` to query the length).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use wallgap::bloch1d::{bands_1d, default_q};
use wallgap::bloch2d::{bands_2d, bands_2d_modal, default_cutoffs, DEFAULT_MODAL_N, DEFAULT_MODAL_P};
use wallgap::cli::{load_config, parse_config, RunSettings};
use wallgap::crossings::{enumerate_crossings, Crossing};
use wallgap::model::QuasiMomentum;
use wallgap::predictor::gap_coefficients;
use wallgap::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[allow(non_camel_case_types)]
pub enum WgStatus {
    WG_OK = 0,
    WG_NULL_POINTER = 1,
    /// Bad argument or malformed UTF-8.
    WG_INVALID_ARGUMENT = 2,
    /// Config file missing or unparsable.
    WG_CONFIG = 3,
    /// Input rejected by model or gap-condition validation.
    WG_VALIDATION = 4,
    /// Eigensolver, quadrature or band identification failure.
    WG_NUMERICAL = 5,
    WG_IO = 6,
    WG_BUFFER_TOO_SMALL = 7,
    /// A Rust panic was caught at the boundary.
    WG_PANIC = 8,
}

/// Opaque parsed and validated configuration.
pub struct WgConfig {
    settings: RunSettings,
}

/// One strip-limit crossing.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WgCrossing {
    pub n: i64,
    pub m: i64,
    pub tau0: f64,
    pub e0: f64,
    /// Nonzero when τ₀ lies on 0 or π/a1.
    pub boundary: i32,
}

/// Gap coefficients of one crossing.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WgGapCoefficients {
    pub beta_l: f64,
    pub beta_r: f64,
    pub lambda_l: f64,
    pub lambda_r: f64,
    pub tau1_l: f64,
    pub tau1_r: f64,
    pub t_l: f64,
    pub t_r: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> WgStatus {
    match e {
        Error::ConfigParse { .. } | Error::MissingFile(_) => WgStatus::WG_CONFIG,
        Error::InvalidArgument(_) => WgStatus::WG_INVALID_ARGUMENT,
        Error::Io(_) | Error::Json(_) => WgStatus::WG_IO,
        e if e.is_validation() => WgStatus::WG_VALIDATION,
        _ => WgStatus::WG_NUMERICAL,
    }
}

enum Fail {
    Core(Error),
    Status(WgStatus, String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> WgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WgStatus::WG_OK,
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            WgStatus::WG_PANIC
        }
    }
}

fn null(what: &str) -> Fail {
    Fail::Status(WgStatus::WG_NULL_POINTER, format!("{what} is null"))
}

unsafe fn config<'a>(cfg: *const WgConfig) -> Result<&'a WgConfig, Fail> {
    cfg.as_ref().ok_or_else(|| null("config"))
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Fail::Status(WgStatus::WG_INVALID_ARGUMENT, format!("{what}: {e}")))
}

unsafe fn emit<T: Copy>(items: &[T], buf: *mut T, cap: usize, len: *mut usize) -> Result<(), Fail> {
    if len.is_null() {
        return Err(null("len"));
    }
    *len = items.len();
    if cap < items.len() {
        return Err(Fail::Status(
            WgStatus::WG_BUFFER_TOO_SMALL,
            format!("buffer holds {cap}, need {}", items.len()),
        ));
    }
    if !items.is_empty() {
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(items.as_ptr(), buf, items.len());
    }
    Ok(())
}

/// Message of the last failed call on this thread, or NULL.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a TOML config held in memory.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wg_config_from_toml(toml: *const c_char, out: *mut *mut WgConfig) -> WgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let settings = parse_config(text(toml, "toml")?)?;
        *out = Box::into_raw(Box::new(WgConfig { settings }));
        Ok(())
    })
}

/// Loads a TOML config from a file path.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wg_config_from_file(path: *const c_char, out: *mut *mut WgConfig) -> WgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let settings = load_config(Path::new(text(path, "path")?))?;
        *out = Box::into_raw(Box::new(WgConfig { settings }));
        Ok(())
    })
}

/// Releases a config. NULL is ignored.
///
/// # Safety
/// `cfg` must come from `wg_config_from_*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wg_config_free(cfg: *mut WgConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Number of ε values in the config schedule.
///
/// # Safety
/// `cfg` must be a live config, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wg_config_epsilon_count(cfg: *const WgConfig, out: *mut usize) -> WgStatus {
    guard(|| {
        let c = config(cfg)?;
        *out.as_mut().ok_or_else(|| null("out"))? = c.settings.operator.epsilons.len();
        Ok(())
    })
}

/// Copies the ε schedule.
///
/// # Safety
/// `buf` must hold `cap` doubles; `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wg_config_epsilons(cfg: *const WgConfig, buf: *mut f64, cap: usize, len: *mut usize) -> WgStatus {
    guard(|| emit(&config(cfg)?.settings.operator.epsilons, buf, cap, len))
}

/// Strip-limit crossings with |n|, |m| ≤ `n_max`; `n_max < 0` uses the config value.
///
/// # Safety
/// `buf` must hold `cap` elements; `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wg_crossings(
    cfg: *const WgConfig,
    n_max: i64,
    buf: *mut WgCrossing,
    cap: usize,
    len: *mut usize,
) -> WgStatus {
    guard(|| {
        let s = &config(cfg)?.settings;
        let n_max = if n_max < 0 { s.n_max } else { n_max };
        let list: Vec<WgCrossing> = enumerate_crossings(&s.operator.lattice, n_max)
            .iter()
            .map(|c| WgCrossing {
                n: c.n,
                m: c.m,
                tau0: c.tau0,
                e0: c.e0,
                boundary: c.boundary as i32,
            })
            .collect();
        emit(&list, buf, cap, len)
    })
}

/// Gap coefficients for a crossing (only `n`, `m`, `tau0` are read).
///
/// # Safety
/// `crossing` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn wg_gap_coefficients(
    cfg: *const WgConfig,
    crossing: *const WgCrossing,
    out: *mut WgGapCoefficients,
) -> WgStatus {
    guard(|| {
        let op = &config(cfg)?.settings.operator;
        let x = crossing.as_ref().ok_or_else(|| null("crossing"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let c = Crossing::new(x.n, x.m, x.tau0, op.lattice)?;
        let g = gap_coefficients(op, &c)?;
        *out = WgGapCoefficients {
            beta_l: g.beta_l,
            beta_r: g.beta_r,
            lambda_l: g.lambda_l,
            lambda_r: g.lambda_r,
            tau1_l: g.tau1_l,
            tau1_r: g.tau1_r,
            t_l: g.t_l,
            t_r: g.t_r,
        };
        Ok(())
    })
}

/// Ascending eigenvalues of the 1D cross-section at (τ₂, ε); `q = 0` picks the default cutoff.
///
/// # Safety
/// `buf` must hold `cap` doubles; `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wg_bands1d(
    cfg: *const WgConfig,
    tau2: f64,
    eps: f64,
    q: usize,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> WgStatus {
    guard(|| {
        let s = &config(cfg)?.settings;
        let q = if q == 0 { s.q.unwrap_or_else(|| default_q(&s.operator, eps)) } else { q };
        emit(&bands_1d(&s.operator, tau2, eps, q)?.values, buf, cap, len)
    })
}

/// 2D eigenvalues inside `[lo, hi]` at τ = (τ₁, τ₂).
///
/// `n = 0` and `q = 0` select defaults. With `p_modes = 0` the dense solver is
/// used; otherwise the reduced solver keeps `p_modes` cross-section modes.
///
/// # Safety
/// `buf` must hold `cap` doubles; `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wg_bands2d(
    cfg: *const WgConfig,
    tau1: f64,
    tau2: f64,
    eps: f64,
    n: usize,
    q: usize,
    p_modes: usize,
    lo: f64,
    hi: f64,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> WgStatus {
    guard(|| {
        let s = &config(cfg)?.settings;
        let op = &s.operator;
        let tau = QuasiMomentum::new(tau1, tau2);
        let sample = if p_modes == 0 {
            let (dn, dq) = default_cutoffs(op, eps).ok_or_else(|| {
                Fail::Status(
                    WgStatus::WG_INVALID_ARGUMENT,
                    format!("dense cutoffs at eps = {eps} exceed the size cap; pass p_modes > 0"),
                )
            })?;
            let n = if n == 0 { s.n_cut.unwrap_or(dn) } else { n };
            let q = if q == 0 { s.q.unwrap_or(dq) } else { q };
            bands_2d(op, tau, eps, n, q, (lo, hi))?
        } else {
            let n = if n == 0 { s.n_cut.unwrap_or(DEFAULT_MODAL_N) } else { n };
            let q = if q == 0 { s.q.unwrap_or_else(|| default_q(op, eps)) } else { q };
            bands_2d_modal(op, tau, eps, n, q, p_modes, (lo, hi))?
        };
        let values: Vec<f64> = sample.levels.iter().map(|l| l.1).collect();
        emit(&values, buf, cap, len)
    })
}

/// Default number of cross-section modes for the reduced 2D solver.
#[no_mangle]
pub extern "C" fn wg_default_modal_p() -> usize {
    DEFAULT_MODAL_P
}
