//! C interface to `greenride`.
//!
//! Configurations and metrics cross the boundary as opaque handles owned by
//! the caller and released with their `_free` function. Every fallible call
//! returns a [`GrStatus`]; on failure the message is available from
//! [`gr_last_error_message`] on the same thread. Strings returned by the
//! library are released with [`gr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use greenride::model::{Matrix, Metrics, Scenario, ScenarioConfig, Weather};
use greenride::snapshot::EpochSnapshot;
use greenride::{assign, ingest, sim, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Config = 3,
    Load = 4,
    Invariant = 5,
    Solver = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrScenario {
    Fossil = 0,
    BusinessAsUsual = 1,
    Case1 = 2,
    Case2 = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrWeather {
    Sunny = 0,
    CloudyMorning = 1,
    CloudyAfternoon = 2,
}

/// Scenario configuration.
pub struct GrConfig(ScenarioConfig);

/// Metrics of one simulated day.
pub struct GrMetrics(Metrics);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> GrStatus {
    match err {
        Error::Config(_) | Error::Graph(_) | Error::UnknownNode(_) => GrStatus::Config,
        Error::Load { .. } | Error::Io(_) | Error::Json(_) | Error::Csv(_) => GrStatus::Load,
        Error::Invariant(_) => GrStatus::Invariant,
        Error::InfeasibleIncentiveBounds { .. } | Error::ProjectionBudgetExceeded { .. } => GrStatus::Solver,
    }
}

fn fail(status: GrStatus, message: impl Into<String>) -> GrStatus {
    set_error(message);
    status
}

/// Runs `body`, turning errors and panics into a status.
fn guarded(body: impl FnOnce() -> Result<(), GrStatus>) -> GrStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GrStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(GrStatus::Panic, "internal panic"),
    }
}

fn lift<T>(res: greenride::Result<T>) -> Result<T, GrStatus> {
    res.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn text<'a>(ptr: *const c_char) -> Result<&'a str, GrStatus> {
    if ptr.is_null() {
        return Err(fail(GrStatus::NullArgument, "null string"));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| fail(GrStatus::InvalidArgument, "string is not UTF-8"))
}

fn non_null<T>(ptr: *const T, what: &str) -> Result<(), GrStatus> {
    if ptr.is_null() {
        Err(fail(GrStatus::NullArgument, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on this thread; do not free.
#[no_mangle]
pub extern "C" fn gr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Full-scale defaults: 100 EVs, case 1, sunny.
#[no_mangle]
pub extern "C" fn gr_config_default() -> *mut GrConfig {
    Box::into_raw(Box::new(GrConfig(ScenarioConfig::default())))
}

/// Twenty EVs and about five hundred requests.
#[no_mangle]
pub extern "C" fn gr_config_desk_scale() -> *mut GrConfig {
    Box::into_raw(Box::new(GrConfig(ScenarioConfig::desk_scale())))
}

/// Parses a TOML scenario; missing keys keep their defaults.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gr_config_from_toml(toml: *const c_char, out: *mut *mut GrConfig) -> GrStatus {
    guarded(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let cfg = lift(ScenarioConfig::from_toml_str(text(toml)?))?;
        *out = Box::into_raw(Box::new(GrConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gr_config_free(cfg: *mut GrConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gr_config_set_scenario(cfg: *mut GrConfig, scenario: GrScenario) -> GrStatus {
    guarded(|| {
        non_null(cfg, "config")?;
        (*cfg).0.scenario = match scenario {
            GrScenario::Fossil => Scenario::Fossil,
            GrScenario::BusinessAsUsual => Scenario::BusinessAsUsual,
            GrScenario::Case1 => Scenario::Case1,
            GrScenario::Case2 => Scenario::Case2,
        };
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gr_config_set_weather(cfg: *mut GrConfig, weather: GrWeather) -> GrStatus {
    guarded(|| {
        non_null(cfg, "config")?;
        (*cfg).0.weather = match weather {
            GrWeather::Sunny => Weather::Sunny,
            GrWeather::CloudyMorning => Weather::CloudyMorning,
            GrWeather::CloudyAfternoon => Weather::CloudyAfternoon,
        };
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gr_config_set_seed(cfg: *mut GrConfig, seed: u64) -> GrStatus {
    guarded(|| {
        non_null(cfg, "config")?;
        (*cfg).0.seed = seed;
        Ok(())
    })
}

/// Share of customers accepting pooled rides, in `[0, 1]`.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gr_config_set_willingness(cfg: *mut GrConfig, willingness: f64) -> GrStatus {
    guarded(|| {
        non_null(cfg, "config")?;
        if !(0.0..=1.0).contains(&willingness) {
            return Err(fail(GrStatus::InvalidArgument, format!("willingness {willingness} is outside [0, 1]")));
        }
        (*cfg).0.willingness = willingness;
        Ok(())
    })
}

/// Simulates one day with the configured seed.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gr_run_scenario(cfg: *const GrConfig, out: *mut *mut GrMetrics) -> GrStatus {
    guarded(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        non_null(cfg, "config")?;
        let cfg = &(*cfg).0;
        lift(cfg.validate())?;
        let inputs = lift(ingest::load_inputs(cfg))?;
        let output = lift(sim::run_scenario(cfg, &inputs, sim::SimOptions::default()))?;
        *out = Box::into_raw(Box::new(GrMetrics(output.metrics)));
        Ok(())
    })
}

/// # Safety
/// `metrics` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gr_metrics_free(metrics: *mut GrMetrics) {
    if !metrics.is_null() {
        drop(Box::from_raw(metrics));
    }
}

/// Served share of received rides; NaN for a null handle.
///
/// # Safety
/// `metrics` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gr_metrics_qos(metrics: *const GrMetrics) -> f64 {
    metrics.as_ref().map_or(f64::NAN, |m| m.0.qos)
}

/// Unused share of renewable energy; NaN when undefined (no PV, or a
/// fossil fleet) or for a null handle.
///
/// # Safety
/// `metrics` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gr_metrics_pl(metrics: *const GrMetrics) -> f64 {
    match metrics.as_ref() {
        Some(m) if m.0.pl_defined => m.0.pl,
        _ => f64::NAN,
    }
}

/// # Safety
/// `metrics` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gr_metrics_missed_rides(metrics: *const GrMetrics) -> u64 {
    metrics.as_ref().map_or(0, |m| m.0.missed_rides as u64)
}

/// All metrics as JSON; free with [`gr_string_free`]. Null on failure.
///
/// # Safety
/// `metrics` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gr_metrics_to_json(metrics: *const GrMetrics) -> *mut c_char {
    let Some(m) = metrics.as_ref() else {
        set_error("metrics is null");
        return ptr::null_mut();
    };
    match serde_json::to_string(&m.0).map(CString::new) {
        Ok(Ok(s)) => s.into_raw(),
        _ => {
            set_error("metrics did not serialize");
            ptr::null_mut()
        }
    }
}

/// Minimum-cost assignment of a row-major `h x h` cost matrix.
/// `row_to_col` receives `h` column indices.
///
/// # Safety
/// `cost` must point to `h * h` doubles, `row_to_col` to `h` writable
/// entries and `objective` to one.
#[no_mangle]
pub unsafe extern "C" fn gr_solve_lap(
    cost: *const f64,
    h: usize,
    row_to_col: *mut usize,
    objective: *mut f64,
) -> GrStatus {
    guarded(|| {
        non_null(row_to_col, "row_to_col")?;
        non_null(objective, "objective")?;
        if h == 0 {
            *objective = 0.0;
            return Ok(());
        }
        non_null(cost, "cost")?;
        let len = h.checked_mul(h).ok_or_else(|| fail(GrStatus::InvalidArgument, "h is too large"))?;
        let data = std::slice::from_raw_parts(cost, len).to_vec();
        if data.iter().any(|c| !c.is_finite()) {
            return Err(fail(GrStatus::InvalidArgument, "costs must be finite"));
        }
        let matrix = lift(Matrix::from_vec(h, h, data))?;
        let (perm, total) = assign::lap::solve(&matrix);
        std::slice::from_raw_parts_mut(row_to_col, h).copy_from_slice(&perm);
        *objective = total;
        Ok(())
    })
}

/// Evaluates the merit function on an epoch snapshot. A negative `epsilon`
/// keeps the snapshot's own tolerance.
///
/// # Safety
/// `json` must be a NUL-terminated string; `merit` and `pass` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn gr_certify_snapshot_json(
    json: *const c_char,
    epsilon: f64,
    merit: *mut f64,
    pass: *mut bool,
) -> GrStatus {
    guarded(|| {
        non_null(merit, "merit")?;
        non_null(pass, "pass")?;
        let mut snap = lift(EpochSnapshot::from_json(text(json)?))?;
        if epsilon >= 0.0 {
            snap.epsilon = epsilon;
        }
        let cert = lift(snap.certify())?;
        *merit = cert.merit;
        *pass = cert.pass;
        Ok(())
    })
}
