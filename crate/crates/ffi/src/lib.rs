//! C ABI for the buckshare simulator.
//!
//! Every function returns a [`BsStatus`]. On failure a description is kept
//! per thread and can be read with [`bs_last_error_message`]. Scenarios and
//! traces are opaque handles owned by the caller and released with their
//! `_free` functions. Plain data crosses the boundary as `repr(C)` structs.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use buckshare::{
    compute_metrics, controller_step, equilibrium, parse_scenario, run_with, ControlGains,
    ConverterParams, Error, LoadSchedule, MetricsConfig, PlantState, Scenario,
    SimOptions, TraceRecord,
};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Scenario text failed to parse or validate.
    ParseError = 3,
    /// Reference at or above an input voltage.
    Infeasible = 4,
    /// Converters too similar for the sharing loop.
    DegenerateCoupling = 5,
    Divergence = 6,
    CcmViolation = 7,
    OutOfRange = 8,
    Panic = 99,
}

/// Simulation setup, created by one of the `bs_scenario_*` constructors.
pub struct BsScenario {
    scenario: Scenario,
    record_every: usize,
}

/// Recorded samples of one run.
pub struct BsTrace {
    records: Vec<TraceRecord>,
}

/// One converter, SI units.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BsConverter {
    pub inductance: f64,
    pub capacitance: f64,
    pub vin: f64,
    pub i_max: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BsGains {
    pub k1: f64,
    pub k2: f64,
    pub x_guard: f64,
    pub duty_min: f64,
    pub duty_max: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BsState {
    pub i_l1: f64,
    pub i_l2: f64,
    pub vo: f64,
    pub d2: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BsSignals {
    pub d1: f64,
    pub d2_dot: f64,
    pub e: f64,
    pub e2: f64,
    pub i_tilde: f64,
    pub v_tilde: f64,
    pub v1_lyap: f64,
    pub v2_lyap: f64,
    pub d1_saturated: bool,
    pub d2_saturated: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BsRecord {
    pub t: f64,
    pub i_l1: f64,
    pub i_l2: f64,
    pub vo: f64,
    pub d1: f64,
    pub d2: f64,
    pub d2_dot: f64,
    pub e: f64,
    pub e2: f64,
    pub v1_lyap: f64,
    pub v2_lyap: f64,
    pub r_active: f64,
    pub sat1: bool,
    pub sat2: bool,
}

/// Settling and recovery times are NaN when the trace never settles.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BsMetrics {
    pub settle_time_v: f64,
    pub settle_time_share: f64,
    pub ss_voltage_error: f64,
    pub ss_sharing_error: f64,
    pub recovery_time: f64,
    pub lyap_violation_fraction: f64,
    pub lyap_pairs: usize,
    pub max_duty_saturation_time: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BsMetricsConfig {
    pub band: f64,
    pub share_threshold: f64,
    pub lyap_tol: f64,
    pub lyap_start: f64,
}

impl From<BsConverter> for ConverterParams {
    fn from(c: BsConverter) -> Self {
        ConverterParams {
            inductance: c.inductance,
            capacitance: c.capacitance,
            vin: c.vin,
            i_max: c.i_max,
        }
    }
}

impl From<BsGains> for ControlGains {
    fn from(g: BsGains) -> Self {
        ControlGains {
            k1: g.k1,
            k2: g.k2,
            x_guard: g.x_guard,
            duty_min: g.duty_min,
            duty_max: g.duty_max,
        }
    }
}

impl From<BsState> for PlantState {
    fn from(s: BsState) -> Self {
        PlantState {
            i_l1: s.i_l1,
            i_l2: s.i_l2,
            vo: s.vo,
            d2: s.d2,
        }
    }
}

impl From<PlantState> for BsState {
    fn from(s: PlantState) -> Self {
        BsState {
            i_l1: s.i_l1,
            i_l2: s.i_l2,
            vo: s.vo,
            d2: s.d2,
        }
    }
}

impl From<&TraceRecord> for BsRecord {
    fn from(r: &TraceRecord) -> Self {
        BsRecord {
            t: r.t,
            i_l1: r.i_l1,
            i_l2: r.i_l2,
            vo: r.vo,
            d1: r.d1,
            d2: r.d2,
            d2_dot: r.d2_dot,
            e: r.e,
            e2: r.e2,
            v1_lyap: r.v1_lyap,
            v2_lyap: r.v2_lyap,
            r_active: r.r_active,
            sat1: r.sat1,
            sat2: r.sat2,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(BsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Infeasible { .. } => BsStatus::Infeasible,
            Error::DegenerateCoupling { .. } => BsStatus::DegenerateCoupling,
            Error::Divergence { .. } => BsStatus::Divergence,
            Error::CcmViolation { .. } => BsStatus::CcmViolation,
            _ => BsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Run `f`, record any failure message and convert panics into [`BsStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            BsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(BsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn boxed_scenario(scenario: Scenario, record_every: usize) -> *mut BsScenario {
    Box::into_raw(Box::new(BsScenario {
        scenario,
        record_every,
    }))
}

/// Message of the last failed call on this thread, or null if none.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(s) => s.as_ptr(),
        None => ptr::null(),
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Reference setup: cold start, 10 ohm load, 0.1 s.
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_scenario_reference_constant(out: *mut *mut BsScenario) -> BsStatus {
    guard(|| {
        let s = boxed_scenario(Scenario::reference_constant_load(), 1);
        write(out, s, "out").inspect_err(|_| drop(Box::from_raw(s)))
    })
}

/// Reference setup with the load stepping from 10 to 15 ohm at 50 ms.
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_scenario_reference_step(out: *mut *mut BsScenario) -> BsStatus {
    guard(|| {
        let s = boxed_scenario(Scenario::reference_load_step(), 1);
        write(out, s, "out").inspect_err(|_| drop(Box::from_raw(s)))
    })
}

/// Parse scenario-file text (UTF-8, NUL-terminated).
///
/// # Safety
/// `text` must be null or a valid C string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn bs_scenario_parse(
    text: *const c_char,
    out: *mut *mut BsScenario,
) -> BsStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| Failure(BsStatus::InvalidArgument, format!("text is not UTF-8: {e}")))?;
        let parse = |e: buckshare::ScenarioError| Failure(BsStatus::ParseError, e.to_string());
        let file = parse_scenario(text).map_err(parse)?;
        let scenario = file.to_scenario().map_err(parse)?;
        let s = boxed_scenario(scenario, file.record_every);
        write(out, s, "out").inspect_err(|_| drop(Box::from_raw(s)))
    })
}

/// Release a scenario. Null is ignored.
///
/// # Safety
/// `scenario` must come from a `bs_scenario_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bs_scenario_free(scenario: *mut BsScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bs_scenario_set_dt(scenario: *mut BsScenario, dt: f64) -> BsStatus {
    guard(|| {
        let s = deref_mut(scenario, "scenario")?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Failure(
                BsStatus::InvalidArgument,
                format!("dt must be finite and > 0, got {dt}"),
            ));
        }
        s.scenario.dt = dt;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bs_scenario_set_t_end(scenario: *mut BsScenario, t_end: f64) -> BsStatus {
    guard(|| {
        let s = deref_mut(scenario, "scenario")?;
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Failure(
                BsStatus::InvalidArgument,
                format!("t_end must be finite and >= 0, got {t_end}"),
            ));
        }
        s.scenario.t_end = t_end;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bs_scenario_set_record_every(
    scenario: *mut BsScenario,
    record_every: usize,
) -> BsStatus {
    guard(|| {
        let s = deref_mut(scenario, "scenario")?;
        if record_every == 0 {
            return Err(Failure(BsStatus::InvalidArgument, "record_every must be >= 1".into()));
        }
        s.record_every = record_every;
        Ok(())
    })
}

/// Start from the analytic equilibrium of the initial load instead of rest.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bs_scenario_start_at_equilibrium(scenario: *mut BsScenario) -> BsStatus {
    guard(|| {
        let s = deref_mut(scenario, "scenario")?;
        s.scenario.initial_state = s.scenario.initial_equilibrium()?;
        Ok(())
    })
}

/// Replace the load schedule with `n` `(t, R)` pairs; the first must be at t = 0.
///
/// # Safety
/// `scenario` must be null or a live handle; `times` and `resistances` must
/// each be null or point to `n` values.
#[no_mangle]
pub unsafe extern "C" fn bs_scenario_set_load(
    scenario: *mut BsScenario,
    times: *const f64,
    resistances: *const f64,
    n: usize,
) -> BsStatus {
    guard(|| {
        let s = deref_mut(scenario, "scenario")?;
        if times.is_null() || resistances.is_null() {
            return Err(null("load arrays"));
        }
        let t = std::slice::from_raw_parts(times, n);
        let r = std::slice::from_raw_parts(resistances, n);
        let steps = t
            .iter()
            .zip(r)
            .map(|(&t, &resistance)| buckshare::LoadStep { t, resistance })
            .collect();
        s.scenario.load = LoadSchedule::new(steps)?;
        Ok(())
    })
}

/// Current initial state of a scenario.
///
/// # Safety
/// `scenario` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn bs_scenario_initial_state(
    scenario: *const BsScenario,
    out: *mut BsState,
) -> BsStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        write(out, s.scenario.initial_state.into(), "out")
    })
}

/// Simulate a scenario.
///
/// When the run stops early with `BS_STATUS_DIVERGENCE` or
/// `BS_STATUS_CCM_VIOLATION`, `*out` still receives the samples recorded
/// before the failure and must be freed. On any other failure `*out` is set
/// to null. A false `ccm_check` disables the conduction check.
///
/// # Safety
/// `scenario` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn bs_run(
    scenario: *const BsScenario,
    ccm_check: bool,
    out: *mut *mut BsTrace,
) -> BsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let s = deref(scenario, "scenario")?;
        let opts = SimOptions {
            ccm_tol: if ccm_check { SimOptions::default().ccm_tol } else { None },
            ..SimOptions::new(s.record_every)
        };
        let outcome = run_with(&s.scenario, &opts);
        let partial = matches!(
            outcome.error,
            None | Some(Error::Divergence { .. }) | Some(Error::CcmViolation { .. })
        );
        if partial {
            out.write(Box::into_raw(Box::new(BsTrace {
                records: outcome.trace,
            })));
        }
        match outcome.error {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    })
}

/// Release a trace. Null is ignored.
///
/// # Safety
/// `trace` must come from [`bs_run`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bs_trace_free(trace: *mut BsTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// # Safety
/// `trace` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn bs_trace_len(trace: *const BsTrace, out: *mut usize) -> BsStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        write(out, t.records.len(), "out")
    })
}

/// # Safety
/// `trace` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn bs_trace_get(
    trace: *const BsTrace,
    index: usize,
    out: *mut BsRecord,
) -> BsStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        let r = t.records.get(index).ok_or_else(|| {
            Failure(
                BsStatus::OutOfRange,
                format!("index {index} out of range for {} records", t.records.len()),
            )
        })?;
        write(out, r.into(), "out")
    })
}

/// Metrics of a trace against `vref`. A null `config` uses the defaults.
///
/// # Safety
/// `trace` must be null or a live handle; `config` null or readable; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn bs_trace_metrics(
    trace: *const BsTrace,
    vref: f64,
    config: *const BsMetricsConfig,
    out: *mut BsMetrics,
) -> BsStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        let cfg = match config.as_ref() {
            Some(c) => MetricsConfig {
                band: c.band,
                share_threshold: c.share_threshold,
                lyap_tol: c.lyap_tol,
                lyap_start: c.lyap_start,
            },
            None => MetricsConfig::default(),
        };
        let m = compute_metrics(&t.records, vref, &cfg)?;
        let nan = |o: Option<f64>| o.unwrap_or(f64::NAN);
        write(
            out,
            BsMetrics {
                settle_time_v: nan(m.settle_time_v),
                settle_time_share: nan(m.settle_time_share),
                ss_voltage_error: m.ss_voltage_error,
                ss_sharing_error: m.ss_sharing_error,
                recovery_time: nan(m.recovery_time),
                lyap_violation_fraction: m.lyap_violation_fraction,
                lyap_pairs: m.lyap_pairs,
                max_duty_saturation_time: m.max_duty_saturation_time,
            },
            "out",
        )
    })
}

/// Default metrics thresholds.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn bs_metrics_config_default(out: *mut BsMetricsConfig) -> BsStatus {
    guard(|| {
        let d = MetricsConfig::default();
        write(
            out,
            BsMetricsConfig {
                band: d.band,
                share_threshold: d.share_threshold,
                lyap_tol: d.lyap_tol,
                lyap_start: d.lyap_start,
            },
            "out",
        )
    })
}

/// Default gains.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn bs_gains_default(out: *mut BsGains) -> BsStatus {
    guard(|| {
        let g = ControlGains::default();
        write(
            out,
            BsGains {
                k1: g.k1,
                k2: g.k2,
                x_guard: g.x_guard,
                duty_min: g.duty_min,
                duty_max: g.duty_max,
            },
            "out",
        )
    })
}

/// Steady state with `Vo = vref` and currents shared by rating.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn bs_equilibrium(
    c1: *const BsConverter,
    c2: *const BsConverter,
    r: f64,
    vref: f64,
    out: *mut BsState,
) -> BsStatus {
    guard(|| {
        let p1: ConverterParams = (*deref(c1, "c1")?).into();
        let p2: ConverterParams = (*deref(c2, "c2")?).into();
        p1.validate()?;
        p2.validate()?;
        let eq = equilibrium(&p1, &p2, r, vref)?;
        write(out, eq.into(), "out")
    })
}

/// Evaluate both control loops at one state.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn bs_controller_step(
    state: *const BsState,
    vref: f64,
    r: f64,
    c1: *const BsConverter,
    c2: *const BsConverter,
    gains: *const BsGains,
    out: *mut BsSignals,
) -> BsStatus {
    guard(|| {
        let s: PlantState = (*deref(state, "state")?).into();
        let p1: ConverterParams = (*deref(c1, "c1")?).into();
        let p2: ConverterParams = (*deref(c2, "c2")?).into();
        let g: ControlGains = (*deref(gains, "gains")?).into();
        let c = controller_step(&s, vref, r, &p1, &p2, &g)?;
        write(
            out,
            BsSignals {
                d1: c.d1,
                d2_dot: c.d2_dot,
                e: c.e,
                e2: c.e2,
                i_tilde: c.i_tilde,
                v_tilde: c.v_tilde,
                v1_lyap: c.v1_lyap,
                v2_lyap: c.v2_lyap,
                d1_saturated: c.d1_saturated,
                d2_saturated: c.d2_saturated,
            },
            "out",
        )
    })
}
