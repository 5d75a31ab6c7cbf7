//! C ABI over `batchsched`.
//!
//! Models are opaque `BsModel*` handles created by `bs_model_from_json` or
//! `bs_model_random` and released with `bs_model_free`. Every fallible call
//! returns a `BsStatus`; on failure `bs_last_error_message` describes the
//! error for the calling thread. Strings returned by the library are freed
//! with `bs_string_free`.
//!
//! Schedules cross the boundary as `K × m` row-major byte masks: entry
//! `k * m + i` is nonzero when sensor `i` is active at time index `k`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use batchsched::analysis::{certify_ratio, ellipsoid_log_volume, BoundInputs};
use batchsched::{
    build_evaluator, greedy_schedule, parse_scenario, random_scenario, scenario_json, Error,
    GreedyOptions, ObjectiveEvaluator, OracleCaps, Schedule, SystemKind, SystemModel,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Scenario failed to parse or validate.
    InvalidConfig = 3,
    InvalidArgument = 4,
    NotPositiveDefinite = 5,
    CapExceeded = 6,
    GuaranteeViolated = 7,
    Internal = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsSystemKind {
    ContinuousTimeInvariant = 0,
    ContinuousTimeVariant = 1,
    DiscreteTimeInvariant = 2,
    DiscreteTimeVariant = 3,
}

/// Validated model and its evaluator.
pub struct BsModel {
    model: SystemModel,
    ev: ObjectiveEvaluator,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> BsStatus {
    match err {
        Error::Json { .. }
        | Error::DimensionMismatch { .. }
        | Error::NonFinite { .. }
        | Error::NonIncreasingTimes { .. }
        | Error::BudgetOutOfRange { .. } => BsStatus::InvalidConfig,
        Error::InvalidArgument(_) | Error::InvalidSchedule(_) | Error::SensorAlreadySelected { .. } => {
            BsStatus::InvalidArgument
        }
        Error::NotPositiveDefinite { .. } => BsStatus::NotPositiveDefinite,
        Error::OracleCapExceeded { .. } | Error::EnumerationCapExceeded { .. } => BsStatus::CapExceeded,
        Error::GuaranteeViolated(_) => BsStatus::GuaranteeViolated,
        _ => BsStatus::Internal,
    }
}

/// Runs `f`, recording errors and converting panics.
fn guard<F>(f: F) -> BsStatus
where
    F: FnOnce() -> Result<(), (BsStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            BsStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside batchsched");
            BsStatus::Panic
        }
    }
}

fn lib(err: Error) -> (BsStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (BsStatus, String) {
    (BsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn handle<'a>(model: *const BsModel) -> Result<&'a BsModel, (BsStatus, String)> {
    model.as_ref().ok_or_else(|| null("model"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), (BsStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn into_handle(model: SystemModel) -> Result<*mut BsModel, (BsStatus, String)> {
    let ev = build_evaluator(&model).map_err(lib)?;
    Ok(Box::into_raw(Box::new(BsModel { model, ev })))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON has no interior NUL").into_raw()
}

/// Parses and validates a scenario JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_model_from_json(json: *const c_char, out: *mut *mut BsModel) -> BsStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (BsStatus::InvalidUtf8, e.to_string()))?;
        let model = parse_scenario(text).map_err(lib)?;
        write_out(out, into_handle(model)?)
    })
}

/// Deterministic random scenario with budget `r` at every time; `kind` is a
/// `BsSystemKind` value.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_model_random(
    seed: u64,
    n: usize,
    m: usize,
    k: usize,
    r: usize,
    kind: u32,
    out: *mut *mut BsModel,
) -> BsStatus {
    guard(|| {
        let kind = match kind {
            x if x == BsSystemKind::ContinuousTimeInvariant as u32 => SystemKind::ContinuousTimeInvariant,
            x if x == BsSystemKind::ContinuousTimeVariant as u32 => SystemKind::ContinuousTimeVariant,
            x if x == BsSystemKind::DiscreteTimeInvariant as u32 => SystemKind::DiscreteTimeInvariant,
            x if x == BsSystemKind::DiscreteTimeVariant as u32 => SystemKind::DiscreteTimeVariant,
            other => return Err((BsStatus::InvalidArgument, format!("unknown system kind {other}"))),
        };
        let model = random_scenario(seed, n, m, k, r, kind).map_err(lib)?;
        write_out(out, into_handle(model)?)
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bs_model_free(model: *mut BsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Serializes the model as scenario JSON; free with `bs_string_free`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_model_to_json(model: *const BsModel, out: *mut *mut c_char) -> BsStatus {
    guard(|| {
        let h = handle(model)?;
        write_out(out, into_c_string(scenario_json(&h.model)))
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `model` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn bs_model_state_dim(model: *const BsModel) -> usize {
    model.as_ref().map_or(0, |h| h.model.state_dim())
}

/// # Safety
/// `model` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn bs_model_horizon(model: *const BsModel) -> usize {
    model.as_ref().map_or(0, |h| h.model.horizon())
}

/// # Safety
/// `model` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn bs_model_sensor_count(model: *const BsModel) -> usize {
    model.as_ref().map_or(0, |h| h.model.sensor_count())
}

unsafe fn read_mask(h: &BsModel, mask: *const u8, len: usize) -> Result<Schedule, (BsStatus, String)> {
    let (k_count, m) = (h.model.horizon(), h.model.sensor_count());
    if len != k_count * m {
        return Err((
            BsStatus::InvalidArgument,
            format!("mask length {len}, expected K*m = {}", k_count * m),
        ));
    }
    if mask.is_null() && len > 0 {
        return Err(null("mask"));
    }
    let bytes = if len == 0 { &[][..] } else { std::slice::from_raw_parts(mask, len) };
    let sets = (0..k_count)
        .map(|k| (0..m).filter(|&i| bytes[k * m + i] != 0).collect())
        .collect();
    Schedule::from_sets(sets).map_err(lib)
}

unsafe fn write_mask(h: &BsModel, s: &Schedule, mask: *mut u8, len: usize) -> Result<(), (BsStatus, String)> {
    let (k_count, m) = (h.model.horizon(), h.model.sensor_count());
    if len != k_count * m {
        return Err((
            BsStatus::InvalidArgument,
            format!("mask length {len}, expected K*m = {}", k_count * m),
        ));
    }
    if mask.is_null() {
        return Err(null("mask"));
    }
    let bytes = std::slice::from_raw_parts_mut(mask, len);
    bytes.fill(0);
    for k in 0..k_count {
        for &i in s.at(k) {
            bytes[k * m + i] = 1;
        }
    }
    Ok(())
}

/// Objective `log det Σ` of the schedule given as a `K × m` mask.
///
/// # Safety
/// `mask` must point to `mask_len` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_objective_logdet(
    model: *const BsModel,
    mask: *const u8,
    mask_len: usize,
    out: *mut f64,
) -> BsStatus {
    guard(|| {
        let h = handle(model)?;
        let s = read_mask(h, mask, mask_len)?;
        write_out(out, h.ev.objective_logdet(&s).map_err(lib)?)
    })
}

/// Greedy schedule written to `mask_out`, its objective to `objective_out`.
///
/// # Safety
/// `mask_out` must point to `mask_len` writable bytes; `objective_out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_greedy_schedule(
    model: *const BsModel,
    lazy: bool,
    mask_out: *mut u8,
    mask_len: usize,
    objective_out: *mut f64,
) -> BsStatus {
    guard(|| {
        let h = handle(model)?;
        let opts = GreedyOptions {
            lazy,
            record_trace: false,
            ..GreedyOptions::default()
        };
        let outcome = greedy_schedule(&h.ev, &h.model, &opts).map_err(lib)?;
        write_mask(h, &outcome.schedule, mask_out, mask_len)?;
        write_out(objective_out, outcome.objective)
    })
}

/// Brute-force ratio certificate. `ratio_out` receives the ratio;
/// `json_out`, if not null, receives the certificate JSON.
///
/// # Safety
/// `ratio_out` must be writable; `json_out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn bs_certify(
    model: *const BsModel,
    ratio_out: *mut f64,
    json_out: *mut *mut c_char,
) -> BsStatus {
    guard(|| {
        let h = handle(model)?;
        let caps = OracleCaps::from_env().map_err(lib)?;
        let cert = certify_ratio(&h.ev, &h.model, &GreedyOptions::default(), &caps).map_err(lib)?;
        write_out(ratio_out, cert.ratio)?;
        if !json_out.is_null() {
            let text = serde_json::to_string(&cert).expect("certificate serializes");
            json_out.write(into_c_string(text));
        }
        Ok(())
    })
}

/// Lower bound on the error trace over all feasible schedules.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_error_lower_bound(model: *const BsModel, out: *mut f64) -> BsStatus {
    guard(|| {
        let h = handle(model)?;
        let inputs = BoundInputs::new(&h.ev, &h.model).map_err(lib)?;
        write_out(out, inputs.error_lower_bound())
    })
}

/// Per-time sensor count needed for error trace `alpha`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_min_sensors_for_error(model: *const BsModel, alpha: f64, out: *mut f64) -> BsStatus {
    guard(|| {
        let h = handle(model)?;
        let inputs = BoundInputs::new(&h.ev, &h.model).map_err(lib)?;
        write_out(out, inputs.min_sensors_for_error(alpha).map_err(lib)?)
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_ellipsoid_log_volume(
    logdet_sigma: f64,
    epsilon: f64,
    dim: usize,
    out: *mut f64,
) -> BsStatus {
    guard(|| write_out(out, ellipsoid_log_volume(logdet_sigma, epsilon, dim).map_err(lib)?))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next library call on the same thread.
#[no_mangle]
pub extern "C" fn bs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
