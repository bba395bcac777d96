//! C ABI over `metastab`.
//!
//! Models live behind an opaque `MsModel` handle created by one of the
//! `ms_model_*` constructors and released with `ms_model_free`. Every
//! fallible call returns an `MsStatus`; on failure the message is kept per
//! thread and can be read with `ms_last_error`. Results are written through
//! out-pointers, which must be valid for writes.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use metastab::backend::{DynamicsBackend, QuantumBackend};
use metastab::battery::{bound_battery, BatteryOptions};
use metastab::classical::ClassicalBackend;
use metastab::io::parse_model;
use metastab::mode::e_pm;
use metastab::models::{Model, ModelSpecifier};
use metastab::regimes::{change_measure, classify_regime, timescales, GridOptions, Verdict};
use metastab::{Error, NormOptions};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Parse = 3,
    InvalidGenerator = 4,
    TrivialDynamics = 5,
    NotMetastable = 6,
    Numerical = 7,
    BufferTooSmall = 8,
    Panic = 99,
}

/// Regime classification of a window.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsVerdict {
    Initial = 0,
    Final = 1,
    Metastable = 2,
    Indeterminate = 3,
}

/// Opaque model handle.
pub struct MsModel {
    backend: Backend,
}

enum Backend {
    Quantum(QuantumBackend),
    Classical(ClassicalBackend),
}

impl MsModel {
    fn dynamics(&self) -> &dyn DynamicsBackend {
        match &self.backend {
            Backend::Quantum(b) => b,
            Backend::Classical(b) => b,
        }
    }

    fn build(model: Model, seed: u64) -> Result<Self, Error> {
        let backend = match model {
            Model::Quantum(m) => Backend::Quantum(QuantumBackend::new(&m, NormOptions { seed, ..Default::default() })?),
            Model::Classical(q) => Backend::Classical(ClassicalBackend::new(&q)?),
        };
        Ok(Self { backend })
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MsStatus {
    match e {
        Error::Parse(_) => MsStatus::Parse,
        Error::InvalidGenerator(_) | Error::DefectiveLiouvillian(_) => MsStatus::InvalidGenerator,
        Error::TrivialDynamics(_) => MsStatus::TrivialDynamics,
        Error::NotMetastable { .. } => MsStatus::NotMetastable,
        Error::SeparationInconsistency(_) => MsStatus::Numerical,
        _ => MsStatus::InvalidInput,
    }
}

/// Runs `f`, recording errors and turning panics into `MsStatus::Panic`.
fn guard(f: impl FnOnce() -> Result<(), (MsStatus, String)>) -> MsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MsStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            MsStatus::Panic
        }
    }
}

fn lib<T>(r: Result<T, Error>) -> Result<T, (MsStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (MsStatus, String) {
    (MsStatus::NullPointer, "null pointer argument".into())
}

unsafe fn model_ref<'a>(m: *const MsModel) -> Result<&'a MsModel, (MsStatus, String)> {
    m.as_ref().ok_or_else(null)
}

unsafe fn write<T>(p: *mut T, v: T) -> Result<(), (MsStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    p.write(v);
    Ok(())
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, (MsStatus, String)> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s).to_str().map_err(|_| (MsStatus::InvalidInput, "string is not UTF-8".into()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn ms_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a named built-in model. `names` and `values` hold `n_params`
/// parameters; both may be NULL when `n_params` is 0.
///
/// # Safety
/// `name` must be a NUL-terminated string, `names` an array of `n_params`
/// such strings, `values` an array of `n_params` doubles, and `out` valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn ms_model_builtin(
    name: *const c_char,
    names: *const *const c_char,
    values: *const f64,
    n_params: usize,
    seed: u64,
    out: *mut *mut MsModel,
) -> MsStatus {
    guard(|| {
        if out.is_null() || (n_params > 0 && (names.is_null() || values.is_null())) {
            return Err(null());
        }
        let mut spec = ModelSpecifier::new(str_arg(name)?);
        for k in 0..n_params {
            spec.params.insert(str_arg(*names.add(k))?.to_string(), *values.add(k));
        }
        spec.seed = Some(seed);
        let m = lib(spec.build().and_then(|m| MsModel::build(m, seed)))?;
        write(out, Box::into_raw(Box::new(m)))
    })
}

/// Builds a model from the text of a model file (quantum JSON, classical
/// JSON, or an edge list).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ms_model_parse(text: *const c_char, seed: u64, out: *mut *mut MsModel) -> MsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let m = lib(parse_model(str_arg(text)?).and_then(|m| MsModel::build(m, seed)))?;
        write(out, Box::into_raw(Box::new(m)))
    })
}

/// Releases a handle; NULL is ignored.
///
/// # Safety
/// `model` must come from a constructor of this library and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn ms_model_free(model: *mut MsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of eigenvalues (`D²` for quantum models, `n` for chains).
///
/// # Safety
/// `model` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ms_model_modes(model: *const MsModel, out: *mut usize) -> MsStatus {
    guard(|| write(out, model_ref(model)?.dynamics().eigenvalues().len()))
}

/// Copies the eigenvalues into `re` and `im`, each of length `cap`.
/// Fails with `BufferTooSmall` when `cap` is below `ms_model_modes`.
///
/// # Safety
/// `re` and `im` must be valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn ms_eigenvalues(model: *const MsModel, re: *mut f64, im: *mut f64, cap: usize) -> MsStatus {
    guard(|| {
        let ev = model_ref(model)?.dynamics().eigenvalues();
        if re.is_null() || im.is_null() {
            return Err(null());
        }
        if cap < ev.len() {
            return Err((MsStatus::BufferTooSmall, format!("need {} slots, got {cap}", ev.len())));
        }
        for (k, z) in ev.iter().enumerate() {
            *re.add(k) = z.re;
            *im.add(k) = z.im;
        }
        Ok(())
    })
}

/// `d_I(t)` and `d_ss(t)`.
///
/// # Safety
/// `model` must be a live handle; the out-pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ms_distances(model: *const MsModel, t: f64, d_identity: *mut f64, d_stationary: *mut f64) -> MsStatus {
    guard(|| {
        let b = model_ref(model)?.dynamics();
        if !(t >= 0.0 && t.is_finite()) {
            return Err((MsStatus::InvalidInput, format!("time {t} must be finite and nonnegative")));
        }
        write(d_identity, b.distance_to_identity(t))?;
        write(d_stationary, b.distance_to_stationary(t))
    })
}

/// `C_Δ(t'', t')`.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ms_change_measure(model: *const MsModel, t2: f64, t1: f64, out: *mut f64) -> MsStatus {
    guard(|| {
        let b = model_ref(model)?.dynamics();
        write(out, lib(change_measure(b, t2, t1, &GridOptions::default()))?.value)
    })
}

/// Regime of the window `(t'', t')` and its `C_Δ`.
///
/// # Safety
/// `model` must be a live handle; the out-pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ms_classify(
    model: *const MsModel,
    t2: f64,
    t1: f64,
    verdict: *mut MsVerdict,
    c_delta: *mut f64,
) -> MsStatus {
    guard(|| {
        let v = lib(classify_regime(model_ref(model)?.dynamics(), t2, t1, &GridOptions::default()))?;
        let out = match v.verdict {
            Verdict::Initial => MsVerdict::Initial,
            Verdict::Final => MsVerdict::Final,
            Verdict::Metastable => MsVerdict::Metastable,
            Verdict::Indeterminate => MsVerdict::Indeterminate,
        };
        write(verdict, out)?;
        write(c_delta, v.c_delta)
    })
}

/// `τ₀` and `τ_ss`; a timescale that was not found is reported as NaN.
///
/// # Safety
/// `model` must be a live handle; the out-pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ms_timescales(model: *const MsModel, tau_0: *mut f64, tau_ss: *mut f64) -> MsStatus {
    guard(|| {
        let r = lib(timescales(model_ref(model)?.dynamics()))?;
        write(tau_0, r.tau_0.map_or(f64::NAN, |c| c.time))?;
        write(tau_ss, r.tau_ss.map_or(f64::NAN, |c| c.time))
    })
}

/// Runs the bound battery with default grid settings. Reports the number
/// of evaluated rows and of rows with slack below `-tol`.
///
/// # Safety
/// `model` must be a live handle; the out-pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ms_verify_bounds(
    model: *const MsModel,
    tol: f64,
    seed: u64,
    rows: *mut usize,
    failures: *mut usize,
) -> MsStatus {
    guard(|| {
        let opts = BatteryOptions { tol, seed, ..Default::default() };
        let r = lib(bound_battery(model_ref(model)?.dynamics(), &opts))?;
        write(rows, r.rows.len())?;
        write(failures, r.failures)
    })
}

/// Roots `E₋ <= E₊` of `E² − E + c = 0` for `0 <= c <= 1/4`.
///
/// # Safety
/// The out-pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ms_thresholds(c: f64, e_minus: *mut f64, e_plus: *mut f64) -> MsStatus {
    guard(|| {
        let (m, p) = lib(e_pm(c))?;
        write(e_minus, m)?;
        write(e_plus, p)
    })
}
