//! C ABI over `mslab-core`.
//!
//! Kernels and test functions are opaque handles created by `*_new` or
//! `*_from_json` and released by the matching `*_free`. Every fallible call
//! returns an [`MslabStatus`] and writes its result through an out-pointer;
//! on failure [`mslab_last_error`] describes the error on the calling thread.
//! All integrals use the default quadrature settings.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mslab::energy::energy_split;
use mslab::functions::{FunctionSpec, TestFunction};
use mslab::kernel::{KernelFamily, KernelSpec};
use mslab::moments::{admissibility_integral, short_range_moment, tail_mass};
use mslab::quadrature::QuadratureConfig;
use mslab::study::{run_ms_study, verify_equivalence, StudyConfig};
use mslab::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MslabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unknown = 3,
    Parse = 4,
    Divergent = 5,
    NonConvergence = 6,
    UnsupportedDimension = 7,
    UndefinedRatio = 8,
    Io = 9,
    Internal = 10,
}

impl MslabStatus {
    fn of(e: &Error) -> Self {
        match e.root() {
            Error::InvalidParameter(_) | Error::Regularity(_) | Error::Arity(_) => {
                Self::InvalidArgument
            }
            Error::Unknown { .. } => Self::Unknown,
            Error::Parse(_) => Self::Parse,
            Error::Divergent(_) => Self::Divergent,
            Error::NonFinite { .. } | Error::NonConvergence(_) | Error::Accuracy(_) => {
                Self::NonConvergence
            }
            Error::UnsupportedDimension(_) => Self::UnsupportedDimension,
            Error::UndefinedRatio(_) => Self::UndefinedRatio,
            Error::Io(_) => Self::Io,
            Error::IncompleteReport(_) | Error::Cell { .. } => Self::Internal,
        }
    }
}

/// Opaque kernel family ρ_ε.
pub struct MslabKernel(KernelFamily);

/// Opaque test function u.
pub struct MslabFunction(TestFunction);

/// Energy split at one (ε, R). `ms_ratio` is NaN when ‖u‖ₚ = 0.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MslabEnergySplit {
    pub far: f64,
    pub near: f64,
    pub total: f64,
    pub ms_ratio: f64,
    pub error_estimate: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(MslabStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(MslabStatus::of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MslabStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f`, records any error or panic, and returns its status.
fn guard<F>(f: F) -> MslabStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MslabStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            MslabStatus::Internal
        }
    }
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        Failure(
            MslabStatus::InvalidArgument,
            format!("`{what}` is not UTF-8"),
        )
    })
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn kernel<'a>(k: *const MslabKernel) -> Result<&'a KernelFamily, Failure> {
    k.as_ref().map(|k| &k.0).ok_or_else(|| null("kernel"))
}

unsafe fn function<'a>(u: *const MslabFunction) -> Result<&'a TestFunction, Failure> {
    u.as_ref().map(|u| &u.0).ok_or_else(|| null("function"))
}

fn optional_s(s: f64) -> Option<f64> {
    (!s.is_nan()).then_some(s)
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn mslab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn mslab_status_name(status: MslabStatus) -> *const c_char {
    let s: &'static CStr = match status {
        MslabStatus::Ok => c"ok",
        MslabStatus::NullPointer => c"null pointer",
        MslabStatus::InvalidArgument => c"invalid argument",
        MslabStatus::Unknown => c"unknown name",
        MslabStatus::Parse => c"parse error",
        MslabStatus::Divergent => c"divergent integral",
        MslabStatus::NonConvergence => c"no convergence",
        MslabStatus::UnsupportedDimension => c"unsupported dimension",
        MslabStatus::UndefinedRatio => c"undefined ratio",
        MslabStatus::Io => c"i/o error",
        MslabStatus::Internal => c"internal error",
    };
    s.as_ptr()
}

#[no_mangle]
pub extern "C" fn mslab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Kernel family by name in dimension `n`. Pass NaN for `s` when the family
/// does not need it (only `concentrating` does).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mslab_kernel_new(
    name: *const c_char,
    n: usize,
    p: f64,
    s: f64,
    out: *mut *mut MslabKernel,
) -> MslabStatus {
    guard(|| {
        let spec = KernelSpec::parse_name(text(name, "name")?)?;
        let k = spec.build(n, p, optional_s(s))?;
        write(out, Box::into_raw(Box::new(MslabKernel(k))), "out")
    })
}

/// Kernel family from a JSON spec such as `{"name": "shifted-bump", "drift_scale": 10, "drift_power": 0}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mslab_kernel_from_json(
    json: *const c_char,
    n: usize,
    p: f64,
    s: f64,
    out: *mut *mut MslabKernel,
) -> MslabStatus {
    guard(|| {
        let spec: KernelSpec = serde_json::from_str(text(json, "json")?).map_err(Error::from)?;
        let k = spec.build(n, p, optional_s(s))?;
        write(out, Box::into_raw(Box::new(MslabKernel(k))), "out")
    })
}

/// # Safety
/// `k` must come from `mslab_kernel_new` or `mslab_kernel_from_json` and not
/// have been freed; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn mslab_kernel_free(k: *mut MslabKernel) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// Test function by name with default parameters.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mslab_function_new(
    name: *const c_char,
    n: usize,
    out: *mut *mut MslabFunction,
) -> MslabStatus {
    guard(|| {
        let u = FunctionSpec::parse_name(text(name, "name")?)?.build(n)?;
        write(out, Box::into_raw(Box::new(MslabFunction(u))), "out")
    })
}

/// Test function from a JSON spec such as `{"name": "bump", "radius": 2}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mslab_function_from_json(
    json: *const c_char,
    n: usize,
    out: *mut *mut MslabFunction,
) -> MslabStatus {
    guard(|| {
        let spec: FunctionSpec = serde_json::from_str(text(json, "json")?).map_err(Error::from)?;
        let u = spec.build(n)?;
        write(out, Box::into_raw(Box::new(MslabFunction(u))), "out")
    })
}

/// # Safety
/// `u` must come from `mslab_function_new` or `mslab_function_from_json` and
/// not have been freed; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn mslab_function_free(u: *mut MslabFunction) {
    if !u.is_null() {
        drop(Box::from_raw(u));
    }
}

/// Kernel mass outside the ball of radius `radius`.
///
/// # Safety
/// `k` must be a live kernel handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mslab_tail_mass(
    k: *const MslabKernel,
    eps: f64,
    radius: f64,
    out: *mut f64,
) -> MslabStatus {
    guard(|| {
        let v = tail_mass(kernel(k)?, eps, radius, &QuadratureConfig::default())?;
        write(out, v, "out")
    })
}

/// q-th moment of the kernel inside the ball of radius `radius`.
///
/// # Safety
/// `k` must be a live kernel handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mslab_short_range_moment(
    k: *const MslabKernel,
    eps: f64,
    radius: f64,
    q: f64,
    out: *mut f64,
) -> MslabStatus {
    guard(|| {
        let v = short_range_moment(kernel(k)?, eps, radius, q, &QuadratureConfig::default())?;
        write(out, v, "out")
    })
}

/// ∫ρ_ε(z)·min(1, |z|^{sp}) dz.
///
/// # Safety
/// `k` must be a live kernel handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mslab_admissibility(
    k: *const MslabKernel,
    eps: f64,
    s: f64,
    p: f64,
    out: *mut f64,
) -> MslabStatus {
    guard(|| {
        let v = admissibility_integral(kernel(k)?, eps, s, p, &QuadratureConfig::default())?;
        write(out, v, "out")
    })
}

/// Energy of `u` under ρ_ε split at |z| = `radius`.
///
/// # Safety
/// `k` and `u` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mslab_energy_split(
    k: *const MslabKernel,
    u: *const MslabFunction,
    eps: f64,
    p: f64,
    radius: f64,
    out: *mut MslabEnergySplit,
) -> MslabStatus {
    guard(|| {
        let b = energy_split(
            kernel(k)?,
            eps,
            function(u)?,
            p,
            radius,
            &QuadratureConfig::default(),
        )?;
        let split = MslabEnergySplit {
            far: b.far,
            near: b.near,
            total: b.total,
            ms_ratio: b.ms_ratio.unwrap_or(f64::NAN),
            error_estimate: b.error_estimate,
        };
        write(out, split, "out")
    })
}

/// Gagliardo seminorm [u]ᵖ_{W^{s,p}} and its error estimate; `error` may be NULL.
///
/// # Safety
/// `u` must be a live handle, `out` a valid pointer, `error` valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn mslab_seminorm(
    u: *const MslabFunction,
    s: f64,
    p: f64,
    out: *mut f64,
    error: *mut f64,
) -> MslabStatus {
    guard(|| {
        let r = function(u)?.gagliardo_seminorm_p(s, p, &QuadratureConfig::default())?;
        write(out, r.value, "out")?;
        if !error.is_null() {
            error.write(r.error_estimate);
        }
        Ok(())
    })
}

/// Runs a full study from a JSON config and returns the JSON report in
/// `*report` (release it with `mslab_string_free`). `*agree` receives 1 when
/// the verdicts and the energy limits agree, 0 otherwise; it may be NULL.
///
/// # Safety
/// `config` must be a NUL-terminated string, `report` a valid pointer and
/// `agree` valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn mslab_run_study(
    config: *const c_char,
    report: *mut *mut c_char,
    agree: *mut i32,
) -> MslabStatus {
    guard(|| {
        let cfg = StudyConfig::from_json(text(config, "config")?)?;
        let r = run_ms_study(&cfg)?;
        let ok = verify_equivalence(&r, cfg.sweep.agreement_tol).unwrap_or(false);
        let json = CString::new(r.to_json()?)
            .map_err(|e| Failure(MslabStatus::Internal, e.to_string()))?;
        write(report, json.into_raw(), "report")?;
        if !agree.is_null() {
            agree.write(ok as i32);
        }
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not have been freed; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn mslab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
