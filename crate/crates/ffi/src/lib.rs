//! C interface to the biphoton simulator.
//!
//! Evaluators, shift sets and Schmidt results cross the boundary as opaque
//! handles. Each is created by a `*_new` function and released with the
//! matching `*_free`. Fallible functions return a [`BiphotonStatus`]. On
//! failure, [`biphoton_last_error`] describes the most recent error on the
//! calling thread. Success leaves the message untouched.
//!
//! Variable-length results are copied into caller buffers. The element count is
//! always written to `written`. When `capacity` is too small nothing is copied
//! and the call returns [`BiphotonStatus::BufferTooSmall`], so a first call with
//! a null buffer and zero capacity queries the size.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use biphoton::multiplex::{f_multiplexed, make_shifts, GeometryFamily, GeometrySpec, Shift, ShiftSet};
use biphoton::params::{Model, PhysicalParams};
use biphoton::schmidt::{build_jsa, schmidt_decompose, schmidt_spectrum, FrequencyGrid, SchmidtResult};
use biphoton::spectral::{f_cold, f_doppler_closed, Evaluator, EvaluatorKind, PropagationScheme, SpectralPoint};
use biphoton::{Complex64, Error};

/// Result of every fallible call. Validation and convergence codes match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiphotonStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    Convergence = 3,
    Internal = 4,
    BufferTooSmall = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiphotonComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for BiphotonComplex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Dimensionful inputs for one ensemble. SI units, except `gamma3n_ratio` and `tau_gamma`,
/// which are dimensionless.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiphotonParams {
    pub lambda_s: f64,
    pub lambda_i: f64,
    /// rad/s
    pub gamma3: f64,
    pub gamma3n_ratio: f64,
    pub tau_gamma: f64,
    /// K
    pub temperature: f64,
    /// kg
    pub atomic_mass: f64,
}

impl From<BiphotonParams> for PhysicalParams {
    fn from(p: BiphotonParams) -> Self {
        PhysicalParams {
            lambda_s: p.lambda_s,
            lambda_i: p.lambda_i,
            gamma3: p.gamma3,
            gamma3n_ratio: p.gamma3n_ratio,
            tau_gamma: p.tau_gamma,
            temperature: p.temperature,
            atomic_mass: p.atomic_mass,
        }
    }
}

impl From<PhysicalParams> for BiphotonParams {
    fn from(p: PhysicalParams) -> Self {
        Self {
            lambda_s: p.lambda_s,
            lambda_i: p.lambda_i,
            gamma3: p.gamma3,
            gamma3n_ratio: p.gamma3n_ratio,
            tau_gamma: p.tau_gamma,
            temperature: p.temperature,
            atomic_mass: p.atomic_mass,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiphotonEvaluatorKind {
    Closed = 0,
    Quad = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiphotonScheme {
    CoPropagating = 0,
    CounterPropagating = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiphotonFamily {
    AntiCorrelation = 0,
    Correlation = 1,
    SignalAxis = 2,
    IdlerAxis = 3,
    PlusFour = 4,
    CrossFour = 5,
    Octagon = 6,
}

impl From<BiphotonFamily> for GeometryFamily {
    fn from(f: BiphotonFamily) -> Self {
        match f {
            BiphotonFamily::AntiCorrelation => GeometryFamily::AntiCorrelation,
            BiphotonFamily::Correlation => GeometryFamily::Correlation,
            BiphotonFamily::SignalAxis => GeometryFamily::SignalAxis,
            BiphotonFamily::IdlerAxis => GeometryFamily::IdlerAxis,
            BiphotonFamily::PlusFour => GeometryFamily::PlusFour,
            BiphotonFamily::CrossFour => GeometryFamily::CrossFour,
            BiphotonFamily::Octagon => GeometryFamily::Octagon,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiphotonSide {
    Signal = 0,
    Idler = 1,
}

/// Amplitude evaluator bound to one set of physical parameters.
pub struct BiphotonEvaluator {
    inner: Evaluator,
}

/// Frequency shifts of the multiplexed ensembles.
pub struct BiphotonShifts {
    inner: ShiftSet,
}

/// Schmidt weights, entropy, Schmidt number and optionally the modes.
pub struct BiphotonSchmidt {
    result: SchmidtResult,
    frequencies: Vec<f64>,
    warnings: Vec<CString>,
}

enum Failure {
    Null(&'static str),
    Core(Error),
    Buffer { needed: usize, capacity: usize },
    Index { index: usize, len: usize },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn status(&self) -> BiphotonStatus {
        match self {
            Failure::Null(_) => BiphotonStatus::NullPointer,
            Failure::Core(Error::Validation(_)) => BiphotonStatus::Validation,
            Failure::Core(Error::Convergence(_)) => BiphotonStatus::Convergence,
            Failure::Core(_) => BiphotonStatus::Internal,
            Failure::Buffer { .. } => BiphotonStatus::BufferTooSmall,
            Failure::Index { .. } => BiphotonStatus::OutOfRange,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Null(name) => write!(f, "`{name}` is null"),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Buffer { needed, capacity } => write!(f, "buffer holds {capacity} elements, {needed} needed"),
            Failure::Index { index, len } => write!(f, "index {index} out of range for length {len}"),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn call(f: impl FnOnce() -> Result<(), Failure>) -> BiphotonStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BiphotonStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(failure.to_string());
            failure.status()
        }
        Err(payload) => {
            let detail = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {detail}"));
            BiphotonStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn put<T>(out: *mut T, name: &'static str, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn copy_out<T: Copy>(src: &[T], out: *mut T, capacity: usize, written: *mut usize) -> Result<(), Failure> {
    if !written.is_null() {
        written.write(src.len());
    }
    if src.len() > capacity {
        return Err(Failure::Buffer { needed: src.len(), capacity });
    }
    if src.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

unsafe fn free_handle<T>(handle: *mut T) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

fn model(params: &BiphotonParams) -> Result<Model, Failure> {
    Ok(Model::new(PhysicalParams::from(*params))?)
}

/// Message for the last failed call on this thread, or null if none has failed.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn biphoton_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn biphoton_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version has no interior NUL"),
    };
    VERSION.as_ptr()
}

/// Room-temperature ⁸⁷Rb defaults.
#[no_mangle]
pub extern "C" fn biphoton_params_default() -> BiphotonParams {
    PhysicalParams::default().into()
}

/// Checks every parameter and reports all violations in one message.
///
/// # Safety
/// `params` must be null or point to a valid `BiphotonParams`.
#[no_mangle]
pub unsafe extern "C" fn biphoton_params_validate(params: *const BiphotonParams) -> BiphotonStatus {
    call(|| {
        let p = get(params, "params")?;
        Ok(PhysicalParams::from(*p).validate()?)
    })
}

/// Cold-atom amplitude at (Δω_s, Δω_i).
///
/// # Safety
/// `params` must point to a valid `BiphotonParams` and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn biphoton_f_cold(
    params: *const BiphotonParams,
    ds: f64,
    di: f64,
    out: *mut BiphotonComplex,
) -> BiphotonStatus {
    call(|| {
        let m = model(get(params, "params")?)?;
        put(out, "out", f_cold(&m, SpectralPoint::new(ds, di)).into())
    })
}

/// Closed-form Doppler-averaged amplitude for co-propagating excitation.
///
/// # Safety
/// `params` must point to a valid `BiphotonParams` and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn biphoton_f_doppler(
    params: *const BiphotonParams,
    ds: f64,
    di: f64,
    out: *mut BiphotonComplex,
) -> BiphotonStatus {
    call(|| {
        let m = model(get(params, "params")?)?;
        put(out, "out", f_doppler_closed(&m, SpectralPoint::new(ds, di)).into())
    })
}

/// Creates an evaluator. `quad_nodes` is ignored by the closed form.
///
/// # Safety
/// `params` must point to a valid `BiphotonParams`, `kind` and `scheme` must be
/// declared enumerators, and `out` must be writable. On success `*out` owns a
/// handle to release with [`biphoton_evaluator_free`].
#[no_mangle]
pub unsafe extern "C" fn biphoton_evaluator_new(
    params: *const BiphotonParams,
    kind: BiphotonEvaluatorKind,
    scheme: BiphotonScheme,
    quad_nodes: usize,
    out: *mut *mut BiphotonEvaluator,
) -> BiphotonStatus {
    call(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let m = model(get(params, "params")?)?;
        let kind = match kind {
            BiphotonEvaluatorKind::Closed => EvaluatorKind::Closed,
            BiphotonEvaluatorKind::Quad => EvaluatorKind::Quad,
        };
        let scheme = match scheme {
            BiphotonScheme::CoPropagating => PropagationScheme::CoPropagating,
            BiphotonScheme::CounterPropagating => PropagationScheme::CounterPropagating,
        };
        let inner = Evaluator::from_kind(m, kind, scheme, quad_nodes)?;
        put(out, "out", Box::into_raw(Box::new(BiphotonEvaluator { inner })))
    })
}

/// # Safety
/// `evaluator` must be null or a handle from [`biphoton_evaluator_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn biphoton_evaluator_free(evaluator: *mut BiphotonEvaluator) {
    free_handle(evaluator);
}

/// Single-ensemble amplitude at (Δω_s, Δω_i).
///
/// # Safety
/// `evaluator` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn biphoton_evaluator_amplitude(
    evaluator: *const BiphotonEvaluator,
    ds: f64,
    di: f64,
    out: *mut BiphotonComplex,
) -> BiphotonStatus {
    call(|| {
        let ev = get(evaluator, "evaluator")?;
        put(out, "out", ev.inner.amplitude(SpectralPoint::new(ds, di)).into())
    })
}

/// Shifts for a named geometry. `n_mp` is ignored by the four- and eight-cell shapes.
///
/// # Safety
/// `family` must be a declared enumerator and `out` writable. On success `*out`
/// owns a handle to release with [`biphoton_shifts_free`].
#[no_mangle]
pub unsafe extern "C" fn biphoton_shifts_new(
    family: BiphotonFamily,
    dq: f64,
    n_mp: usize,
    out: *mut *mut BiphotonShifts,
) -> BiphotonStatus {
    call(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let family = GeometryFamily::from(family);
        let spec = match family.fixed_n_mp() {
            Some(_) => GeometrySpec::shape(family, dq),
            None => GeometrySpec::line(family, dq, n_mp),
        };
        let inner = make_shifts(&spec)?;
        put(out, "out", Box::into_raw(Box::new(BiphotonShifts { inner })))
    })
}

/// Shifts given explicitly as parallel arrays of length `n`.
///
/// # Safety
/// `ds` and `di` must each point to `n` readable doubles and `out` must be
/// writable. On success `*out` owns a handle to release with [`biphoton_shifts_free`].
#[no_mangle]
pub unsafe extern "C" fn biphoton_shifts_from_arrays(
    ds: *const f64,
    di: *const f64,
    n: usize,
    out: *mut *mut BiphotonShifts,
) -> BiphotonStatus {
    call(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        if n > 0 && ds.is_null() {
            return Err(Failure::Null("ds"));
        }
        if n > 0 && di.is_null() {
            return Err(Failure::Null("di"));
        }
        let shifts = (0..n).map(|k| Shift { ds: *ds.add(k), di: *di.add(k) }).collect();
        let inner = ShiftSet::new(shifts)?;
        put(out, "out", Box::into_raw(Box::new(BiphotonShifts { inner })))
    })
}

/// Number of ensembles, or 0 for a null handle.
///
/// # Safety
/// `shifts` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn biphoton_shifts_len(shifts: *const BiphotonShifts) -> usize {
    shifts.as_ref().map_or(0, |s| s.inner.n_mp())
}

/// # Safety
/// `shifts` must be a live handle; `out_ds` and `out_di` must be writable.
#[no_mangle]
pub unsafe extern "C" fn biphoton_shifts_get(
    shifts: *const BiphotonShifts,
    index: usize,
    out_ds: *mut f64,
    out_di: *mut f64,
) -> BiphotonStatus {
    call(|| {
        let set = get(shifts, "shifts")?;
        let len = set.inner.n_mp();
        let s = set.inner.shifts().get(index).ok_or(Failure::Index { index, len })?;
        put(out_ds, "out_ds", s.ds)?;
        put(out_di, "out_di", s.di)
    })
}

/// # Safety
/// `shifts` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn biphoton_shifts_free(shifts: *mut BiphotonShifts) {
    free_handle(shifts);
}

/// Sum of the single-ensemble amplitude over all shifts.
///
/// # Safety
/// Both handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn biphoton_multiplexed_amplitude(
    evaluator: *const BiphotonEvaluator,
    shifts: *const BiphotonShifts,
    ds: f64,
    di: f64,
    out: *mut BiphotonComplex,
) -> BiphotonStatus {
    call(|| {
        let ev = get(evaluator, "evaluator")?;
        let set = get(shifts, "shifts")?;
        put(out, "out", f_multiplexed(&ev.inner, SpectralPoint::new(ds, di), &set.inner).into())
    })
}

/// Samples the joint spectrum on an `n_points`² grid over ±`half_width` and decomposes it.
/// Modes are computed only when `with_modes` is set.
///
/// # Safety
/// Both handles must be live and `out` writable. On success `*out` owns a handle
/// to release with [`biphoton_schmidt_free`].
#[no_mangle]
pub unsafe extern "C" fn biphoton_schmidt_new(
    evaluator: *const BiphotonEvaluator,
    shifts: *const BiphotonShifts,
    half_width: f64,
    n_points: usize,
    with_modes: bool,
    out: *mut *mut BiphotonSchmidt,
) -> BiphotonStatus {
    call(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let ev = get(evaluator, "evaluator")?;
        let set = get(shifts, "shifts")?;
        let grid = FrequencyGrid::new(half_width, n_points)?;
        let jsa = build_jsa(grid, &set.inner, &ev.inner)?;
        let result = if with_modes { schmidt_decompose(&jsa)? } else { schmidt_spectrum(&jsa)? };
        let warnings =
            jsa.warnings().iter().map(|w| CString::new(w.replace('\0', " ")).expect("interior NULs removed")).collect();
        let handle = BiphotonSchmidt { result, frequencies: grid.points(), warnings };
        put(out, "out", Box::into_raw(Box::new(handle)))
    })
}

/// # Safety
/// `schmidt` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn biphoton_schmidt_free(schmidt: *mut BiphotonSchmidt) {
    free_handle(schmidt);
}

/// Entropy of entanglement in bits, or NaN for a null handle.
///
/// # Safety
/// `schmidt` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn biphoton_schmidt_entropy(schmidt: *const BiphotonSchmidt) -> f64 {
    schmidt.as_ref().map_or(f64::NAN, |s| s.result.entropy_s)
}

/// Schmidt number K, or NaN for a null handle.
///
/// # Safety
/// `schmidt` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn biphoton_schmidt_number(schmidt: *const BiphotonSchmidt) -> f64 {
    schmidt.as_ref().map_or(f64::NAN, |s| s.result.schmidt_k)
}

/// Copies the descending Schmidt weights.
///
/// # Safety
/// `schmidt` must be a live handle, `out` must hold `capacity` doubles (or be
/// null when `capacity` is 0), and `written` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn biphoton_schmidt_lambdas(
    schmidt: *const BiphotonSchmidt,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> BiphotonStatus {
    call(|| copy_out(&get(schmidt, "schmidt")?.result.lambdas, out, capacity, written))
}

/// Number of stored mode pairs; 0 when modes were not requested.
///
/// # Safety
/// `schmidt` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn biphoton_schmidt_mode_count(schmidt: *const BiphotonSchmidt) -> usize {
    schmidt.as_ref().map_or(0, |s| s.result.modes_s.len())
}

/// Copies the grid frequencies on which the modes are sampled.
///
/// # Safety
/// As for [`biphoton_schmidt_lambdas`].
#[no_mangle]
pub unsafe extern "C" fn biphoton_schmidt_frequencies(
    schmidt: *const BiphotonSchmidt,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> BiphotonStatus {
    call(|| copy_out(&get(schmidt, "schmidt")?.frequencies, out, capacity, written))
}

/// Copies mode `k` of one photon, normalized so that Σ|ψ|²·Δω = 1.
///
/// # Safety
/// `side` must be a declared enumerator; otherwise as for [`biphoton_schmidt_lambdas`].
#[no_mangle]
pub unsafe extern "C" fn biphoton_schmidt_mode(
    schmidt: *const BiphotonSchmidt,
    side: BiphotonSide,
    k: usize,
    out: *mut BiphotonComplex,
    capacity: usize,
    written: *mut usize,
) -> BiphotonStatus {
    call(|| {
        let s = get(schmidt, "schmidt")?;
        let modes = match side {
            BiphotonSide::Signal => &s.result.modes_s,
            BiphotonSide::Idler => &s.result.modes_i,
        };
        let mode = modes.get(k).ok_or(Failure::Index { index: k, len: modes.len() })?;
        let converted: Vec<BiphotonComplex> = mode.iter().map(|&z| z.into()).collect();
        copy_out(&converted, out, capacity, written)
    })
}

/// Number of sampling warnings, such as amplitude clipped by the window.
///
/// # Safety
/// `schmidt` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn biphoton_schmidt_warning_count(schmidt: *const BiphotonSchmidt) -> usize {
    schmidt.as_ref().map_or(0, |s| s.warnings.len())
}

/// Warning `index`, or null if out of range. Valid for the lifetime of the handle.
///
/// # Safety
/// `schmidt` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn biphoton_schmidt_warning(schmidt: *const BiphotonSchmidt, index: usize) -> *const c_char {
    schmidt.as_ref().and_then(|s| s.warnings.get(index)).map_or(ptr::null(), |w| w.as_ptr())
}
