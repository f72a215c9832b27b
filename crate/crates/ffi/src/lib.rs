//! C ABI for the qlanczos spectral toolkit.
//!
//! Conventions:
//! - Objects are returned through opaque handles and released with the
//!   matching `*_free` function; handles are never shared across calls that
//!   free them.
//! - Every fallible call returns a [`QlStatus`]; on anything but
//!   `QL_STATUS_OK` the thread-local message from [`ql_last_error`]
//!   describes the failure.
//! - Basis states are indexed with site 0 as the least significant bit,
//!   matching the core library.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use qlanczos::error::Error;
use qlanczos::io::parse_state_spec;
use qlanczos::observables::{
    magnetization_series, occupation_series, thermal_average, transition_amplitude, TimeGrid,
};
use qlanczos::oracle::{oracle_spectrum, Spectrum};
use qlanczos::pauli::build_ising_hamiltonian;
use qlanczos::pipeline::{assemble_spectrum, PipelinePlan};
use qlanczos::qite::{run_qite, QiteConfig, QiteTrace};

/// Outcome of a C API call.
#[repr(i32)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum QlStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null or a buffer was too small.
    NullArgument = 1,
    /// Invalid configuration, parameter, or state specification.
    InvalidArgument = 2,
    /// The computation did not converge or failed numerically.
    Numerical = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> QlStatus {
    match err {
        Error::InvalidOperand(_)
        | Error::InvalidParameter(_)
        | Error::IndexOutOfRange { .. }
        | Error::DimensionMismatch(_)
        | Error::Parse { .. }
        | Error::Io(_) => QlStatus::InvalidArgument,
        _ => QlStatus::Numerical,
    }
}

fn fail(err: Error) -> QlStatus {
    set_error(&err.to_string());
    status_of(&err)
}

fn fail_null(what: &str) -> QlStatus {
    set_error(&format!("null pointer or short buffer: {what}"));
    QlStatus::NullArgument
}

/// Full eigensystem of the ring Hamiltonian; opaque.
pub struct QlSpectrum {
    inner: Spectrum,
}

/// Imaginary-time evolution record; opaque.
pub struct QlQiteTrace {
    inner: QiteTrace,
}

/// Message describing the most recent failure on this thread.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ql_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Exact spectrum of the transverse-field Ising ring by dense
/// diagonalization. On success `*out` owns a new handle.
///
/// # Safety
/// `out` must point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ql_oracle_spectrum(
    num_sites: usize,
    coupling: f64,
    field: f64,
    out: *mut *mut QlSpectrum,
) -> QlStatus {
    if out.is_null() {
        return fail_null("out");
    }
    match oracle_spectrum(num_sites, coupling, field) {
        Ok(spec) => {
            *out = Box::into_raw(Box::new(QlSpectrum { inner: spec }));
            QlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Spectrum assembled by the imaginary-time / Krylov pipeline in exact
/// measurement mode. On success `*out` owns a new handle.
///
/// # Safety
/// `out` must point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ql_assembled_spectrum(
    num_sites: usize,
    coupling: f64,
    field: f64,
    out: *mut *mut QlSpectrum,
) -> QlStatus {
    if out.is_null() {
        return fail_null("out");
    }
    let run = || -> Result<Spectrum, Error> {
        let h = build_ising_hamiltonian(num_sites, coupling, field)?;
        let plan = PipelinePlan::exact_default(num_sites)?;
        Ok(assemble_spectrum(&plan, &h)?.spectrum)
    };
    match run() {
        Ok(spec) => {
            *out = Box::into_raw(Box::new(QlSpectrum { inner: spec }));
            QlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Number of levels in the spectrum; 0 for a null handle.
///
/// # Safety
/// `spec` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn ql_spectrum_dim(spec: *const QlSpectrum) -> usize {
    if spec.is_null() {
        return 0;
    }
    (*spec).inner.dim()
}

/// Copy the ascending energies into `buf` (capacity `len` doubles).
///
/// # Safety
/// `spec` must be a live handle; `buf` must hold at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ql_spectrum_energies(
    spec: *const QlSpectrum,
    buf: *mut f64,
    len: usize,
) -> QlStatus {
    if spec.is_null() || buf.is_null() {
        return fail_null("spec/buf");
    }
    let energies = &(*spec).inner.energies;
    if len < energies.len() {
        return fail_null(&format!("buffer holds {len} of {} energies", energies.len()));
    }
    std::ptr::copy_nonoverlapping(energies.as_ptr(), buf, energies.len());
    QlStatus::Ok
}

/// Release a spectrum handle; null is ignored.
///
/// # Safety
/// `spec` must be a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ql_spectrum_free(spec: *mut QlSpectrum) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Probability of measuring basis state `x_fin` at time `t` after starting
/// from basis state `x_in`.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ql_transition_probability(
    spec: *const QlSpectrum,
    x_in: usize,
    x_fin: usize,
    t: f64,
    out: *mut f64,
) -> QlStatus {
    if spec.is_null() || out.is_null() {
        return fail_null("spec/out");
    }
    match transition_amplitude(&(*spec).inner, x_in, x_fin, t) {
        Ok(a) => {
            *out = a.norm_sqr();
            QlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Occupation of `site` at time `t` after starting from basis state `x`.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ql_occupation(
    spec: *const QlSpectrum,
    x: usize,
    site: usize,
    t: f64,
    out: *mut f64,
) -> QlStatus {
    if spec.is_null() || out.is_null() {
        return fail_null("spec/out");
    }
    let grid = match TimeGrid::new(t, t, 1) {
        Ok(g) => g,
        Err(e) => return fail(e),
    };
    match occupation_series(&(*spec).inner, x, site, &grid) {
        Ok(series) => {
            *out = series.values[0];
            QlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Staggered magnetization `1 - (2/N) sum_i <n_i>` at time `t` from basis
/// state `x`.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ql_magnetization(
    spec: *const QlSpectrum,
    x: usize,
    t: f64,
    out: *mut f64,
) -> QlStatus {
    if spec.is_null() || out.is_null() {
        return fail_null("spec/out");
    }
    let grid = match TimeGrid::new(t, t, 1) {
        Ok(g) => g,
        Err(e) => return fail(e),
    };
    match magnetization_series(&(*spec).inner, x, &grid) {
        Ok(series) => {
            *out = series.values[0];
            QlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Gibbs-weighted energy at inverse temperature `beta` for the ring
/// Hamiltonian with the given couplings.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ql_thermal_energy(
    spec: *const QlSpectrum,
    coupling: f64,
    field: f64,
    beta: f64,
    out: *mut f64,
) -> QlStatus {
    if spec.is_null() || out.is_null() {
        return fail_null("spec/out");
    }
    let run = || -> Result<f64, Error> {
        let h = build_ising_hamiltonian((*spec).inner.num_sites, coupling, field)?;
        thermal_average(&(*spec).inner, &h, beta)
    };
    match run() {
        Ok(v) => {
            *out = v;
            QlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Run imaginary-time evolution from the state described by `initial`
/// (`lib:<name>` or a signed bitstring list such as `+110,-011`), against
/// the ring Hamiltonian, negated when `negate_h` is nonzero. On success
/// `*out` owns a new trace handle.
///
/// # Safety
/// `initial` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ql_qite_run(
    num_sites: usize,
    coupling: f64,
    field: f64,
    negate_h: i32,
    initial: *const c_char,
    dtau: f64,
    steps: usize,
    out: *mut *mut QlQiteTrace,
) -> QlStatus {
    if initial.is_null() || out.is_null() {
        return fail_null("initial/out");
    }
    let text = match CStr::from_ptr(initial).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("initial state spec is not valid UTF-8");
            return QlStatus::InvalidArgument;
        }
    };
    let run = || -> Result<QiteTrace, Error> {
        let state = parse_state_spec(text, num_sites)?;
        let mut h = build_ising_hamiltonian(num_sites, coupling, field)?;
        if negate_h != 0 {
            h = h.scaled(-1.0);
        }
        let mut cfg = QiteConfig::exact(num_sites);
        cfg.dtau = dtau;
        cfg.steps = steps;
        run_qite(&state, &h, &cfg)
    };
    match run() {
        Ok(trace) => {
            *out = Box::into_raw(Box::new(QlQiteTrace { inner: trace }));
            QlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Number of recorded energies (steps + 1); 0 for a null handle.
///
/// # Safety
/// `trace` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn ql_qite_len(trace: *const QlQiteTrace) -> usize {
    if trace.is_null() {
        return 0;
    }
    (*trace).inner.energies.len()
}

/// Copy the energy-vs-imaginary-time record into `buf`.
///
/// # Safety
/// `trace` must be a live handle; `buf` must hold at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ql_qite_energies(
    trace: *const QlQiteTrace,
    buf: *mut f64,
    len: usize,
) -> QlStatus {
    if trace.is_null() || buf.is_null() {
        return fail_null("trace/buf");
    }
    let energies = &(*trace).inner.energies;
    if len < energies.len() {
        return fail_null(&format!("buffer holds {len} of {} energies", energies.len()));
    }
    std::ptr::copy_nonoverlapping(energies.as_ptr(), buf, energies.len());
    QlStatus::Ok
}

/// Release a trace handle; null is ignored.
///
/// # Safety
/// `trace` must be a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ql_qite_free(trace: *mut QlQiteTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}
