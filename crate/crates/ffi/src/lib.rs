//! C ABI over the `causal-capacity` library.
//!
//! Objects are opaque heap handles released with the matching `*_free`
//! function. Every entry point returns a [`CcStatus`]; on failure a
//! description is available from [`cc_last_error_message`] on the same thread.
//! Complex matrices cross the boundary as interleaved `(re, im)` doubles in
//! row-major order.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use causal_capacity::capacity::{
    entanglement_fidelity, kl_correctability, optimize_coherent_information, optimize_holevo,
};
use causal_capacity::channels::{self, QuantumChannel};
use causal_capacity::error::Error;
use causal_capacity::experiments::{render_reports, run_experiment, ExperimentConfig, ReportFormat};
use causal_capacity::io::{channel_from_json, channel_to_json, process_from_json};
use causal_capacity::processes::{
    build_cnot_sdpp, build_salek_sdpp, build_shor_sdpp, build_switch, validate_pure_process, PureProcessVector,
};
use causal_capacity::tensor::{CMatrix, C64};

/// Result codes shared by all functions.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotPhysical = 4,
    Parse = 5,
    Schema = 6,
    Invariant = 7,
    Io = 8,
    Numerical = 9,
    UnknownExperiment = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// Opaque channel handle.
pub struct CcChannel(QuantumChannel);

/// Opaque pure-process handle.
pub struct CcProcess(PureProcessVector);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(CcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_)
            | Error::InvalidProbability(_)
            | Error::LengthMismatch(_)
            | Error::NonUnitOverlap(_) => CcStatus::InvalidArgument,
            Error::DimensionMismatch(_)
            | Error::InvalidLayout(_)
            | Error::LayoutConflict(_)
            | Error::UnknownLabel(_)
            | Error::InvalidPermutation(_) => CcStatus::DimensionMismatch,
            Error::NotHermitian { .. }
            | Error::NotPsd { .. }
            | Error::NotUnitary { .. }
            | Error::NotState(_)
            | Error::NotCptp(_) => CcStatus::NotPhysical,
            Error::Parse(_) => CcStatus::Parse,
            Error::Schema { .. } => CcStatus::Schema,
            Error::Invariant(_) => CcStatus::Invariant,
            Error::Io(_) => CcStatus::Io,
            Error::Numerical(_) => CcStatus::Numerical,
            Error::UnknownExperiment(_) => CcStatus::UnknownExperiment,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

fn null(what: &str) -> Failure {
    Failure(CcStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> CcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {msg}"));
            CcStatus::Panic
        }
    }
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> FfiResult<()> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = value;
    Ok(())
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> FfiResult<&'a str> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|e| Failure(CcStatus::InvalidArgument, format!("`{what}` is not UTF-8: {e}")))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = CString::new(s).map_err(|e| Failure(CcStatus::Numerical, e.to_string()))?.into_raw();
    Ok(())
}

fn parse_json(text: &str) -> FfiResult<serde_json::Value> {
    serde_json::from_str(text).map_err(|e| Failure(CcStatus::Parse, e.to_string()))
}

/// Message for the most recent failure on this thread, or null. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string obtained from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_depolarizing(d: usize, out: *mut *mut CcChannel) -> CcStatus {
    guard(|| write_out(out, CcChannel(channels::depolarizing(d)?)))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_xy(out: *mut *mut CcChannel) -> CcStatus {
    guard(|| write_out(out, CcChannel(channels::xy_channel())))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_bit_flip(p: f64, out: *mut *mut CcChannel) -> CcStatus {
    guard(|| write_out(out, CcChannel(channels::bit_flip(p)?)))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_phase_flip(q: f64, out: *mut *mut CcChannel) -> CcStatus {
    guard(|| write_out(out, CcChannel(channels::phase_flip(q)?)))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_identity(d: usize, out: *mut *mut CcChannel) -> CcStatus {
    guard(|| {
        if d == 0 {
            return Err(Failure(CcStatus::InvalidArgument, "dimension must be positive".into()));
        }
        write_out(out, CcChannel(channels::identity_channel(d)))
    })
}

/// Seeded random CPTP map with environment dimension `env_dim`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_random(
    in_dim: usize,
    out_dim: usize,
    env_dim: usize,
    seed: u64,
    out: *mut *mut CcChannel,
) -> CcStatus {
    guard(|| write_out(out, CcChannel(channels::random_cptp(in_dim, out_dim, env_dim, seed)?)))
}

/// Builds a channel from `n_kraus` operators of shape `out_dim x in_dim`,
/// stored back to back as interleaved row-major complex numbers
/// (`2·n_kraus·out_dim·in_dim` doubles).
///
/// # Safety
/// `data` must point to that many doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_from_kraus(
    n_kraus: usize,
    out_dim: usize,
    in_dim: usize,
    data: *const f64,
    out: *mut *mut CcChannel,
) -> CcStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if n_kraus == 0 || out_dim == 0 || in_dim == 0 {
            return Err(Failure(CcStatus::InvalidArgument, "counts and dimensions must be positive".into()));
        }
        let per = out_dim * in_dim;
        let values = std::slice::from_raw_parts(data, 2 * n_kraus * per);
        let kraus = (0..n_kraus)
            .map(|k| {
                let block = &values[2 * k * per..2 * (k + 1) * per];
                CMatrix::from_row_iterator(out_dim, in_dim, block.chunks(2).map(|z| C64::new(z[0], z[1])))
            })
            .collect();
        write_out(out, CcChannel(QuantumChannel::from_kraus(kraus)?))
    })
}

/// Parses a channel from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_from_json(json: *const c_char, out: *mut *mut CcChannel) -> CcStatus {
    guard(|| {
        let value = parse_json(read_str(json, "json")?)?;
        write_out(out, CcChannel(channel_from_json(&value)?))
    })
}

/// JSON description of a channel; free the result with [`cc_string_free`].
///
/// # Safety
/// `ch` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_to_json(ch: *const CcChannel, out: *mut *mut c_char) -> CcStatus {
    guard(|| {
        let ch = borrow(ch, "ch")?;
        write_string(out, channel_to_json(&ch.0).to_string())
    })
}

/// # Safety
/// `ch` must be a live handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_dims(ch: *const CcChannel, in_dim: *mut usize, out_dim: *mut usize) -> CcStatus {
    guard(|| {
        let ch = borrow(ch, "ch")?;
        put(in_dim, ch.0.in_dim(), "in_dim")?;
        put(out_dim, ch.0.out_dim(), "out_dim")
    })
}

/// Copies the Choi matrix (side `in_dim·out_dim`) into `buf` as interleaved
/// row-major complex numbers. `len` is the capacity of `buf` in doubles.
///
/// # Safety
/// `ch` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_choi(ch: *const CcChannel, buf: *mut f64, len: usize) -> CcStatus {
    guard(|| {
        let ch = borrow(ch, "ch")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let m = ch.0.choi_matrix();
        let n = m.nrows();
        if len < 2 * n * n {
            return Err(Failure(CcStatus::BufferTooSmall, format!("need {} doubles, got {len}", 2 * n * n)));
        }
        let out = std::slice::from_raw_parts_mut(buf, 2 * n * n);
        for i in 0..n {
            for j in 0..n {
                let z = m[(i, j)];
                out[2 * (i * n + j)] = z.re;
                out[2 * (i * n + j) + 1] = z.im;
            }
        }
        Ok(())
    })
}

/// The channel `second ∘ first`.
///
/// # Safety
/// Both handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_compose(
    second: *const CcChannel,
    first: *const CcChannel,
    out: *mut *mut CcChannel,
) -> CcStatus {
    guard(|| {
        let composed = channels::compose(&borrow(second, "second")?.0, &borrow(first, "first")?.0)?;
        write_out(out, CcChannel(composed))
    })
}

/// # Safety
/// `ch` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cc_channel_free(ch: *mut CcChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_process_switch(out: *mut *mut CcProcess) -> CcStatus {
    guard(|| write_out(out, CcProcess(build_switch())))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_process_cnot_sdpp(out: *mut *mut CcProcess) -> CcStatus {
    guard(|| write_out(out, CcProcess(build_cnot_sdpp())))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_process_salek_sdpp(out: *mut *mut CcProcess) -> CcStatus {
    guard(|| write_out(out, CcProcess(build_salek_sdpp())))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_process_shor_sdpp(out: *mut *mut CcProcess) -> CcStatus {
    guard(|| write_out(out, CcProcess(build_shor_sdpp())))
}

/// Parses a process from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cc_process_from_json(json: *const c_char, out: *mut *mut CcProcess) -> CcStatus {
    guard(|| {
        let value = parse_json(read_str(json, "json")?)?;
        write_out(out, CcProcess(process_from_json(&value)?))
    })
}

/// Induced channel `P → (C, F)` for the parties' channels `a` and `b`.
///
/// # Safety
/// All handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cc_process_apply(
    w: *const CcProcess,
    a: *const CcChannel,
    b: *const CcChannel,
    out: *mut *mut CcChannel,
) -> CcStatus {
    guard(|| {
        let g = borrow(w, "w")?.0.apply(&borrow(a, "a")?.0, &borrow(b, "b")?.0)?;
        write_out(out, CcChannel(g))
    })
}

/// Sampling check of a pure process. `passed` receives 1 or 0.
///
/// # Safety
/// `w` must be live; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_process_validate(
    w: *const CcProcess,
    n_samples: usize,
    seed: u64,
    passed: *mut c_int,
    max_second_eigenvalue: *mut f64,
) -> CcStatus {
    guard(|| {
        let report = validate_pure_process(&borrow(w, "w")?.0, n_samples, seed)?;
        put(passed, report.passed as c_int, "passed")?;
        put(max_second_eigenvalue, report.max_second_eigenvalue, "max_second_eigenvalue")
    })
}

/// # Safety
/// `w` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cc_process_free(w: *mut CcProcess) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Best Holevo quantity over pure ensembles of `n_states` states.
///
/// # Safety
/// `ch` must be live and `value` valid.
#[no_mangle]
pub unsafe extern "C" fn cc_optimize_holevo(
    ch: *const CcChannel,
    n_states: usize,
    restarts: usize,
    max_iter: usize,
    seed: u64,
    value: *mut f64,
) -> CcStatus {
    guard(|| {
        let report = optimize_holevo(&borrow(ch, "ch")?.0, n_states, restarts, max_iter, seed)?;
        put(value, report.value, "value")
    })
}

/// Best one-shot coherent information.
///
/// # Safety
/// `ch` must be live and `value` valid.
#[no_mangle]
pub unsafe extern "C" fn cc_optimize_coherent_information(
    ch: *const CcChannel,
    restarts: usize,
    max_iter: usize,
    seed: u64,
    value: *mut f64,
) -> CcStatus {
    guard(|| {
        let report = optimize_coherent_information(&borrow(ch, "ch")?.0, restarts, max_iter, seed)?;
        put(value, report.value, "value")
    })
}

/// # Safety
/// `ch` must be live and `value` valid.
#[no_mangle]
pub unsafe extern "C" fn cc_entanglement_fidelity(ch: *const CcChannel, value: *mut f64) -> CcStatus {
    guard(|| put(value, entanglement_fidelity(&borrow(ch, "ch")?.0)?, "value"))
}

/// Knill–Laflamme test on the whole input space. `recovery_fidelity`
/// receives NaN when the channel is not correctable.
///
/// # Safety
/// `ch` must be live; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_kl_correctability(
    ch: *const CcChannel,
    tol: f64,
    correctable: *mut c_int,
    max_violation: *mut f64,
    recovery_fidelity: *mut f64,
) -> CcStatus {
    guard(|| {
        let cert = kl_correctability(&borrow(ch, "ch")?.0, tol)?;
        put(correctable, cert.correctable as c_int, "correctable")?;
        put(max_violation, cert.max_violation, "max_violation")?;
        put(recovery_fidelity, cert.recovery_fidelity.unwrap_or(f64::NAN), "recovery_fidelity")
    })
}

/// Runs a registered experiment and returns its JSON report, which must be
/// released with [`cc_string_free`].
///
/// # Safety
/// `name` must be a NUL-terminated string; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_run_experiment(
    name: *const c_char,
    seed: u64,
    passed: *mut c_int,
    report_json: *mut *mut c_char,
) -> CcStatus {
    guard(|| {
        let report = run_experiment(&ExperimentConfig::new(read_str(name, "name")?, seed))?;
        put(passed, report.pass as c_int, "passed")?;
        write_string(report_json, render_reports(&[report], ReportFormat::Json, false)?)
    })
}
