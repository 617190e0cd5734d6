//! C ABI over the `dmgradar` core.
//!
//! Every function returns a [`DmgStatus`]; on failure the message is available
//! from [`dmg_last_error`] on the same thread. Objects are opaque handles
//! released with their `_free` function. Complex samples are passed as
//! [`DmgComplex`] arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use num_complex::Complex64;

use dmgradar::bench::config::{ExperimentKind, ExperimentSpec};
use dmgradar::bench::run_with_workers;
use dmgradar::error::Error;
use dmgradar::frame::Preamble;
use dmgradar::golay::{generate_golay_pair, GolayPair};
use dmgradar::radar::crlb::{crlb_range, crlb_velocity_exact_contiguous, crlb_velocity_multi, crlb_velocity_single};
use dmgradar::radar::estimate::{moose_multi_frame, moose_single_frame};
use dmgradar::sync::{CefEstimator, CEF_BINS};

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Config = 4,
    Io = 5,
    Internal = 6,
}

/// Complex sample, layout-compatible with `double[2]`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DmgComplex {
    pub re: f64,
    pub im: f64,
}

/// Golay complementary pair.
pub struct DmgGolayPair(GolayPair);

/// CEF channel estimator.
pub struct DmgCefEstimator(CefEstimator);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DmgStatus {
    match e {
        Error::InvalidArgument(_) | Error::Infeasible(_) | Error::SequenceFile { .. } => DmgStatus::InvalidArgument,
        Error::Config(_) => DmgStatus::Config,
        Error::Io(_) | Error::Csv(_) => DmgStatus::Io,
    }
}

struct Fail(DmgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording the error message and converting panics.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DmgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DmgStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DmgStatus::Internal
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(DmgStatus::NullPointer, format!("{what} is null"))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn in_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, need: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len < need {
        return Err(Fail(DmgStatus::BufferTooSmall, format!("{what} holds {len}, need {need}")));
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

fn to_c64(x: &[DmgComplex]) -> Vec<Complex64> {
    x.iter().map(|c| Complex64::new(c.re, c.im)).collect()
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dmg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Generates the standard Golay pair of `length` (128, 256 or 512).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmg_golay_pair_new(length: usize, out: *mut *mut DmgGolayPair) -> DmgStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = Box::into_raw(Box::new(DmgGolayPair(generate_golay_pair(length)?)));
        Ok(())
    })
}

/// # Safety
/// `pair` must come from [`dmg_golay_pair_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dmg_golay_pair_free(pair: *mut DmgGolayPair) {
    if !pair.is_null() {
        drop(Box::from_raw(pair));
    }
}

/// Length of each sequence of the pair.
///
/// # Safety
/// `pair` and `len` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dmg_golay_pair_len(pair: *const DmgGolayPair, len: *mut usize) -> DmgStatus {
    guard(|| {
        let pair = pair.as_ref().ok_or_else(|| null("pair"))?;
        *out_ref(len, "len")? = pair.0.len();
        Ok(())
    })
}

/// Copies the ±1 values of `a` and `b` into buffers of at least
/// `capacity` entries each.
///
/// # Safety
/// `a` and `b` must point to `capacity` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dmg_golay_pair_values(
    pair: *const DmgGolayPair,
    a: *mut i8,
    b: *mut i8,
    capacity: usize,
) -> DmgStatus {
    guard(|| {
        let pair = &pair.as_ref().ok_or_else(|| null("pair"))?.0;
        let n = pair.len();
        out_slice(a, capacity, n, "a")?[..n].copy_from_slice(pair.a.values());
        out_slice(b, capacity, n, "b")?[..n].copy_from_slice(pair.b.values());
        Ok(())
    })
}

/// Estimator for the standard preamble, optionally π/2-rotated.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmg_cef_estimator_new(rotated: bool, out: *mut *mut DmgCefEstimator) -> DmgStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let preamble = Preamble::standard().with_rotation(rotated);
        *out = Box::into_raw(Box::new(DmgCefEstimator(CefEstimator::new(&preamble))));
        Ok(())
    })
}

/// # Safety
/// `est` must come from [`dmg_cef_estimator_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dmg_cef_estimator_free(est: *mut DmgCefEstimator) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

/// Number of delay bins written by [`dmg_cef_estimate`].
#[no_mangle]
pub extern "C" fn dmg_cef_bins() -> usize {
    CEF_BINS
}

/// Channel estimate from symbol-rate samples `y[0..len]` whose CEF starts at
/// `cef_start`; writes [`dmg_cef_bins`] values to `h`.
///
/// # Safety
/// `y` must hold `len` samples and `h` `h_capacity` writable samples.
#[no_mangle]
pub unsafe extern "C" fn dmg_cef_estimate(
    est: *const DmgCefEstimator,
    y: *const DmgComplex,
    len: usize,
    cef_start: usize,
    h: *mut DmgComplex,
    h_capacity: usize,
) -> DmgStatus {
    guard(|| {
        let est = &est.as_ref().ok_or_else(|| null("estimator"))?.0;
        let y = to_c64(in_slice(y, len, "y")?);
        let h = out_slice(h, h_capacity, CEF_BINS, "h")?;
        for (o, v) in h.iter_mut().zip(est.estimate(&y, cef_start)?) {
            *o = DmgComplex { re: v.re, im: v.im };
        }
        Ok(())
    })
}

/// Range bound (m²) for linear SCNR `scnr`, `p` training symbols and
/// bandwidth `bandwidth` (Hz).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmg_crlb_range(scnr: f64, p: usize, bandwidth: f64, out: *mut f64) -> DmgStatus {
    guard(|| {
        *out_ref(out, "out")? = crlb_range(scnr, p, bandwidth)?;
        Ok(())
    })
}

/// Single-frame velocity bound (m²/s²).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmg_crlb_velocity_single(
    scnr: f64,
    p: usize,
    ts: f64,
    wavelength: f64,
    out: *mut f64,
) -> DmgStatus {
    guard(|| {
        *out_ref(out, "out")? = crlb_velocity_single(scnr, p, ts, wavelength)?;
        Ok(())
    })
}

/// Multi-frame velocity bound (m²/s²), large-`M` form.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmg_crlb_velocity_multi(
    scnr: f64,
    p: usize,
    m: usize,
    k: usize,
    ts: f64,
    wavelength: f64,
    out: *mut f64,
) -> DmgStatus {
    guard(|| {
        *out_ref(out, "out")? = crlb_velocity_multi(scnr, p, m, k, ts, wavelength)?;
        Ok(())
    })
}

/// Exact velocity bound (m²/s²) for `p` contiguous training symbols per frame.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmg_crlb_velocity_exact(
    scnr: f64,
    p: usize,
    m: usize,
    k: usize,
    ts: f64,
    wavelength: f64,
    out: *mut f64,
) -> DmgStatus {
    guard(|| {
        *out_ref(out, "out")? = crlb_velocity_exact_contiguous(scnr, p, m, k, ts, wavelength)?;
        Ok(())
    })
}

/// Single-frame Moose Doppler estimate (Hz) with lag `nd`.
///
/// # Safety
/// `s` must hold `len` samples; `doppler` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmg_moose_single_frame(
    s: *const DmgComplex,
    len: usize,
    nd: usize,
    ts: f64,
    doppler: *mut f64,
) -> DmgStatus {
    guard(|| {
        let s = to_c64(in_slice(s, len, "s")?);
        *out_ref(doppler, "doppler")? = moose_single_frame(&s, nd, ts)?;
        Ok(())
    })
}

/// Multi-frame Moose Doppler estimate (Hz). `blocks` holds `m` training
/// blocks of `p` samples back to back, one per frame of `k` symbols.
///
/// # Safety
/// `blocks` must hold `m·p` samples; `doppler` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmg_moose_multi_frame(
    blocks: *const DmgComplex,
    p: usize,
    m: usize,
    k: usize,
    ts: f64,
    doppler: *mut f64,
) -> DmgStatus {
    guard(|| {
        let total = p.checked_mul(m).ok_or_else(|| Fail(DmgStatus::InvalidArgument, "block size overflows".into()))?;
        let all = to_c64(in_slice(blocks, total, "blocks")?);
        let blocks: Vec<Vec<Complex64>> = all.chunks(p.max(1)).map(<[_]>::to_vec).collect();
        *out_ref(doppler, "doppler")? = moose_multi_frame(&blocks, k, ts)?;
        Ok(())
    })
}

/// Runs an experiment described by the TOML document `config` and returns
/// the CSV table in `csv`, released with [`dmg_string_free`]. `kind` may be
/// null when the document names its kind. `workers` 0 picks the default.
///
/// # Safety
/// `config` must be a NUL-terminated string, `kind` null or NUL-terminated,
/// and `csv` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmg_run_experiment(
    config: *const c_char,
    kind: *const c_char,
    workers: usize,
    csv: *mut *mut c_char,
) -> DmgStatus {
    guard(|| {
        let csv = out_ref(csv, "csv")?;
        *csv = ptr::null_mut();
        let text = c_str(config, "config")?;
        let kind = if kind.is_null() {
            None
        } else {
            let k = c_str(kind, "kind")?;
            let parsed: ExperimentKind = toml::Value::String(k.to_string())
                .try_into()
                .map_err(|_| Fail(DmgStatus::InvalidArgument, format!("unknown experiment kind `{k}`")))?;
            Some(parsed)
        };
        let spec = ExperimentSpec::from_toml(text, kind)?;
        let table = run_with_workers(&spec, workers)?;
        let out =
            CString::new(table.to_csv_string()?).map_err(|_| Fail(DmgStatus::Internal, "CSV contains NUL".into()))?;
        *csv = out.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dmg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(DmgStatus::InvalidArgument, format!("{what} is not UTF-8")))
}
