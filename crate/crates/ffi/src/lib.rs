//! C ABI over the `microlocal` crate.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every fallible call returns an
//! [`MlStatus`]; on failure the message is available from
//! [`ml_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;

use microlocal::algebra::coeff_convolution;
use microlocal::cli::{parse_oracle, parse_weight};
use microlocal::coeffs::{fourier_coefficients, CoeffArray, Input};
use microlocal::error::Error;
use microlocal::grid::{CutoffWindow, Grid, SampledField};
use microlocal::io::to_json;
use microlocal::spaces::weighted_norm;
use microlocal::wavefront::{scan_coefficients, ScanMode, ScanParams, Verdict, WavefrontReport, DEFAULT_BAND};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Numerical failure: starvation, too few shells, no convergence.
    Computation = 3,
    Io = 4,
    Panic = 5,
}

/// Per-direction verdicts as reported by [`ml_report_verdict`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlVerdict {
    Regular = 0,
    Singular = 1,
    Inconclusive = 2,
}

/// A function or distribution to analyze.
pub struct MlInput(Input);

/// Fourier coefficients on a box `|n_j| <= n_max`.
pub struct MlCoeffs(CoeffArray);

/// Outcome of a wave front or Sobolev scan at one point.
pub struct MlReport(WavefrontReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(MlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io(_) | Error::File { .. } => MlStatus::Io,
            Error::TooFewShells { .. } | Error::NoConvergence { .. } | Error::Starvation { .. } => {
                MlStatus::Computation
            }
            _ => MlStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MlStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard<F>(f: F) -> MlStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MlStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            MlStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(MlStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn samples(dim: usize, m: usize, re: *const f64, im: *const f64) -> Result<SampledField, Failure> {
    let grid = Grid::new(dim, m)?;
    let n = grid.len();
    let re = slice(re, n, "re")?;
    let im = if im.is_null() { None } else { Some(slice(im, n, "im")?) };
    let values = (0..n).map(|k| Complex64::new(re[k], im.map_or(0.0, |v| v[k]))).collect();
    Ok(SampledField::new(grid, values)?)
}

/// Message of the last failing call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ml_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ml_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Input from samples on the uniform grid with `m` points per axis, row-major
/// with axis 0 slowest. `im` may be null for real data.
///
/// # Safety
/// `re` (and `im` when non-null) must point to `m^dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn ml_input_from_samples(
    dim: usize,
    m: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut MlInput,
) -> MlStatus {
    guard(|| emit(out, MlInput(Input::Field(samples(dim, m, re, im)?))))
}

/// Input from an oracle description such as `halfplane_edge@0.5,0.5;normal=1,0`.
///
/// # Safety
/// `spec` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ml_input_from_oracle(spec: *const c_char, out: *mut *mut MlInput) -> MlStatus {
    guard(|| {
        let d = parse_oracle(str_arg(spec, "spec")?)?;
        d.validate()?;
        emit(out, MlInput(Input::Analytic(d)))
    })
}

/// # Safety
/// `input` must be null or a handle from `ml_input_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ml_input_free(input: *mut MlInput) {
    if !input.is_null() {
        drop(Box::from_raw(input));
    }
}

/// Coefficients of the periodic field given by samples, truncated to `n_max`.
///
/// # Safety
/// As for [`ml_input_from_samples`].
#[no_mangle]
pub unsafe extern "C" fn ml_coeffs_from_samples(
    dim: usize,
    m: usize,
    re: *const f64,
    im: *const f64,
    n_max: usize,
    out: *mut *mut MlCoeffs,
) -> MlStatus {
    guard(|| emit(out, MlCoeffs(fourier_coefficients(&samples(dim, m, re, im)?, n_max)?)))
}

/// Coefficients of the localized periodization of `input` with the plateau
/// window of half-widths `eps_in < eps_out` centred at `x0`.
///
/// # Safety
/// `input` must be a live handle and `x0` must point to `dim` doubles, where
/// `dim` is the input dimension.
#[no_mangle]
pub unsafe extern "C" fn ml_coeffs_localized(
    input: *const MlInput,
    x0: *const f64,
    eps_in: f64,
    eps_out: f64,
    n_max: usize,
    out: *mut *mut MlCoeffs,
) -> MlStatus {
    guard(|| {
        let input = &handle(input, "input")?.0;
        let x0 = slice(x0, input.dim(), "x0")?;
        let w = CutoffWindow::new(x0, eps_in, eps_out)?;
        emit(out, MlCoeffs(input.localized(&w, n_max)?))
    })
}

/// Coefficients of the product, by convolution, on the box `n_out`.
///
/// # Safety
/// `a` and `b` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn ml_coeffs_product(
    a: *const MlCoeffs,
    b: *const MlCoeffs,
    n_out: usize,
    out: *mut *mut MlCoeffs,
) -> MlStatus {
    guard(|| {
        let (a, b) = (&handle(a, "a")?.0, &handle(b, "b")?.0);
        emit(out, MlCoeffs(coeff_convolution(a, b, n_out)?.coeffs))
    })
}

/// # Safety
/// `c` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ml_coeffs_dim(c: *const MlCoeffs) -> usize {
    c.as_ref().map_or(0, |c| c.0.dim())
}

/// # Safety
/// `c` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ml_coeffs_n_max(c: *const MlCoeffs) -> usize {
    c.as_ref().map_or(0, |c| c.0.n_max())
}

/// Coefficient at the multi-index `n` (`dim` entries); zero outside the box.
///
/// # Safety
/// `c` must be a live handle, `n` must point to `dim` integers, `re` and `im`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_coeffs_get(c: *const MlCoeffs, n: *const i64, re: *mut f64, im: *mut f64) -> MlStatus {
    guard(|| {
        let c = &handle(c, "coeffs")?.0;
        let n = slice(n, c.dim(), "n")?;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let v = c.get_or_zero(n);
        *re = v.re;
        *im = v.im;
        Ok(())
    })
}

/// Weighted norm with weight `poly:S`, `exp:R` or `one` and exponent `q`
/// (`INFINITY` for the sup norm).
///
/// # Safety
/// `c` must be a live handle, `weight` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ml_coeffs_norm(c: *const MlCoeffs, weight: *const c_char, q: f64, out: *mut f64) -> MlStatus {
    guard(|| {
        let c = &handle(c, "coeffs")?.0;
        let w = parse_weight(str_arg(weight, "weight")?)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = weighted_norm(c, &w, q)?;
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ml_coeffs_free(c: *mut MlCoeffs) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

unsafe fn scan(
    input: *const MlInput,
    x0: *const f64,
    eps_in: f64,
    eps_out: f64,
    n_max: usize,
    mode: ScanMode,
    out: *mut *mut MlReport,
) -> Result<(), Failure> {
    let input = &handle(input, "input")?.0;
    let x0 = slice(x0, input.dim(), "x0")?;
    let w = CutoffWindow::new(x0, eps_in, eps_out)?;
    let params = ScanParams::new(input.dim(), n_max)?;
    let coeffs = input.localized(&w, n_max)?;
    let name = match input {
        Input::Field(_) => "field",
        Input::Analytic(d) => d.name(),
    };
    emit(out, MlReport(scan_coefficients(&coeffs, x0, &w, &params, &mode, name)?))
}

/// Wave front scan at `x0` over the default direction grid: a direction is
/// singular when its decay order falls below `threshold`.
///
/// # Safety
/// As for [`ml_coeffs_localized`].
#[no_mangle]
pub unsafe extern "C" fn ml_wavefront_scan(
    input: *const MlInput,
    x0: *const f64,
    eps_in: f64,
    eps_out: f64,
    n_max: usize,
    threshold: f64,
    out: *mut *mut MlReport,
) -> MlStatus {
    guard(|| scan(input, x0, eps_in, eps_out, n_max, ScanMode::Decay { threshold }, out))
}

/// Sobolev wave front scan of order `s` at `x0`.
///
/// # Safety
/// As for [`ml_coeffs_localized`].
#[no_mangle]
pub unsafe extern "C" fn ml_sobolev_scan(
    input: *const MlInput,
    x0: *const f64,
    eps_in: f64,
    eps_out: f64,
    n_max: usize,
    s: f64,
    out: *mut *mut MlReport,
) -> MlStatus {
    guard(|| scan(input, x0, eps_in, eps_out, n_max, ScanMode::Sobolev { order: s, band: DEFAULT_BAND }, out))
}

/// Number of directions in the scan grid.
///
/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ml_report_directions(r: *const MlReport) -> usize {
    r.as_ref().map_or(0, |r| r.0.directions.len())
}

/// Axis of direction `i`, written to `axis[0..dim]`.
///
/// # Safety
/// `r` must be a live handle and `axis` must have room for the dimension.
#[no_mangle]
pub unsafe extern "C" fn ml_report_axis(r: *const MlReport, i: usize, axis: *mut f64) -> MlStatus {
    guard(|| {
        let r = &handle(r, "report")?.0;
        let a = r
            .params
            .directions
            .get(i)
            .ok_or_else(|| Failure(MlStatus::InvalidArgument, format!("direction {i} out of range")))?;
        if axis.is_null() {
            return Err(null("axis"));
        }
        std::slice::from_raw_parts_mut(axis, a.len()).copy_from_slice(a);
        Ok(())
    })
}

/// Verdict for direction `i`.
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ml_report_verdict(r: *const MlReport, i: usize, out: *mut MlVerdict) -> MlStatus {
    guard(|| {
        let r = &handle(r, "report")?.0;
        let d = r
            .directions
            .get(i)
            .ok_or_else(|| Failure(MlStatus::InvalidArgument, format!("direction {i} out of range")))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match d.verdict {
            Verdict::Regular => MlVerdict::Regular,
            Verdict::Singular => MlVerdict::Singular,
            Verdict::Inconclusive => MlVerdict::Inconclusive,
        };
        Ok(())
    })
}

/// Number of singular directions.
///
/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ml_report_singular_count(r: *const MlReport) -> usize {
    r.as_ref().map_or(0, |r| r.0.singular_directions.len())
}

/// The report as JSON. Release with [`ml_string_free`].
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ml_report_json(r: *const MlReport, out: *mut *mut c_char) -> MlStatus {
    guard(|| {
        let r = &handle(r, "report")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = to_json(r)?;
        *out = CString::new(s).map_err(|e| Failure(MlStatus::Io, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ml_report_free(r: *mut MlReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ml_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
