//! C ABI for the solver. Objects are opaque handles created and released by
//! the library; every fallible call returns an [`RscStatus`] and leaves a
//! message for [`rsc_last_error`] on failure.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use roughscat::error::Error;
use roughscat::forward::observation_angles;
use roughscat::harness::{forward_blocks, synthesize, Experiment, ExperimentConfig, ForwardBlock};
use roughscat::inversion::{invert, lm_step, InversionResult, MeasurementSet};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RscStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    InvalidInput = 4,
    Dimension = 5,
    Numerical = 6,
    Io = 7,
    OutOfRange = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Validated experiment configuration.
pub struct RscExperiment {
    inner: Experiment,
}

/// Noise-free far fields for every `(k, direction)` pair of an experiment.
pub struct RscFarField {
    blocks: Vec<ForwardBlock>,
}

/// Far-field measurements.
pub struct RscDataset {
    inner: MeasurementSet,
}

/// Outcome of an inversion.
pub struct RscReconstruction {
    inner: InversionResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(err: &Error) -> RscStatus {
    match err {
        Error::Config { .. } => RscStatus::Config,
        Error::InvalidInput(_) | Error::PointOnCurve { .. } => RscStatus::InvalidInput,
        Error::Dimension(_) => RscStatus::Dimension,
        Error::Domain { .. } | Error::CoincidentPoints { .. } | Error::SingularSystem { .. } => {
            RscStatus::Numerical
        }
        Error::Io(_) => RscStatus::Io,
        Error::Json(_) => RscStatus::InvalidInput,
    }
}

struct Fail(RscStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RscStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RscStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RscStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(RscStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(RscStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rsc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rsc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library.
///
/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn rsc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a JSON experiment config.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rsc_experiment_from_json(json: *const c_char, out: *mut *mut RscExperiment) -> RscStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let cfg = ExperimentConfig::from_json(text(json, "json")?)?;
        *out = boxed(RscExperiment { inner: cfg.resolve()? });
        Ok(())
    })
}

/// # Safety
/// `exp` must come from [`rsc_experiment_from_json`] or be null.
#[no_mangle]
pub unsafe extern "C" fn rsc_experiment_free(exp: *mut RscExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Writes the 64-character hex config hash and a NUL into `buf` (at least 65 bytes).
///
/// # Safety
/// `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rsc_experiment_hash(exp: *const RscExperiment, buf: *mut c_char, len: usize) -> RscStatus {
    guard(|| {
        let exp = handle(exp, "experiment")?;
        let hash = exp.inner.hash();
        let dst = slice_mut(buf, len, "buf")?;
        if dst.len() < hash.len() + 1 {
            return Err(Fail(RscStatus::BufferTooSmall, format!("need {} bytes", hash.len() + 1)));
        }
        for (d, b) in dst.iter_mut().zip(hash.bytes()) {
            *d = b as c_char;
        }
        dst[hash.len()] = 0;
        Ok(())
    })
}

/// Overrides the noise seed.
///
/// # Safety
/// `exp` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rsc_experiment_set_seed(exp: *mut RscExperiment, seed: u64) -> RscStatus {
    guard(|| {
        exp.as_mut().ok_or_else(|| null("experiment"))?.inner.seed = seed;
        Ok(())
    })
}

/// Solves the forward problem for the configured true profile.
///
/// # Safety
/// `exp` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rsc_forward(exp: *const RscExperiment, out: *mut *mut RscFarField) -> RscStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let exp = handle(exp, "experiment")?;
        *out = boxed(RscFarField {
            blocks: forward_blocks(&exp.inner)?,
        });
        Ok(())
    })
}

/// # Safety
/// `ff` must come from [`rsc_forward`] or be null.
#[no_mangle]
pub unsafe extern "C" fn rsc_farfield_free(ff: *mut RscFarField) {
    if !ff.is_null() {
        drop(Box::from_raw(ff));
    }
}

/// Number of `(k, direction)` blocks, ordered wavenumber-major.
///
/// # Safety
/// `ff` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn rsc_farfield_block_count(ff: *const RscFarField) -> usize {
    ff.as_ref().map_or(0, |f| f.blocks.len())
}

/// Wavenumber, incidence angle and sample count of one block.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rsc_farfield_block_info(
    ff: *const RscFarField,
    index: usize,
    k: *mut f64,
    theta: *mut f64,
    n_angles: *mut usize,
) -> RscStatus {
    guard(|| {
        let ff = handle(ff, "far field")?;
        let b = ff
            .blocks
            .get(index)
            .ok_or_else(|| Fail(RscStatus::OutOfRange, format!("block {index} of {}", ff.blocks.len())))?;
        *out_ptr(k, "k")? = b.k;
        *out_ptr(theta, "theta")? = b.theta;
        *out_ptr(n_angles, "n_angles")? = b.angles.len();
        Ok(())
    })
}

/// Copies observation angles and far-field values of one block; each buffer
/// holds `len` doubles, which must equal the block's sample count.
///
/// # Safety
/// The buffers must hold `len` doubles each.
#[no_mangle]
pub unsafe extern "C" fn rsc_farfield_block_values(
    ff: *const RscFarField,
    index: usize,
    angles: *mut f64,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> RscStatus {
    guard(|| {
        let ff = handle(ff, "far field")?;
        let b = ff
            .blocks
            .get(index)
            .ok_or_else(|| Fail(RscStatus::OutOfRange, format!("block {index} of {}", ff.blocks.len())))?;
        if len != b.values.len() {
            return Err(Fail(RscStatus::Dimension, format!("block has {} samples, buffers {len}", b.values.len())));
        }
        let (a, r, i) = (slice_mut(angles, len, "angles")?, slice_mut(re, len, "re")?, slice_mut(im, len, "im")?);
        for (j, z) in b.values.iter().enumerate() {
            a[j] = b.angles[j];
            r[j] = z.re;
            i[j] = z.im;
        }
        Ok(())
    })
}

/// Synthesizes noisy measurements for the configured true profile.
///
/// # Safety
/// `exp` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rsc_synthesize(exp: *const RscExperiment, out: *mut *mut RscDataset) -> RscStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let exp = handle(exp, "experiment")?;
        *out = boxed(RscDataset {
            inner: synthesize(&exp.inner)?,
        });
        Ok(())
    })
}

/// Parses a measurement set in its JSON form.
///
/// # Safety
/// `json` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rsc_dataset_from_json(json: *const c_char, out: *mut *mut RscDataset) -> RscStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let set: MeasurementSet = serde_json::from_str(text(json, "json")?).map_err(Error::from)?;
        set.validate()?;
        *out = boxed(RscDataset { inner: set });
        Ok(())
    })
}

/// JSON form of a measurement set; release with [`rsc_string_free`].
///
/// # Safety
/// `ds` must be a valid handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rsc_dataset_to_json(ds: *const RscDataset, out: *mut *mut c_char) -> RscStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let ds = handle(ds, "dataset")?;
        let s = serde_json::to_string(&ds.inner).map_err(Error::from)?;
        *out = CString::new(s).map_err(|e| Fail(RscStatus::InvalidInput, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `ds` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn rsc_dataset_free(ds: *mut RscDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Reconstructs spline coefficients from `ds` with the settings of `exp`.
///
/// # Safety
/// Handles must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rsc_invert(
    exp: *const RscExperiment,
    ds: *const RscDataset,
    out: *mut *mut RscReconstruction,
) -> RscStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let exp = &handle(exp, "experiment")?.inner;
        let ds = &handle(ds, "dataset")?.inner;
        roughscat::harness::run::check_compatible(exp, ds)?;
        *out = boxed(RscReconstruction {
            inner: invert(ds, &exp.basis()?, &exp.settings())?,
        });
        Ok(())
    })
}

/// # Safety
/// `rec` must come from [`rsc_invert`] or be null.
#[no_mangle]
pub unsafe extern "C" fn rsc_reconstruction_free(rec: *mut RscReconstruction) {
    if !rec.is_null() {
        drop(Box::from_raw(rec));
    }
}

/// Copies the final coefficients. `needed` receives the coefficient count;
/// with `buf` null only the count is reported.
///
/// # Safety
/// `buf` must hold `len` doubles or be null.
#[no_mangle]
pub unsafe extern "C" fn rsc_reconstruction_coefficients(
    rec: *const RscReconstruction,
    buf: *mut f64,
    len: usize,
    needed: *mut usize,
) -> RscStatus {
    guard(|| {
        let rec = handle(rec, "reconstruction")?;
        let a = &rec.inner.coefficients;
        *out_ptr(needed, "needed")? = a.len();
        if buf.is_null() {
            return Ok(());
        }
        if len < a.len() {
            return Err(Fail(RscStatus::BufferTooSmall, format!("need {} doubles", a.len())));
        }
        slice_mut(buf, len, "buf")?[..a.len()].copy_from_slice(a);
        Ok(())
    })
}

/// # Safety
/// `rec` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn rsc_reconstruction_stage_count(rec: *const RscReconstruction) -> usize {
    rec.as_ref().map_or(0, |r| r.inner.stages.len())
}

/// Wavenumber, iterations, final `Err_k` (NaN if the stage was skipped) and
/// convergence flag of one stage.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rsc_reconstruction_stage(
    rec: *const RscReconstruction,
    index: usize,
    k: *mut f64,
    iterations: *mut usize,
    final_err: *mut f64,
    converged: *mut c_int,
) -> RscStatus {
    guard(|| {
        let rec = handle(rec, "reconstruction")?;
        let s = rec
            .inner
            .stages
            .get(index)
            .ok_or_else(|| Fail(RscStatus::OutOfRange, format!("stage {index} of {}", rec.inner.stages.len())))?;
        *out_ptr(k, "k")? = s.k;
        *out_ptr(iterations, "iterations")? = s.iterations;
        *out_ptr(final_err, "final_err")? = s.final_err.unwrap_or(f64::NAN);
        *out_ptr(converged, "converged")? = c_int::from(s.converged);
        Ok(())
    })
}

/// One regularized Gauss-Newton step for a complex `rows x cols` system given
/// row-major real and imaginary parts. Writes `cols` step entries, the chosen
/// `beta` and whether the discrepancy level was unattainable.
///
/// # Safety
/// Input buffers must hold `rows * cols` (matrix) or `rows` (residual)
/// doubles; `delta_a` must hold `cols` doubles.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn rsc_lm_step(
    rows: usize,
    cols: usize,
    j_re: *const f64,
    j_im: *const f64,
    r_re: *const f64,
    r_im: *const f64,
    rho: f64,
    delta_a: *mut f64,
    beta: *mut f64,
    unattainable: *mut c_int,
) -> RscStatus {
    guard(|| {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Fail(RscStatus::Dimension, "rows * cols overflows".into()))?;
        let (jr, ji) = (slice(j_re, n, "j_re")?, slice(j_im, n, "j_im")?);
        let (rr, ri) = (slice(r_re, rows, "r_re")?, slice(r_im, rows, "r_im")?);
        let out = slice_mut(delta_a, cols, "delta_a")?;
        let beta = out_ptr(beta, "beta")?;
        let flag = out_ptr(unattainable, "unattainable")?;
        let j = nalgebra_matrix(rows, cols, jr, ji);
        let r: Vec<Complex64> = rr.iter().zip(ri).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let step = lm_step(&j, &r, rho)?;
        out.copy_from_slice(&step.delta_a);
        *beta = step.beta;
        *flag = c_int::from(step.discrepancy_unattainable);
        Ok(())
    })
}

fn nalgebra_matrix(rows: usize, cols: usize, re: &[f64], im: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |i, j| Complex64::new(re[i * cols + j], im[i * cols + j]))
}

/// Observation angles `j pi / n_f`, `j = 0..=n_f`, into `buf` (`n_f + 1` doubles).
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rsc_observation_angles(n_f: usize, buf: *mut f64, len: usize) -> RscStatus {
    guard(|| {
        let angles = observation_angles(n_f);
        if len < angles.len() {
            return Err(Fail(RscStatus::BufferTooSmall, format!("need {} doubles", angles.len())));
        }
        slice_mut(buf, len, "buf")?[..angles.len()].copy_from_slice(&angles);
        Ok(())
    })
}
