//! C ABI over `pinns`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`PinnsStatus`]; the message of the last failure on the calling
//! thread is available from [`pinns_last_error`]. Panics are caught and
//! reported as `PINNS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pinns::metrics;
use pinns::network::{forward, Checkpoint};
use pinns::problems::{exact_values, ProblemSpec};
use pinns::training::{self, Hyperparameters};
use pinns::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PinnsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownProblem = 3,
    Io = 4,
    BufferTooSmall = 5,
    Failed = 6,
    Panic = 7,
}

/// A builtin problem.
pub struct PinnsProblem {
    spec: ProblemSpec,
}

/// A network with its parameters.
pub struct PinnsModel {
    checkpoint: Checkpoint,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(e: &Error) -> PinnsStatus {
    match e {
        Error::UnknownProblem { .. } => PinnsStatus::UnknownProblem,
        Error::Io(_) => PinnsStatus::Io,
        Error::Config(_) | Error::LengthMismatch { .. } | Error::SetMismatch(_) | Error::UnsupportedDimension(_) => {
            PinnsStatus::InvalidArgument
        }
        _ => PinnsStatus::Failed,
    }
}

fn guard(f: impl FnOnce() -> Result<(), PinnsStatus>) -> PinnsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PinnsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside pinns");
            PinnsStatus::Panic
        }
    }
}

fn fail(e: Error) -> PinnsStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> PinnsStatus {
    set_error(format!("{what} is null"));
    PinnsStatus::NullPointer
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, PinnsStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not UTF-8"));
        PinnsStatus::InvalidArgument
    })
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, PinnsStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize) -> Result<&'a mut [f64], PinnsStatus> {
    if p.is_null() {
        return Err(null("output buffer"));
    }
    if len < need {
        set_error(format!("output buffer holds {len} values, {need} needed"));
        return Err(PinnsStatus::BufferTooSmall);
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn in_slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], PinnsStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null("input buffer"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL, or
/// 0 when there is none.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pinns_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pinns_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Looks up a catalog problem such as `poisson` or `heatnd:5`.
///
/// # Safety
/// `id` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pinns_problem_new(id: *const c_char, out: *mut *mut PinnsProblem) -> PinnsStatus {
    guard(|| {
        let id = read_str(id, "id")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = ProblemSpec::from_id(id).map_err(fail)?;
        *out = Box::into_raw(Box::new(PinnsProblem { spec }));
        Ok(())
    })
}

/// # Safety
/// `p` must come from [`pinns_problem_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pinns_problem_free(p: *mut PinnsProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Input dimension (space, then time); 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pinns_problem_input_dim(p: *const PinnsProblem) -> usize {
    p.as_ref().map_or(0, |p| p.spec.input_dim())
}

/// Output dimension; 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pinns_problem_output_dim(p: *const PinnsProblem) -> usize {
    p.as_ref().map_or(0, |p| p.spec.output_dim())
}

/// Exact solution at `n_points` row-major points.
///
/// # Safety
/// `points` holds `n_points · input_dim` values; `out` holds `out_len`.
#[no_mangle]
pub unsafe extern "C" fn pinns_problem_exact(
    p: *const PinnsProblem,
    points: *const f64,
    n_points: usize,
    out: *mut f64,
    out_len: usize,
) -> PinnsStatus {
    guard(|| {
        let p = handle(p, "problem")?;
        let (d, m) = (p.spec.input_dim(), p.spec.output_dim());
        let x = in_slice(points, n_points * d)?;
        let out = out_slice(out, out_len, n_points * m)?;
        for (i, xi) in x.chunks_exact(d).enumerate() {
            out[i * m..(i + 1) * m].copy_from_slice(&exact_values(&p.spec.kind, xi));
        }
        Ok(())
    })
}

/// Settings for [`pinns_train`]. Zero fields take the library defaults.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct PinnsTrainOptions {
    /// Total training points.
    pub n_points: usize,
    pub depth: usize,
    pub width: usize,
    pub lambda: f64,
    pub lambda_reg: f64,
    pub max_iter: usize,
    pub seed: u64,
}

/// Training errors of a run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct PinnsTrainSummary {
    pub e_d: f64,
    pub e_p: f64,
    /// NaN for problems without a boundary term.
    pub e_sb: f64,
    pub e_t: f64,
    pub iterations: usize,
    /// Nonzero when the optimizer stopped on a line-search failure.
    pub flagged: i32,
}

/// Trains one network with LBFGS.
///
/// # Safety
/// `p` must be live; `opts` may be null; `out_model` must be writable;
/// `summary` may be null.
#[no_mangle]
pub unsafe extern "C" fn pinns_train(
    p: *const PinnsProblem,
    opts: *const PinnsTrainOptions,
    out_model: *mut *mut PinnsModel,
    summary: *mut PinnsTrainSummary,
) -> PinnsStatus {
    guard(|| {
        let p = handle(p, "problem")?;
        if out_model.is_null() {
            return Err(null("out_model"));
        }
        let o = opts.as_ref().copied().unwrap_or_default();
        let mut h = Hyperparameters::default();
        if o.depth > 0 {
            h.depth = o.depth;
        }
        if o.width > 0 {
            h.width = o.width;
        }
        if o.lambda > 0.0 {
            h.lambda = o.lambda;
        }
        h.lambda_reg = o.lambda_reg;
        if o.max_iter > 0 {
            h.max_iter = o.max_iter;
        }
        let n = if o.n_points > 0 { o.n_points } else { p.spec.default_n };
        let rec = training::train(&p.spec, &h, p.spec.counts(n), o.seed).map_err(fail)?;
        if let Some(s) = summary.as_mut() {
            *s = PinnsTrainSummary {
                e_d: rec.e_dt,
                e_p: rec.e_pt,
                e_sb: rec.e_sbt.unwrap_or(f64::NAN),
                e_t: rec.e_t,
                iterations: rec.iterations,
                flagged: i32::from(rec.status.flagged()),
            };
        }
        *out_model = Box::into_raw(Box::new(PinnsModel {
            checkpoint: rec.checkpoint(),
        }));
        Ok(())
    })
}

/// Loads a JSON checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pinns_model_load(path: *const c_char, out: *mut *mut PinnsModel) -> PinnsStatus {
    guard(|| {
        let path = read_str(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let checkpoint = Checkpoint::load(Path::new(path)).map_err(fail)?;
        *out = Box::into_raw(Box::new(PinnsModel { checkpoint }));
        Ok(())
    })
}

/// Writes a JSON checkpoint.
///
/// # Safety
/// `m` must be live; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pinns_model_save(m: *const PinnsModel, path: *const c_char) -> PinnsStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let path = read_str(path, "path")?;
        m.checkpoint.save(Path::new(path)).map_err(fail)
    })
}

/// # Safety
/// `m` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pinns_model_free(m: *mut PinnsModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of parameters; 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pinns_model_param_count(m: *const PinnsModel) -> usize {
    m.as_ref().map_or(0, |m| m.checkpoint.theta.len())
}

/// Network outputs at `n_points` row-major points.
///
/// # Safety
/// `points` holds `n_points · input_dim` values; `out` holds `out_len`.
#[no_mangle]
pub unsafe extern "C" fn pinns_model_eval(
    m: *const PinnsModel,
    points: *const f64,
    n_points: usize,
    out: *mut f64,
    out_len: usize,
) -> PinnsStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let arch = &m.checkpoint.arch;
        let x = in_slice(points, n_points * arch.input_dim)?;
        let out = out_slice(out, out_len, n_points * arch.output_dim)?;
        for (i, xi) in x.chunks_exact(arch.input_dim).enumerate() {
            let y = forward(arch, m.checkpoint.theta.as_slice(), xi);
            out[i * arch.output_dim..(i + 1) * arch.output_dim].copy_from_slice(&y);
        }
        Ok(())
    })
}

/// Relative L² error in percent on the default test set.
///
/// # Safety
/// `m` and `p` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pinns_model_l2_error(
    m: *const PinnsModel,
    p: *const PinnsProblem,
    out: *mut f64,
) -> PinnsStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let p = handle(p, "problem")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let arch = &m.checkpoint.arch;
        if arch.input_dim != p.spec.input_dim() || arch.output_dim != p.spec.output_dim() {
            set_error("model does not match the problem dimensions");
            return Err(PinnsStatus::InvalidArgument);
        }
        let (test, _) = metrics::default_test_set(&p.spec, 0);
        let pred = metrics::predict(arch, m.checkpoint.theta.as_slice(), &test);
        *out = metrics::l2_relative_error(&p.spec, &test, &pred);
        Ok(())
    })
}
