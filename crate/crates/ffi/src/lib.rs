//! C ABI over `fusion_frames`.
//!
//! Every function returns an [`FfStatus`]; results come back through out
//! pointers. Handles ([`FfStream`], [`FfFrame`]) are opaque and owned by the
//! caller until passed to their `_free` function. Strings returned through
//! `char **` out pointers are owned by the caller and must be released with
//! [`ff_string_free`]. After a non-OK status, [`ff_last_error`] describes the
//! failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fusion_frames::angles::{angle_report, equiangular_window, hs_inner, welch_bound};
use fusion_frames::bounds::{BoundParams, BoundSet};
use fusion_frames::frame::{build_fusion_frame_from_gaussian, frame_bounds, frame_operator, FusionFrame};
use fusion_frames::montecarlo::{run_experiment, write_trials_csv, ExperimentConfig};
use fusion_frames::rng::{derive_stream, random_subspace, RngStream};
use fusion_frames::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FfStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad dimensions, parameters, or malformed input.
    InvalidArgument = 2,
    RankDeficient = 3,
    NoConvergence = 4,
    DegenerateDraw = 5,
    Io = 6,
    /// Runtime failure not covered above.
    Runtime = 7,
    Panic = 8,
}

/// Seeded random stream.
pub struct FfStream(RngStream);

/// Immutable fusion frame.
pub struct FfFrame(FusionFrame);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct FfFrameBounds {
    pub lower: f64,
    pub upper: f64,
    pub tight_constant: f64,
    /// `+inf` when the lower bound is zero.
    pub epsilon_tight: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct FfAngleSummary {
    pub normalized_min: f64,
    pub normalized_max: f64,
    pub normalized_mean: f64,
    pub max_pair_trace: f64,
    /// NaN unless the frame is equi-dimensional.
    pub welch: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FfStatus {
    match e {
        Error::RankDeficient { .. } => FfStatus::RankDeficient,
        Error::NoConvergence { .. } => FfStatus::NoConvergence,
        Error::DegenerateDraw { .. } => FfStatus::DegenerateDraw,
        Error::Io(_) => FfStatus::Io,
        e if e.is_validation() => FfStatus::InvalidArgument,
        _ => FfStatus::Runtime,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (FfStatus, String)>) -> FfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FfStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside fusion_frames".into());
            FfStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (FfStatus, String)>;
}

impl<T> IntoFfi<T> for fusion_frames::Result<T> {
    fn ffi(self) -> Result<T, (FfStatus, String)> {
        self.map_err(|e| (status_of(&e), format!("error[{}]: {e}", e.tag())))
    }
}

fn null(name: &str) -> (FfStatus, String) {
    (FfStatus::NullPointer, format!("{name} is null"))
}

fn invalid(msg: impl Into<String>) -> (FfStatus, String) {
    (FfStatus::InvalidArgument, msg.into())
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (FfStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (FfStatus, String)> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, (FfStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not UTF-8")))
}

fn to_c_string(s: String) -> Result<*mut c_char, (FfStatus, String)> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| invalid("output contains an interior NUL"))
}

unsafe fn write_slice(dst: *mut f64, len: usize, values: &[f64]) -> Result<(), (FfStatus, String)> {
    if dst.is_null() {
        return Err(null("buffer"));
    }
    if len < values.len() {
        return Err(invalid(format!("buffer holds {len} values, need {}", values.len())));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), dst, values.len());
    Ok(())
}

/// Message for the last non-OK status on this thread. Valid until the next
/// failing call on the same thread; never null.
#[no_mangle]
pub extern "C" fn ff_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ff_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates stream `stream_id` of `master_seed`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ff_stream_new(master_seed: u64, stream_id: u64, out: *mut *mut FfStream) -> FfStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = Box::into_raw(Box::new(FfStream(derive_stream(master_seed, stream_id))));
        Ok(())
    })
}

/// # Safety
/// `stream` must be null or a live handle from [`ff_stream_new`].
#[no_mangle]
pub unsafe extern "C" fn ff_stream_free(stream: *mut FfStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_stream_next_u64(stream: *mut FfStream, out: *mut u64) -> FfStatus {
    guard(|| {
        let st = deref_mut(stream, "stream")?;
        *deref_mut(out, "out")? = st.0.next_u64();
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_stream_standard_normal(stream: *mut FfStream, out: *mut f64) -> FfStatus {
    guard(|| {
        let st = deref_mut(stream, "stream")?;
        *deref_mut(out, "out")? = st.0.standard_normal();
        Ok(())
    })
}

/// Samples `count` independent uniformly distributed `subspace_dim`-dimensional
/// subspaces of R^`dim` with unit weights.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_frame_sample(
    stream: *mut FfStream,
    dim: usize,
    subspace_dim: usize,
    count: usize,
    out: *mut *mut FfFrame,
) -> FfStatus {
    guard(|| {
        let st = deref_mut(stream, "stream")?;
        let out = deref_mut(out, "out")?;
        if count == 0 {
            return Err(invalid("count must be >= 1"));
        }
        let subs = (0..count)
            .map(|_| random_subspace(&mut st.0, dim, subspace_dim))
            .collect::<fusion_frames::Result<Vec<_>>>()
            .ffi()?;
        let ff = FusionFrame::unit_weights(subs).ffi()?;
        *out = Box::into_raw(Box::new(FfFrame(ff)));
        Ok(())
    })
}

/// Frame whose subspaces are spanned by consecutive `subspace_dim`-row
/// blocks of one `(count·subspace_dim)×dim` Gaussian matrix.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_frame_from_gaussian(
    stream: *mut FfStream,
    dim: usize,
    subspace_dim: usize,
    count: usize,
    out: *mut *mut FfFrame,
) -> FfStatus {
    guard(|| {
        let st = deref_mut(stream, "stream")?;
        let out = deref_mut(out, "out")?;
        let ff = build_fusion_frame_from_gaussian(&mut st.0, dim, subspace_dim, count).ffi()?;
        *out = Box::into_raw(Box::new(FfFrame(ff)));
        Ok(())
    })
}

/// Parses frame JSON (`{"dim", "weights", "subspaces"}`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_frame_from_json(json: *const c_char, out: *mut *mut FfFrame) -> FfStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let out = deref_mut(out, "out")?;
        let ff = FusionFrame::from_json(text).ffi()?;
        *out = Box::into_raw(Box::new(FfFrame(ff)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_frame_load(path: *const c_char, out: *mut *mut FfFrame) -> FfStatus {
    guard(|| {
        let path = read_str(path, "path")?;
        let out = deref_mut(out, "out")?;
        let ff = FusionFrame::load(Path::new(path)).ffi()?;
        *out = Box::into_raw(Box::new(FfFrame(ff)));
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_frame_save(frame: *const FfFrame, path: *const c_char) -> FfStatus {
    guard(|| {
        let ff = deref(frame, "frame")?;
        let path = read_str(path, "path")?;
        ff.0.save(Path::new(path)).ffi()
    })
}

/// # Safety
/// Pointers must be valid. Free the result with [`ff_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ff_frame_to_json(frame: *const FfFrame, out: *mut *mut c_char) -> FfStatus {
    guard(|| {
        let ff = deref(frame, "frame")?;
        let out = deref_mut(out, "out")?;
        *out = to_c_string(ff.0.to_json().ffi()?)?;
        Ok(())
    })
}

/// # Safety
/// `frame` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ff_frame_free(frame: *mut FfFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// Ambient dimension and number of subspaces.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_frame_shape(frame: *const FfFrame, dim: *mut usize, count: *mut usize) -> FfStatus {
    guard(|| {
        let ff = deref(frame, "frame")?;
        *deref_mut(dim, "dim")? = ff.0.ambient_dim();
        *deref_mut(count, "count")? = ff.0.len();
        Ok(())
    })
}

/// Writes the `dim×dim` frame operator row-major into `buf`.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ff_frame_operator(frame: *const FfFrame, buf: *mut f64, len: usize) -> FfStatus {
    guard(|| {
        let ff = deref(frame, "frame")?;
        write_slice(buf, len, frame_operator(&ff.0).as_slice())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_frame_bounds(frame: *const FfFrame, out: *mut FfFrameBounds) -> FfStatus {
    guard(|| {
        let ff = deref(frame, "frame")?;
        let out = deref_mut(out, "out")?;
        let b = frame_bounds(&ff.0).ffi()?;
        *out = FfFrameBounds {
            lower: b.lower,
            upper: b.upper,
            tight_constant: b.tight_constant,
            epsilon_tight: b.epsilon_tight,
        };
        Ok(())
    })
}

/// Needs at least two subspaces.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_angle_summary(frame: *const FfFrame, out: *mut FfAngleSummary) -> FfStatus {
    guard(|| {
        let ff = deref(frame, "frame")?;
        let out = deref_mut(out, "out")?;
        let r = angle_report(&ff.0).ffi()?;
        *out = FfAngleSummary {
            normalized_min: r.normalized_min,
            normalized_max: r.normalized_max,
            normalized_mean: r.normalized_mean,
            max_pair_trace: r.max_off_diagonal(),
            welch: r.welch,
        };
        Ok(())
    })
}

/// Writes the `count×count` table of `tr[PjPl]` row-major into `buf`.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ff_pair_values(frame: *const FfFrame, buf: *mut f64, len: usize) -> FfStatus {
    guard(|| {
        let ff = deref(frame, "frame")?;
        let r = angle_report(&ff.0).ffi()?;
        let flat: Vec<f64> = r.pair_values.concat();
        write_slice(buf, len, &flat)
    })
}

/// `tr[PjPl]` for subspaces `j` and `l` of one frame.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_hs_inner(frame: *const FfFrame, j: usize, l: usize, out: *mut f64) -> FfStatus {
    guard(|| {
        let ff = deref(frame, "frame")?;
        let out = deref_mut(out, "out")?;
        let subs = ff.0.subspaces();
        let (a, b) = match (subs.get(j), subs.get(l)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(invalid(format!("index out of range for {} subspaces", subs.len()))),
        };
        *out = hs_inner(a, b).ffi()?;
        Ok(())
    })
}

/// `s(Ks − N)/((K − 1)N)`; requires `K ≥ 2` and `1 ≤ s ≤ N`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_welch_bound(dim: usize, count: usize, subspace_dim: usize, out: *mut f64) -> FfStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        if count < 2 || subspace_dim == 0 || subspace_dim > dim {
            return Err(invalid(format!(
                "need K >= 2 and 1 <= s <= N, got N={dim}, K={count}, s={subspace_dim}"
            )));
        }
        *out = welch_bound(dim, count, subspace_dim);
        Ok(())
    })
}

/// Equiangular window `[lo, hi]` at distortion `epsilon`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ff_equiangular_window(
    epsilon: f64,
    dim: usize,
    subspace_dim: usize,
    lo: *mut f64,
    hi: *mut f64,
) -> FfStatus {
    guard(|| {
        let lo = deref_mut(lo, "lo")?;
        let hi = deref_mut(hi, "hi")?;
        if !(epsilon > 0.0 && epsilon.is_finite()) || subspace_dim == 0 || subspace_dim > dim {
            return Err(invalid("need epsilon > 0 and 1 <= s <= N"));
        }
        let w = equiangular_window(epsilon, dim, subspace_dim);
        *lo = w.lo;
        *hi = w.hi;
        Ok(())
    })
}

/// Every closed-form bound at one parameter point, as JSON. `big_m = 0`
/// means `K·s`.
///
/// # Safety
/// `out` must be valid. Free the result with [`ff_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ff_bounds_json(
    dim: usize,
    subspace_dim: usize,
    count: usize,
    big_m: usize,
    delta: f64,
    out: *mut *mut c_char,
) -> FfStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let mut p = BoundParams::new(dim, subspace_dim, count, delta);
        if big_m != 0 {
            p.m = big_m;
        }
        let set = BoundSet::evaluate(p).ffi()?;
        let text = serde_json::to_string(&set).map_err(|e| invalid(e.to_string()))?;
        *out = to_c_string(text)?;
        Ok(())
    })
}

/// Runs an experiment from config JSON on `workers` threads. The aggregate
/// report JSON goes to `report_out`; if `csv_out` is non-null the per-trial
/// CSV goes there.
///
/// # Safety
/// `config_json` must be NUL-terminated; out pointers valid or (`csv_out`) null.
#[no_mangle]
pub unsafe extern "C" fn ff_run_experiment_json(
    config_json: *const c_char,
    workers: usize,
    report_out: *mut *mut c_char,
    csv_out: *mut *mut c_char,
) -> FfStatus {
    guard(|| {
        let text = read_str(config_json, "config_json")?;
        let report_out = deref_mut(report_out, "report_out")?;
        let cfg = ExperimentConfig::from_json(text).ffi()?;
        let exp = run_experiment(&cfg, workers).ffi()?;
        let report = serde_json::to_string(&exp.report).map_err(|e| invalid(e.to_string()))?;
        let csv = if csv_out.is_null() {
            None
        } else {
            let mut buf = Vec::new();
            write_trials_csv(&mut buf, &exp.trials).ffi()?;
            Some(to_c_string(String::from_utf8(buf).map_err(|e| invalid(e.to_string()))?)?)
        };
        *report_out = to_c_string(report)?;
        if let Some(c) = csv {
            *csv_out = c;
        }
        Ok(())
    })
}
