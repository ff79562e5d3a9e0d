// SPDX-License-Identifier: Apache-2.0

//! C ABI over the `octrack` single-layer tracker.
//!
//! Trackers are opaque heap handles created with [`octrack_tracker_new`] and
//! released with [`octrack_tracker_free`]. Every fallible call returns an
//! [`OctrackStatus`]; outputs go through caller-provided pointers. Panics
//! never cross the boundary.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use octrack::evaluation::reduction_pct;
use octrack::kalman::{steady_state, FilterParams};
use octrack::signal::{BoundaryObservation, LayerId};
use octrack::track::{Pipeline, Tracker};
use octrack::window::WindowConfig;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OctrackStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParam = 2,
    NonFinite = 3,
    NoConvergence = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OctrackLayer {
    Epithelium = 0,
    Dm = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OctrackPipeline {
    Raw = 0,
    Kdh = 1,
}

/// Filter and window settings. Fill with [`octrack_params_default`] and
/// override fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OctrackParams {
    pub f: f64,
    pub h: f64,
    pub q: f64,
    pub r: f64,
    pub p0: f64,
    pub window_len: u32,
    pub warmup_len: u32,
    pub recent_weight: f64,
    pub prior_weight: f64,
}

/// Output of one step. `has_estimate` is 0 until the first valid depth.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OctrackStep {
    pub has_estimate: u8,
    pub estimate: f64,
    pub gain: f64,
}

/// Opaque tracker handle.
pub struct OctrackTracker {
    inner: Tracker,
    next_column: usize,
}

impl OctrackParams {
    fn split(&self) -> Result<(FilterParams, WindowConfig), OctrackStatus> {
        let filter = FilterParams {
            f: self.f,
            h: self.h,
            q: self.q,
            r: self.r,
            p0: self.p0,
        };
        let window = WindowConfig {
            window_len: self.window_len as usize,
            recent_weight: self.recent_weight,
            prior_weight: self.prior_weight,
            warmup_len: self.warmup_len as usize,
        };
        filter.validate().map_err(|_| OctrackStatus::InvalidParam)?;
        window.validate().map_err(|_| OctrackStatus::InvalidParam)?;
        Ok((filter, window))
    }
}

fn default_params() -> OctrackParams {
    let f = FilterParams::default();
    let w = WindowConfig::default();
    OctrackParams {
        f: f.f,
        h: f.h,
        q: f.q,
        r: f.r,
        p0: f.p0,
        window_len: w.window_len as u32,
        warmup_len: w.warmup_len as u32,
        recent_weight: w.recent_weight,
        prior_weight: w.prior_weight,
    }
}

fn guard(body: impl FnOnce() -> OctrackStatus) -> OctrackStatus {
    catch_unwind(AssertUnwindSafe(body)).unwrap_or(OctrackStatus::Panic)
}

/// Writes the default parameters (q = 1e-5, r = 1, 50-point windows,
/// 0.7 / 0.3 weights) to `out`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `OctrackParams`.
#[no_mangle]
pub unsafe extern "C" fn octrack_params_default(out: *mut OctrackParams) -> OctrackStatus {
    if out.is_null() {
        return OctrackStatus::NullPointer;
    }
    out.write(default_params());
    OctrackStatus::Ok
}

/// Creates a tracker. `params` may be null for defaults. On success `*out`
/// owns a handle that must be released with `octrack_tracker_free`.
///
/// # Safety
/// `params` must be null or valid for reads; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn octrack_tracker_new(
    layer: OctrackLayer,
    pipeline: OctrackPipeline,
    params: *const OctrackParams,
    out: *mut *mut OctrackTracker,
) -> OctrackStatus {
    if out.is_null() {
        return OctrackStatus::NullPointer;
    }
    let params = if params.is_null() { default_params() } else { params.read() };
    guard(|| {
        let (filter, window) = match params.split() {
            Ok(v) => v,
            Err(s) => return s,
        };
        let layer = match layer {
            OctrackLayer::Epithelium => LayerId::Epithelium,
            OctrackLayer::Dm => LayerId::DM,
        };
        let pipeline = match pipeline {
            OctrackPipeline::Raw => Pipeline::Raw,
            OctrackPipeline::Kdh => Pipeline::Kdh,
        };
        let handle = Box::new(OctrackTracker {
            inner: Tracker::new(layer, pipeline, filter, window),
            next_column: 0,
        });
        out.write(Box::into_raw(handle));
        OctrackStatus::Ok
    })
}

/// Feeds the next column. `valid == 0` marks a dropout and `depth_px` is
/// ignored.
///
/// # Safety
/// `tracker` must come from `octrack_tracker_new` and not be freed; `out`
/// must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn octrack_tracker_step(
    tracker: *mut OctrackTracker,
    depth_px: f64,
    valid: u8,
    out: *mut OctrackStep,
) -> OctrackStatus {
    if tracker.is_null() || out.is_null() {
        return OctrackStatus::NullPointer;
    }
    if valid != 0 && !depth_px.is_finite() {
        return OctrackStatus::NonFinite;
    }
    let t = &mut *tracker;
    guard(|| {
        let layer = t.inner.layer();
        let obs = if valid != 0 {
            BoundaryObservation::valid(layer, t.next_column, depth_px)
        } else {
            BoundaryObservation::dropout(layer, t.next_column)
        };
        let step = t.inner.step(&obs);
        t.next_column += 1;
        out.write(OctrackStep {
            has_estimate: step.estimate.is_some() as u8,
            estimate: step.estimate.unwrap_or(f64::NAN),
            gain: step.gain,
        });
        OctrackStatus::Ok
    })
}

/// Number of columns fed so far.
///
/// # Safety
/// `tracker` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn octrack_tracker_columns(tracker: *const OctrackTracker) -> usize {
    tracker.as_ref().map_or(0, |t| t.next_column)
}

/// Releases a tracker. Null is ignored.
///
/// # Safety
/// `tracker` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn octrack_tracker_free(tracker: *mut OctrackTracker) {
    if !tracker.is_null() {
        drop(Box::from_raw(tracker));
    }
}

/// Fixed point of the prior covariance and its gain.
///
/// # Safety
/// `params` must be null (defaults) or readable; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn octrack_steady_state(
    params: *const OctrackParams,
    tol: f64,
    max_iter: usize,
    p_prior_out: *mut f64,
    gain_out: *mut f64,
) -> OctrackStatus {
    if p_prior_out.is_null() || gain_out.is_null() {
        return OctrackStatus::NullPointer;
    }
    let params = if params.is_null() { default_params() } else { params.read() };
    guard(|| {
        let (filter, _) = match params.split() {
            Ok(v) => v,
            Err(s) => return s,
        };
        match steady_state(&filter, tol, max_iter) {
            Ok(ss) => {
                p_prior_out.write(ss.p_prior);
                gain_out.write(ss.gain);
                OctrackStatus::Ok
            }
            Err(octrack::Error::NoConvergence(_)) => OctrackStatus::NoConvergence,
            Err(_) => OctrackStatus::InvalidParam,
        }
    })
}

/// `100 * (baseline - method) / baseline`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn octrack_reduction_pct(baseline_mae: f64, method_mae: f64, out: *mut f64) -> OctrackStatus {
    if out.is_null() {
        return OctrackStatus::NullPointer;
    }
    match reduction_pct(baseline_mae, method_mae) {
        Ok(v) => {
            out.write(v);
            OctrackStatus::Ok
        }
        Err(_) => OctrackStatus::InvalidParam,
    }
}

/// Static, NUL-terminated description of a status code.
#[no_mangle]
pub extern "C" fn octrack_status_message(status: OctrackStatus) -> *const c_char {
    let msg: &'static CStr = match status {
        OctrackStatus::Ok => c"ok",
        OctrackStatus::NullPointer => c"null pointer argument",
        OctrackStatus::InvalidParam => c"invalid parameter",
        OctrackStatus::NonFinite => c"non-finite depth",
        OctrackStatus::NoConvergence => c"steady state did not converge",
        OctrackStatus::Panic => c"internal panic",
    };
    msg.as_ptr()
}

#[no_mangle]
pub extern "C" fn octrack_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
