// SPDX-License-Identifier: Apache-2.0

//! Streaming boundary tracking for M-mode OCT scans.
//!
//! Raw per-column boundary depths (from a detector, a recorded segmentation,
//! or a synthetic oracle) are smoothed by a scalar Kalman filter whose
//! observation input is pre-averaged over a two-block sliding window. The
//! crate also ships a synthetic M-scan generator, patch extraction for
//! network-sized inputs, and boundary error metrics.

// Parameter checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod kalman;
pub mod observers;
pub mod patcher;
pub mod signal;
pub mod synth;
pub mod track;
pub mod window;

pub use error::{Error, Result};
pub use kalman::{FilterParams, KalmanState};
pub use signal::{AScanColumn, BoundaryObservation, BoundaryTrace, LayerId, MScanFrame, ObsStatus};
pub use track::{Pipeline, Tracker};
pub use window::{WindowConfig, WindowState};
