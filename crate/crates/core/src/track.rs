// SPDX-License-Identifier: Apache-2.0

//! Per-layer trackers and the two-layer streaming driver.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kalman::FilterParams;
use crate::signal::{BoundaryObservation, BoundaryTrace, LayerId};
use crate::window::{KdhTrack, StepOutput, WindowConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pipeline {
    /// Observations passed through; dropouts hold the last valid depth.
    Raw,
    /// Windowed Kalman filter.
    Kdh,
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(Pipeline::Raw),
            "kdh" => Ok(Pipeline::Kdh),
            other => Err(Error::InvalidParam(format!("unknown pipeline {other:?}"))),
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pipeline::Raw => "raw",
            Pipeline::Kdh => "kdh",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Inner {
    Raw { last: Option<f64> },
    Kdh(KdhTrack),
}

/// Causal single-layer tracker.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracker {
    layer: LayerId,
    params: FilterParams,
    window: WindowConfig,
    inner: Inner,
}

impl Tracker {
    pub fn new(layer: LayerId, pipeline: Pipeline, params: FilterParams, window: WindowConfig) -> Self {
        let inner = match pipeline {
            Pipeline::Raw => Inner::Raw { last: None },
            Pipeline::Kdh => Inner::Kdh(KdhTrack::new(&window)),
        };
        Self {
            layer,
            params,
            window,
            inner,
        }
    }

    pub fn layer(&self) -> LayerId {
        self.layer
    }

    pub fn step(&mut self, obs: &BoundaryObservation) -> StepOutput {
        debug_assert_eq!(obs.layer, self.layer);
        match &mut self.inner {
            Inner::Raw { last } => match obs.depth().filter(|z| z.is_finite()) {
                Some(z) => {
                    *last = Some(z);
                    StepOutput {
                        estimate: Some(z),
                        gain: 1.0,
                    }
                }
                None => StepOutput {
                    estimate: *last,
                    gain: 0.0,
                },
            },
            Inner::Kdh(track) => track.step(obs, &self.params, &self.window),
        }
    }
}

/// Runs one layer's observations through a fresh tracker.
pub fn track_layer(
    layer: LayerId,
    observations: &[BoundaryObservation],
    pipeline: Pipeline,
    params: &FilterParams,
    window: &WindowConfig,
) -> BoundaryTrace {
    let mut tracker = Tracker::new(layer, pipeline, *params, *window);
    let mut trace = BoundaryTrace::new(layer);
    for obs in observations {
        let out = tracker.step(obs);
        trace.push(*obs, out.estimate, out.gain);
    }
    trace
}

/// Tracks both layers, each on its own worker, and returns
/// `[epithelium, dm]` traces.
pub fn track_pairs(
    pairs: &[(BoundaryObservation, BoundaryObservation)],
    pipeline: Pipeline,
    params: &FilterParams,
    window: &WindowConfig,
) -> [BoundaryTrace; 2] {
    let epi: Vec<_> = pairs.iter().map(|p| p.0).collect();
    let dm: Vec<_> = pairs.iter().map(|p| p.1).collect();
    let (a, b) = rayon::join(
        || track_layer(LayerId::Epithelium, &epi, pipeline, params, window),
        || track_layer(LayerId::DM, &dm, pipeline, params, window),
    );
    [a, b]
}
