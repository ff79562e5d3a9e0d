// SPDX-License-Identifier: Apache-2.0

//! Two-block sliding-window pre-filter for the Kalman observation input.
//!
//! For the first `warmup_len` valid points (and until two full windows have
//! been collected) the raw observation passes through untouched. After that
//! the filter sees `recent_weight * mean(newest block) + prior_weight *
//! mean(block before it)`. Only raw valid depths enter the buffer.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalman::{FilterParams, KalmanState};
use crate::signal::BoundaryObservation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_len: usize,
    pub recent_weight: f64,
    pub prior_weight: f64,
    pub warmup_len: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window_len: 50,
            recent_weight: 0.7,
            prior_weight: 0.3,
            warmup_len: 50,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || self.warmup_len == 0 {
            return Err(Error::InvalidParam("window_len and warmup_len must be positive".into()));
        }
        let in_unit = |w: f64| (0.0..=1.0).contains(&w);
        if !in_unit(self.recent_weight) || !in_unit(self.prior_weight) {
            return Err(Error::InvalidParam("window weights must lie in [0, 1]".into()));
        }
        if (self.recent_weight + self.prior_weight - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParam("window weights must sum to 1".into()));
        }
        Ok(())
    }
}

/// FIFO of the last `2 * window_len` valid depths plus a lifetime count.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowState {
    buffer: VecDeque<f64>,
    capacity: usize,
    count: u64,
}

impl WindowState {
    pub fn new(cfg: &WindowConfig) -> Self {
        let capacity = 2 * cfg.window_len;
        Self {
            buffer: VecDeque::with_capacity(capacity + 1),
            capacity,
            count: 0,
        }
    }

    pub fn push(&mut self, z: f64) -> Result<()> {
        if !z.is_finite() {
            return Err(Error::NonFinite("window sample"));
        }
        self.buffer.push_back(z);
        if self.buffer.len() > self.capacity {
            self.buffer.pop_front();
        }
        self.count += 1;
        Ok(())
    }

    /// Dropouts never enter the buffer.
    pub fn push_observation(&mut self, obs: &BoundaryObservation) -> Result<()> {
        match obs.depth() {
            Some(z) => self.push(z),
            None => Ok(()),
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    /// Oldest first.
    pub fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        self.buffer.iter().copied()
    }

    /// Observation handed to the Kalman update. `z` must already have been
    /// pushed.
    pub fn effective_observation(&self, z: f64, cfg: &WindowConfig) -> f64 {
        let n = cfg.window_len;
        if self.count <= cfg.warmup_len as u64 || self.count < 2 * n as u64 || self.buffer.len() < 2 * n {
            return z;
        }
        let start = self.buffer.len() - 2 * n;
        let mut prior_sum = 0.0;
        let mut recent_sum = 0.0;
        for (i, v) in self.buffer.iter().skip(start).enumerate() {
            if i < n {
                prior_sum += v;
            } else {
                recent_sum += v;
            }
        }
        let len = n as f64;
        cfg.recent_weight * (recent_sum / len) + cfg.prior_weight * (prior_sum / len)
    }
}

/// Per-layer state of the windowed Kalman tracker. The filter is seeded by
/// the first valid observation; until then there is no estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct KdhTrack {
    pub kalman: Option<KalmanState>,
    pub window: WindowState,
}

/// Result of one tracker step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub estimate: Option<f64>,
    pub gain: f64,
}

impl KdhTrack {
    pub fn new(cfg: &WindowConfig) -> Self {
        Self {
            kalman: None,
            window: WindowState::new(cfg),
        }
    }

    pub fn step(
        &mut self,
        obs: &BoundaryObservation,
        params: &FilterParams,
        cfg: &WindowConfig,
    ) -> StepOutput {
        let z = obs.depth().filter(|z| z.is_finite());
        match (self.kalman, z) {
            (None, None) => StepOutput {
                estimate: None,
                gain: 0.0,
            },
            (None, Some(z)) => {
                // push cannot fail: z is finite
                let _ = self.window.push(z);
                let mut state = KalmanState::init(z, params).expect("finite seed");
                state.last_gain = 1.0;
                self.kalman = Some(state);
                StepOutput {
                    estimate: Some(z),
                    gain: 1.0,
                }
            }
            (Some(state), None) => {
                let (next, est) = state.step(obs, params);
                self.kalman = Some(next);
                StepOutput {
                    estimate: Some(est),
                    gain: 0.0,
                }
            }
            (Some(state), Some(z)) => {
                let _ = self.window.push(z);
                let effective = self.window.effective_observation(z, cfg);
                let mut next = state
                    .predict(params)
                    .update(effective, params)
                    .expect("window output is finite");
                next.steps += 1;
                self.kalman = Some(next);
                StepOutput {
                    estimate: Some(next.x_hat),
                    gain: next.last_gain,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::LayerId;

    fn filled(values: impl IntoIterator<Item = f64>) -> WindowState {
        let mut w = WindowState::new(&WindowConfig::default());
        for v in values {
            w.push(v).unwrap();
        }
        w
    }

    #[test]
    fn push_examples() {
        let w = filled([5.0]);
        assert_eq!(w.samples().collect::<Vec<_>>(), vec![5.0]);
        assert_eq!(w.count(), 1);

        let mut w = filled((0..100).map(f64::from));
        w.push(100.0).unwrap();
        assert_eq!(w.len(), 100);
        assert_eq!(w.samples().next(), Some(1.0));
        assert_eq!(w.count(), 101);

        let before = w.clone();
        w.push_observation(&BoundaryObservation::dropout(LayerId::DM, 3)).unwrap();
        assert_eq!(w, before);
        assert!(w.push(f64::NAN).is_err());
    }

    #[test]
    fn warmup_passes_through() {
        let cfg = WindowConfig::default();
        let w = filled((0..30).map(|_| 412.5));
        assert_eq!(w.effective_observation(412.5, &cfg), 412.5);
    }

    #[test]
    fn transition_gap_passes_through() {
        let cfg = WindowConfig::default();
        let w = filled((0..99).map(f64::from));
        assert_eq!(w.effective_observation(98.0, &cfg), 98.0);
    }

    #[test]
    fn equal_means() {
        let cfg = WindowConfig::default();
        let w = filled((0..100).map(|_| 200.0));
        assert_eq!(w.effective_observation(200.0, &cfg), 200.0);
    }

    #[test]
    fn two_block_weighting() {
        let cfg = WindowConfig::default();
        let w = filled((0..50).map(|_| 10.0).chain((0..50).map(|_| 20.0)));
        // brute force: 0.7 * mean(newer) + 0.3 * mean(older)
        let values: Vec<f64> = w.samples().collect();
        let older = values[..50].iter().sum::<f64>() / 50.0;
        let newer = values[50..].iter().sum::<f64>() / 50.0;
        assert_eq!(older, 10.0);
        assert_eq!(newer, 20.0);
        let got = w.effective_observation(20.0, &cfg);
        assert!((got - 17.0).abs() < 1e-12, "{got}");
    }

    #[test]
    fn config_validation() {
        assert!(WindowConfig::default().validate().is_ok());
        let bad = WindowConfig { recent_weight: 0.8, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = WindowConfig { window_len: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn kdh_dropout_holds_estimate() {
        let params = FilterParams::default();
        let cfg = WindowConfig::default();
        let mut t = KdhTrack::new(&cfg);
        let mut last = None;
        for k in 0..80 {
            last = t.step(&BoundaryObservation::valid(LayerId::DM, k, 100.0 + (k % 3) as f64), &params, &cfg).estimate;
        }
        let out = t.step(&BoundaryObservation::dropout(LayerId::DM, 80), &params, &cfg);
        assert_eq!(out.estimate, last);
        assert_eq!(out.gain, 0.0);
    }

    #[test]
    fn kdh_without_seed_has_no_estimate() {
        let params = FilterParams::default();
        let cfg = WindowConfig::default();
        let mut t = KdhTrack::new(&cfg);
        let out = t.step(&BoundaryObservation::dropout(LayerId::Epithelium, 0), &params, &cfg);
        assert_eq!(out.estimate, None);
        let out = t.step(&BoundaryObservation::valid(LayerId::Epithelium, 1, 7.5), &params, &cfg);
        assert_eq!(out.estimate, Some(7.5));
    }
}
