// SPDX-License-Identifier: Apache-2.0

//! Synthetic M-scan phantoms with known boundary trajectories.
//!
//! Each layer is a Gaussian bright band centred on its boundary depth. Both
//! layers share one motion term (the whole eye moves), so their separation
//! stays fixed. Jag events are applied to observations by the noisy oracle,
//! never to the rendered image.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{AScanColumn, MScanFrame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    pub width_px: usize,
    pub depth_px: usize,
    pub epi_base: f64,
    pub dm_base: f64,
    pub motion_amplitude: f64,
    pub motion_period: f64,
    pub drift_per_column: f64,
    pub band_sigma: f64,
    pub band_intensity: f64,
    pub background_noise_sigma: f64,
    pub sigma_obs: f64,
    /// Half-open `[start, end)` column ranges with no signal.
    pub dropout_intervals: Vec<(usize, usize)>,
    /// `(column, amplitude_px)`: the observation at `column` is offset by a
    /// uniform draw from `[-amplitude, amplitude]`.
    pub jag_events: Vec<(usize, f64)>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Clean,
    LowSnr,
    Motion,
    DropoutJagged,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::Clean, Regime::LowSnr, Regime::Motion, Regime::DropoutJagged];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Clean => "clean",
            Regime::LowSnr => "low-snr",
            Regime::Motion => "motion",
            Regime::DropoutJagged => "dropout-jagged",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "clean" => Ok(Regime::Clean),
            "lowsnr" => Ok(Regime::LowSnr),
            "motion" => Ok(Regime::Motion),
            "dropoutjagged" => Ok(Regime::DropoutJagged),
            _ => Err(Error::InvalidParam(format!("unknown preset {s:?}"))),
        }
    }
}

impl Default for SyntheticScene {
    fn default() -> Self {
        preset(Regime::Clean)
    }
}

/// Scene defaults for each acquisition regime. Values are qualitative
/// analogues and can be overridden through the config file.
pub fn preset(regime: Regime) -> SyntheticScene {
    let base = SyntheticScene {
        width_px: 512,
        depth_px: 512,
        epi_base: 120.0,
        dm_base: 330.0,
        motion_amplitude: 0.0,
        motion_period: 256.0,
        drift_per_column: 0.0,
        band_sigma: 3.0,
        band_intensity: 1000.0,
        background_noise_sigma: 10.0,
        sigma_obs: 0.5,
        dropout_intervals: Vec::new(),
        jag_events: Vec::new(),
        seed: 0,
    };
    match regime {
        Regime::Clean => base,
        Regime::LowSnr => SyntheticScene {
            band_intensity: 300.0,
            background_noise_sigma: 120.0,
            sigma_obs: 3.0,
            ..base
        },
        Regime::Motion => SyntheticScene {
            motion_amplitude: 15.0,
            sigma_obs: 1.5,
            ..base
        },
        Regime::DropoutJagged => SyntheticScene {
            sigma_obs: 1.5,
            background_noise_sigma: 40.0,
            dropout_intervals: vec![(90, 110), (230, 250), (380, 400)],
            jag_events: vec![
                (60, 25.0),
                (75, 40.0),
                (140, 30.0),
                (170, 20.0),
                (205, 35.0),
                (280, 40.0),
                (310, 22.0),
                (345, 28.0),
                (430, 33.0),
                (470, 38.0),
            ],
            ..base
        },
    }
}

impl SyntheticScene {
    pub fn validate(&self) -> Result<()> {
        if self.width_px == 0 || self.depth_px == 0 {
            return Err(Error::InvalidParam("scene dimensions must be positive".into()));
        }
        if !(self.band_sigma > 0.0) || !(self.band_intensity > 0.0) || !(self.motion_period > 0.0) {
            return Err(Error::InvalidParam(
                "band_sigma, band_intensity and motion_period must be positive".into(),
            ));
        }
        if self.motion_amplitude < 0.0 || self.background_noise_sigma < 0.0 || self.sigma_obs < 0.0 {
            return Err(Error::InvalidParam("amplitudes and noise levels must be non-negative".into()));
        }
        if self.epi_base + 3.0 * self.band_sigma >= self.dm_base {
            return Err(Error::InvalidParam("epithelium and DM bands overlap".into()));
        }
        if self.dropout_intervals.iter().any(|&(s, e)| s > e) {
            return Err(Error::InvalidParam("dropout interval with start > end".into()));
        }
        Ok(())
    }

    pub fn in_dropout(&self, k: usize) -> bool {
        self.dropout_intervals.iter().any(|&(s, e)| (s..e).contains(&k))
    }

    pub fn jag_amplitude(&self, k: usize) -> Option<f64> {
        self.jag_events.iter().find(|(c, _)| *c == k).map(|(_, a)| *a)
    }

    fn clamp_depth(&self, d: f64) -> f64 {
        let max = self.depth_px as f64;
        // largest representable value strictly below depth_px
        d.clamp(0.0, max - max * f64::EPSILON)
    }

    /// True `(epithelium, dm)` depths at column `k`.
    pub fn ground_truth(&self, k: usize) -> Result<(f64, f64)> {
        if k >= self.width_px {
            return Err(Error::OutOfRange {
                index: k,
                width: self.width_px,
            });
        }
        Ok(self.truth_unchecked(k))
    }

    fn truth_unchecked(&self, k: usize) -> (f64, f64) {
        let kf = k as f64;
        let common = self.motion_amplitude * (2.0 * PI * kf / self.motion_period).sin() + self.drift_per_column * kf;
        (
            self.clamp_depth(self.epi_base + common),
            self.clamp_depth(self.dm_base + common),
        )
    }

    pub fn truth(&self) -> Vec<(f64, f64)> {
        (0..self.width_px).map(|k| self.truth_unchecked(k)).collect()
    }

    /// Renders the intensity frame and returns it with per-column truth.
    pub fn render(&self) -> Result<(MScanFrame, Vec<(f64, f64)>)> {
        self.validate()?;
        let truth = self.truth();
        let noise = Normal::new(0.0, self.background_noise_sigma).map_err(|e| Error::InvalidParam(e.to_string()))?;
        let two_var = 2.0 * self.band_sigma * self.band_sigma;
        let columns: Vec<AScanColumn> = (0..self.width_px)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.seed, RENDER_STREAM, k as u64));
                let (epi, dm) = truth[k];
                let amp = if self.in_dropout(k) { 0.0 } else { self.band_intensity };
                let intensities = (0..self.depth_px)
                    .map(|row| {
                        let r = row as f64;
                        let bg = if self.background_noise_sigma > 0.0 {
                            noise.sample(&mut rng).max(0.0)
                        } else {
                            0.0
                        };
                        let band = |c: f64| amp * (-(r - c) * (r - c) / two_var).exp();
                        bg + band(epi) + band(dm)
                    })
                    .collect();
                AScanColumn { index: k, intensities }
            })
            .collect();
        Ok((
            MScanFrame {
                width_px: self.width_px,
                depth_px: self.depth_px,
                columns,
            },
            truth,
        ))
    }
}

pub(crate) const RENDER_STREAM: u64 = 0x5245_4e44;
pub(crate) const ORACLE_STREAM: u64 = 0x4f52_4143;

/// Derives an independent per-column seed (splitmix64 finalizer).
pub(crate) fn mix_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
