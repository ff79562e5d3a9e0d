// SPDX-License-Identifier: Apache-2.0

//! Flat `key = value` configuration (TOML syntax). Every key is optional;
//! missing keys keep their defaults.
//!
//! ```text
//! q = 1e-5
//! r = 1.0
//! window_len = 50
//! sigma_obs = 2.0
//! dropout_intervals = [[90, 110]]
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::evaluation::EvalConfig;
use crate::kalman::FilterParams;
use crate::observers::DetectorConfig;
use crate::synth::SyntheticScene;
use crate::window::WindowConfig;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    f: Option<f64>,
    h: Option<f64>,
    q: Option<f64>,
    r: Option<f64>,
    p0: Option<f64>,

    window_len: Option<usize>,
    recent_weight: Option<f64>,
    prior_weight: Option<f64>,
    warmup_len: Option<usize>,

    search_halfwidth: Option<usize>,
    min_layer_separation: Option<usize>,
    gradient_threshold: Option<f64>,
    smoothing_radius: Option<usize>,

    um_per_px: Option<f64>,

    width_px: Option<usize>,
    depth_px: Option<usize>,
    epi_base: Option<f64>,
    dm_base: Option<f64>,
    motion_amplitude: Option<f64>,
    motion_period: Option<f64>,
    drift_per_column: Option<f64>,
    band_sigma: Option<f64>,
    band_intensity: Option<f64>,
    background_noise_sigma: Option<f64>,
    sigma_obs: Option<f64>,
    dropout_intervals: Option<Vec<(usize, usize)>>,
    jag_events: Option<Vec<(usize, f64)>>,
    seed: Option<u64>,
}

/// Resolved settings for one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub filter: FilterParams,
    pub window: WindowConfig,
    pub detector: DetectorConfig,
    pub eval: EvalConfig,
    scene: RawConfig,
}

macro_rules! set {
    ($dst:expr, $src:expr, $($field:ident),+) => {
        $( if let Some(v) = $src.$field.clone() { $dst.$field = v; } )+
    };
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let mut cfg = Config::default();
        set!(cfg.filter, raw, f, h, q, r, p0);
        set!(cfg.window, raw, window_len, recent_weight, prior_weight, warmup_len);
        set!(
            cfg.detector,
            raw,
            search_halfwidth,
            min_layer_separation,
            gradient_threshold,
            smoothing_radius
        );
        set!(cfg.eval, raw, um_per_px);
        cfg.filter.validate()?;
        cfg.window.validate()?;
        cfg.detector.validate()?;
        if !(cfg.eval.um_per_px > 0.0) {
            return Err(Error::InvalidParam("um_per_px must be positive".into()));
        }
        cfg.scene = raw;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        Self::parse(&text).map_err(|e| e.in_file(path))
    }

    /// Overlays any scene keys from the file onto `scene`.
    pub fn apply_scene(&self, mut scene: SyntheticScene) -> SyntheticScene {
        let raw = &self.scene;
        set!(
            scene,
            raw,
            width_px,
            depth_px,
            epi_base,
            dm_base,
            motion_amplitude,
            motion_period,
            drift_per_column,
            band_sigma,
            band_intensity,
            background_noise_sigma,
            sigma_obs,
            dropout_intervals,
            jag_events,
            seed
        );
        scene
    }

    pub fn scene_seed(&self) -> Option<u64> {
        self.scene.seed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{preset, Regime};

    #[test]
    fn empty_file_gives_defaults() {
        let c = Config::parse("").unwrap();
        assert_eq!(c.filter, FilterParams::default());
        assert_eq!(c.window, WindowConfig::default());
        assert_eq!(c.eval.um_per_px, 2.61);
    }

    #[test]
    fn keys_override() {
        let c = Config::parse("q = 0.01\nr = 4\nwindow_len = 10\nrecent_weight = 0.6\nprior_weight = 0.4\n").unwrap();
        assert_eq!(c.filter.q, 0.01);
        assert_eq!(c.filter.r, 4.0);
        assert_eq!(c.window.window_len, 10);
        assert_eq!(c.window.recent_weight, 0.6);
    }

    #[test]
    fn scene_keys_apply() {
        let c = Config::parse("width_px = 64\nsigma_obs = 2.5\ndropout_intervals = [[3, 7]]\njag_events = [[5, 12.0]]\n").unwrap();
        let s = c.apply_scene(preset(Regime::Clean));
        assert_eq!(s.width_px, 64);
        assert_eq!(s.sigma_obs, 2.5);
        assert_eq!(s.dropout_intervals, vec![(3, 7)]);
        assert_eq!(s.jag_events, vec![(5, 12.0)]);
    }

    #[test]
    fn rejects_bad_values_and_unknown_keys() {
        assert!(Config::parse("q = 0").is_err());
        assert!(Config::parse("recent_weight = 0.9").is_err());
        assert!(Config::parse("qq = 1").is_err());
        assert!(Config::parse("q = ").is_err());
    }
}
