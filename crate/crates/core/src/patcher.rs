// SPDX-License-Identifier: Apache-2.0

//! Frame <-> normalized column-block patches.
//!
//! A frame of `patch_width * patches_per_frame` columns is cut into
//! non-overlapping, full-depth blocks, each z-scored with dataset-level
//! statistics. Reassembly places patches by origin, so input order does not
//! matter.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::signal::{AScanColumn, MScanFrame};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchConfig {
    pub patch_width: usize,
    pub patches_per_frame: usize,
    pub norm_mean: f64,
    pub norm_std: f64,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            patch_width: 32,
            patches_per_frame: 16,
            norm_mean: 0.0,
            norm_std: 1.0,
        }
    }
}

impl PatchConfig {
    pub fn frame_width(&self) -> usize {
        self.patch_width * self.patches_per_frame
    }

    fn validate(&self) -> Result<()> {
        if self.patch_width == 0 || self.patches_per_frame == 0 {
            return Err(Error::InvalidParam("patch dimensions must be positive".into()));
        }
        if !(self.norm_std > 0.0) || !self.norm_std.is_finite() || !self.norm_mean.is_finite() {
            return Err(Error::InvalidParam("norm_std must be positive and finite".into()));
        }
        Ok(())
    }
}

/// A `depth x patch_width` block; `data[row][col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub origin_column: usize,
    pub data: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormStats {
    pub mean: f64,
    pub std: f64,
}

/// Population mean and standard deviation over every pixel of every frame.
pub fn compute_norm_stats<'a>(frames: impl IntoIterator<Item = &'a MScanFrame>) -> Result<NormStats> {
    let mut n = 0usize;
    let mut sum = 0.0;
    let mut frames_seen = Vec::new();
    for f in frames {
        for c in &f.columns {
            n += c.intensities.len();
            sum += c.intensities.iter().sum::<f64>();
        }
        frames_seen.push(f);
    }
    if n == 0 {
        return Err(Error::Empty);
    }
    let mean = sum / n as f64;
    let ss: f64 = frames_seen
        .iter()
        .flat_map(|f| f.columns.iter())
        .flat_map(|c| c.intensities.iter())
        .map(|v| (v - mean) * (v - mean))
        .sum();
    let std = (ss / n as f64).sqrt();
    if !(std > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(NormStats { mean, std })
}

pub fn extract_patches(frame: &MScanFrame, cfg: &PatchConfig) -> Result<Vec<Patch>> {
    cfg.validate()?;
    if frame.width_px != cfg.frame_width() {
        return Err(Error::PatchLayout(format!(
            "frame width {} != {} x {}",
            frame.width_px, cfg.patches_per_frame, cfg.patch_width
        )));
    }
    let patches = (0..cfg.patches_per_frame)
        .map(|p| {
            let origin = p * cfg.patch_width;
            let cols = &frame.columns[origin..origin + cfg.patch_width];
            let data = (0..frame.depth_px)
                .map(|row| {
                    cols.iter()
                        .map(|c| (c.intensities[row] - cfg.norm_mean) / cfg.norm_std)
                        .collect()
                })
                .collect();
            Patch {
                origin_column: origin,
                data,
            }
        })
        .collect();
    Ok(patches)
}

/// Inverse of [`extract_patches`]. Patches must tile `[0, width)` exactly.
pub fn reassemble(patches: &[Patch], cfg: &PatchConfig) -> Result<MScanFrame> {
    cfg.validate()?;
    if patches.is_empty() {
        return Err(Error::Empty);
    }
    let mut ordered: Vec<&Patch> = patches.iter().collect();
    ordered.sort_by_key(|p| p.origin_column);
    let depth = ordered[0].data.len();
    let mut expected = 0;
    for p in &ordered {
        if p.origin_column % cfg.patch_width != 0 {
            return Err(Error::PatchLayout(format!("origin {} not on a patch boundary", p.origin_column)));
        }
        if p.origin_column > expected {
            return Err(Error::PatchLayout(format!("gap at column {expected}")));
        }
        if p.origin_column < expected {
            return Err(Error::PatchLayout(format!("overlap at column {}", p.origin_column)));
        }
        if p.data.len() != depth || p.data.iter().any(|r| r.len() != cfg.patch_width) {
            return Err(Error::PatchLayout(format!("patch at {} has wrong shape", p.origin_column)));
        }
        expected += cfg.patch_width;
    }
    if expected != cfg.frame_width() {
        return Err(Error::PatchLayout(format!(
            "patches cover {expected} columns, expected {}",
            cfg.frame_width()
        )));
    }
    let mut columns = Vec::with_capacity(expected);
    for p in ordered {
        for j in 0..cfg.patch_width {
            columns.push(AScanColumn {
                index: p.origin_column + j,
                intensities: p.data.iter().map(|row| row[j] * cfg.norm_std + cfg.norm_mean).collect(),
            });
        }
    }
    Ok(MScanFrame {
        width_px: expected,
        depth_px: depth,
        columns,
    })
}

pub fn format_norm_sidecar(stats: &NormStats) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "mean={}", stats.mean);
    let _ = writeln!(s, "std={}", stats.std);
    s
}

pub fn parse_norm_sidecar(text: &str) -> Result<NormStats> {
    let mut mean = None;
    let mut std = None;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad sidecar line {line:?}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad sidecar value {v:?}")))?;
        match k.trim() {
            "mean" => mean = Some(v),
            "std" => std = Some(v),
            other => return Err(Error::Format(format!("unknown sidecar key {other:?}"))),
        }
    }
    match (mean, std) {
        (Some(mean), Some(std)) if std > 0.0 => Ok(NormStats { mean, std }),
        (Some(_), Some(_)) => Err(Error::ZeroVariance),
        _ => Err(Error::Format("sidecar needs mean and std".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(width: usize, depth: usize) -> MScanFrame {
        let samples: Vec<f64> = (0..width * depth).map(|i| (i % 97) as f64 * 1.5).collect();
        MScanFrame::from_row_major(width, depth, &samples).unwrap()
    }

    #[test]
    fn two_value_stats() {
        let mut f = MScanFrame::zeros(4, 4);
        for c in f.columns.iter_mut() {
            c.intensities.fill(5.0);
        }
        f.columns[2].intensities[1] = 7.0;
        let s = compute_norm_stats([&f]).unwrap();
        // 15 fives and one seven
        let mean = (15.0 * 5.0 + 7.0) / 16.0;
        let var = (15.0 * (5.0f64 - mean).powi(2) + (7.0f64 - mean).powi(2)) / 16.0;
        assert!((s.mean - mean).abs() < 1e-12);
        assert!((s.std - var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn stats_errors() {
        let f = MScanFrame::zeros(4, 4);
        assert!(matches!(compute_norm_stats([&f]), Err(Error::ZeroVariance)));
        assert!(matches!(compute_norm_stats(std::iter::empty()), Err(Error::Empty)));
    }

    #[test]
    fn equal_two_point() {
        let samples: Vec<f64> = (0..16).map(|i| if i % 2 == 0 { 0.0 } else { 2.0 }).collect();
        let f = MScanFrame::from_row_major(4, 4, &samples).unwrap();
        let s = compute_norm_stats([&f]).unwrap();
        assert_eq!((s.mean, s.std), (1.0, 1.0));
    }

    #[test]
    fn default_geometry() {
        let f = ramp(512, 16);
        let p = extract_patches(&f, &PatchConfig::default()).unwrap();
        let origins: Vec<_> = p.iter().map(|p| p.origin_column).collect();
        assert_eq!(origins, (0..16).map(|i| i * 32).collect::<Vec<_>>());
        assert_eq!(p[0].data.len(), 16);
        assert_eq!(p[0].data[0].len(), 32);
    }

    #[test]
    fn small_geometry_and_identity_norm() {
        let f = ramp(64, 8);
        let cfg = PatchConfig {
            patches_per_frame: 2,
            ..Default::default()
        };
        let p = extract_patches(&f, &cfg).unwrap();
        assert_eq!(p.iter().map(|p| p.origin_column).collect::<Vec<_>>(), vec![0, 32]);
        assert_eq!(p[1].data[3][5], f.get(37, 3));
    }

    #[test]
    fn width_mismatch() {
        assert!(extract_patches(&ramp(60, 4), &PatchConfig { patches_per_frame: 2, ..Default::default() }).is_err());
    }

    #[test]
    fn gap_detected() {
        let cfg = PatchConfig {
            patches_per_frame: 2,
            ..Default::default()
        };
        let mut p = extract_patches(&ramp(64, 4), &cfg).unwrap();
        p[1].origin_column = 64;
        assert!(matches!(reassemble(&p, &cfg), Err(Error::PatchLayout(m)) if m.contains("gap")));
    }

    #[test]
    fn shuffled_order() {
        let f = ramp(128, 6);
        let cfg = PatchConfig {
            patches_per_frame: 4,
            norm_mean: 40.0,
            norm_std: 12.5,
            ..Default::default()
        };
        let mut p = extract_patches(&f, &cfg).unwrap();
        p.reverse();
        p.swap(0, 2);
        let g = reassemble(&p, &cfg).unwrap();
        for (a, b) in f.to_row_major().iter().zip(g.to_row_major()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn sidecar_roundtrip() {
        let s = NormStats { mean: 12.25, std: 0.1 };
        assert_eq!(parse_norm_sidecar(&format_norm_sidecar(&s)).unwrap(), s);
        assert!(parse_norm_sidecar("mean=1\n").is_err());
    }
}
