// SPDX-License-Identifier: Apache-2.0

//! Observation providers: a gradient-peak boundary detector for raw
//! A-scans, a CSV replay cursor for recorded segmentations, and a noisy
//! ground-truth oracle for synthetic scenes.

use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{AScanColumn, BoundaryObservation, LayerId, ObsStatus};
use crate::synth::{mix_seed, SyntheticScene, ORACLE_STREAM};

pub type ObservationPair = (BoundaryObservation, BoundaryObservation);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub search_halfwidth: usize,
    pub min_layer_separation: usize,
    pub gradient_threshold: f64,
    pub smoothing_radius: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            search_halfwidth: 40,
            min_layer_separation: 30,
            gradient_threshold: 0.0,
            smoothing_radius: 2,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.search_halfwidth == 0 || self.min_layer_separation == 0 {
            return Err(Error::InvalidParam(
                "search_halfwidth and min_layer_separation must be at least 1".into(),
            ));
        }
        if !(self.gradient_threshold >= 0.0) {
            return Err(Error::InvalidParam("gradient_threshold must be non-negative".into()));
        }
        Ok(())
    }
}

fn box_smooth(samples: &[f64], radius: usize) -> Vec<f64> {
    if radius == 0 {
        return samples.to_vec();
    }
    let n = samples.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(n - 1);
            samples[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

fn central_gradient(s: &[f64]) -> Vec<f64> {
    let n = s.len();
    let mut g = vec![0.0; n];
    for i in 1..n.saturating_sub(1) {
        g[i] = 0.5 * (s[i + 1] - s[i - 1]);
    }
    g
}

/// Index of the largest value in `lo..hi`; ties go to the shallower row.
fn argmax(values: &[f64], lo: usize, hi: usize) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in lo..hi.min(values.len()) {
        if best.is_none_or(|b| values[i] > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Vertex of the parabola through the three samples around `i`.
fn parabolic_peak(values: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= values.len() {
        return i as f64;
    }
    let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom == 0.0 {
        return i as f64;
    }
    i as f64 + (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
}

struct Band {
    center: f64,
    falling_idx: usize,
}

/// Locates a bright band whose rising edge lies in `lo..hi`: the steepest
/// positive gradient there, paired with the steepest negative gradient that
/// follows it. The band centre is the midpoint of the two refined edges.
fn find_band(grad: &[f64], neg: &[f64], lo: usize, hi: usize, reach: usize, threshold: f64) -> Option<Band> {
    let rising = argmax(grad, lo, hi)?;
    if grad[rising] <= threshold {
        return None;
    }
    let falling = argmax(neg, rising + 1, rising + 1 + reach)?;
    if neg[falling] <= threshold {
        return None;
    }
    let center = 0.5 * (parabolic_peak(grad, rising) + parabolic_peak(neg, falling));
    Some(Band {
        center,
        falling_idx: falling,
    })
}

fn window(center: f64, halfwidth: usize, n: usize) -> (usize, usize) {
    let c = center.round().clamp(0.0, (n - 1) as f64) as usize;
    (c.saturating_sub(halfwidth), (c + halfwidth + 1).min(n))
}

/// Detects both boundaries in one A-scan. With `previous` estimates the
/// search is confined to `previous ± search_halfwidth`.
pub fn detect_boundaries(
    column: &AScanColumn,
    previous: Option<(f64, f64)>,
    cfg: &DetectorConfig,
) -> Result<ObservationPair> {
    let n = column.intensities.len();
    if n < 2 * cfg.min_layer_separation {
        return Err(Error::InvalidParam(format!(
            "column {} has {} samples, need at least {}",
            column.index,
            n,
            2 * cfg.min_layer_separation
        )));
    }
    let k = column.index;
    let smooth = box_smooth(&column.intensities, cfg.smoothing_radius);
    let grad = central_gradient(&smooth);
    let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
    let reach = cfg.min_layer_separation;
    let threshold = cfg.gradient_threshold;

    let (epi_lo, epi_hi) = match previous {
        Some((epi, _)) if epi.is_finite() => window(epi, cfg.search_halfwidth, n),
        _ => (0, n / 2),
    };
    let epi = find_band(&grad, &neg, epi_lo, epi_hi, reach, threshold);

    let floor = match &epi {
        Some(b) => (b.center.ceil() as usize + cfg.min_layer_separation).max(b.falling_idx + 1),
        None => 0,
    };
    let (dm_lo, dm_hi) = match previous {
        Some((_, dm)) if dm.is_finite() => window(dm, cfg.search_halfwidth, n),
        _ => (cfg.min_layer_separation, n),
    };
    let dm = find_band(&grad, &neg, dm_lo.max(floor), dm_hi, reach, threshold)
        .filter(|d| epi.as_ref().is_none_or(|e| d.center > e.center));

    let obs = |layer, band: Option<Band>| match band {
        Some(b) => BoundaryObservation::valid(layer, k, b.center),
        None => BoundaryObservation::dropout(layer, k),
    };
    Ok((obs(LayerId::Epithelium, epi), obs(LayerId::DM, dm)))
}

/// Sequential cursor over an observation CSV
/// (`layer,column,depth_px,status`, two rows per column).
pub struct ReplayReader<R: Read> {
    records: csv::StringRecordsIntoIter<R>,
    pending: Option<BoundaryObservation>,
    expected: usize,
}

impl<R: Read> ReplayReader<R> {
    pub fn new(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let want = ["layer", "column", "depth_px", "status"];
        if headers.iter().ne(want.iter().copied()) {
            return Err(Error::Format(format!(
                "observation header must be {}, got {}",
                want.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        Ok(Self {
            records: rdr.into_records(),
            pending: None,
            expected: 0,
        })
    }

    fn next_row(&mut self) -> Result<Option<BoundaryObservation>> {
        if let Some(p) = self.pending.take() {
            return Ok(Some(p));
        }
        match self.records.next() {
            None => Ok(None),
            Some(rec) => parse_row(&rec?, self.expected).map(Some),
        }
    }

    /// Next column's `(epithelium, dm)` pair, or `None` at end of input.
    pub fn replay_next(&mut self) -> Result<Option<ObservationPair>> {
        let mut epi = None;
        let mut dm = None;
        let column = self.expected;
        loop {
            let row = match self.next_row()? {
                Some(r) => r,
                None if epi.is_none() && dm.is_none() => return Ok(None),
                None => break,
            };
            if row.column_index != column {
                if epi.is_none() && dm.is_none() {
                    return Err(Error::OutOfOrder {
                        expected: column,
                        found: row.column_index,
                    });
                }
                self.pending = Some(row);
                break;
            }
            let slot = match row.layer {
                LayerId::Epithelium => &mut epi,
                LayerId::DM => &mut dm,
            };
            if slot.replace(row).is_some() {
                return Err(Error::MalformedRow {
                    column,
                    message: format!("duplicate {} row", row.layer),
                });
            }
            if epi.is_some() && dm.is_some() {
                break;
            }
        }
        match (epi, dm) {
            (Some(e), Some(d)) => {
                self.expected += 1;
                Ok(Some((e, d)))
            }
            (None, _) => Err(Error::MissingLayer {
                column,
                layer: LayerId::Epithelium.as_str(),
            }),
            (_, None) => Err(Error::MissingLayer {
                column,
                layer: LayerId::DM.as_str(),
            }),
        }
    }

    pub fn read_all(mut self) -> Result<Vec<ObservationPair>> {
        let mut out = Vec::new();
        while let Some(pair) = self.replay_next()? {
            out.push(pair);
        }
        Ok(out)
    }
}

impl<R: Read> Iterator for ReplayReader<R> {
    type Item = Result<ObservationPair>;

    fn next(&mut self) -> Option<Self::Item> {
        self.replay_next().transpose()
    }
}

fn parse_row(rec: &csv::StringRecord, expected: usize) -> Result<BoundaryObservation> {
    let malformed = |column: usize, message: String| Error::MalformedRow { column, message };
    if rec.len() != 4 {
        return Err(malformed(expected, format!("expected 4 fields, got {}", rec.len())));
    }
    let column: usize = rec[1]
        .parse()
        .map_err(|_| malformed(expected, format!("bad column index {:?}", &rec[1])))?;
    let layer: LayerId = rec[0].parse().map_err(|e: Error| malformed(column, e.to_string()))?;
    let status: ObsStatus = rec[3].parse().map_err(|e: Error| malformed(column, e.to_string()))?;
    match status {
        ObsStatus::Dropout => Ok(BoundaryObservation::dropout(layer, column)),
        ObsStatus::Valid => {
            let depth: f64 = rec[2]
                .parse()
                .map_err(|_| malformed(column, format!("bad depth {:?}", &rec[2])))?;
            if !depth.is_finite() {
                return Err(malformed(column, "non-finite depth".into()));
            }
            Ok(BoundaryObservation::valid(layer, column, depth))
        }
    }
}

/// Ground truth plus Gaussian noise and the scene's scheduled artifacts.
/// A pure function of `(scene, column_index, seed)`.
pub fn noisy_oracle(scene: &SyntheticScene, column_index: usize, seed: u64) -> Result<ObservationPair> {
    let (epi, dm) = scene.ground_truth(column_index)?;
    if scene.in_dropout(column_index) {
        return Ok((
            BoundaryObservation::dropout(LayerId::Epithelium, column_index),
            BoundaryObservation::dropout(LayerId::DM, column_index),
        ));
    }
    let noise = Normal::new(0.0, scene.sigma_obs).map_err(|e| Error::InvalidParam(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, ORACLE_STREAM, column_index as u64));
    let jag = scene.jag_amplitude(column_index);
    let max = scene.depth_px as f64;
    let mut observe = |layer, truth: f64| {
        let mut z = truth;
        if scene.sigma_obs > 0.0 {
            z += noise.sample(&mut rng);
        }
        if let Some(a) = jag {
            z += rng.random_range(-a..=a);
        }
        BoundaryObservation::valid(layer, column_index, z.clamp(0.0, max - max * f64::EPSILON))
    };
    let e = observe(LayerId::Epithelium, epi);
    let d = observe(LayerId::DM, dm);
    Ok((e, d))
}

/// Oracle observations for every column of the scene.
pub fn oracle_run(scene: &SyntheticScene, seed: u64) -> Result<Vec<ObservationPair>> {
    (0..scene.width_px).map(|k| noisy_oracle(scene, k, seed)).collect()
}

/// Detector run over a whole frame, each column anchored on the last valid
/// detection of the same layer.
pub fn detect_frame(frame: &crate::signal::MScanFrame, cfg: &DetectorConfig) -> Result<Vec<ObservationPair>> {
    let mut previous: Option<(f64, f64)> = None;
    let mut out = Vec::with_capacity(frame.width_px);
    for col in &frame.columns {
        let pair = detect_boundaries(col, previous, cfg)?;
        let (pe, pd) = previous.unwrap_or((f64::NAN, f64::NAN));
        let epi = pair.0.depth().unwrap_or(pe);
        let dm = pair.1.depth().unwrap_or(pd);
        previous = (epi.is_finite() || dm.is_finite()).then_some((epi, dm));
        out.push(pair);
    }
    Ok(out)
}
