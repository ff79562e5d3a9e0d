// SPDX-License-Identifier: Apache-2.0

//! Shared data vocabulary: A-scan columns, M-scan frames, per-column
//! boundary observations and the traces a tracker produces.
//!
//! Depth runs downward: row 0 is the shallowest sample, so a valid scene
//! always has the epithelium above (numerically smaller than) the DM.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const DEFAULT_WIDTH_PX: usize = 512;
pub const DEFAULT_DEPTH_PX: usize = 512;

/// One A-scan: the depth profile recorded at time index `index`.
#[derive(Debug, Clone, PartialEq)]
pub struct AScanColumn {
    pub index: usize,
    pub intensities: Vec<f64>,
}

/// A depth x time intensity grid, stored column-major (one A-scan per column).
#[derive(Debug, Clone, PartialEq)]
pub struct MScanFrame {
    pub width_px: usize,
    pub depth_px: usize,
    pub columns: Vec<AScanColumn>,
}

impl MScanFrame {
    pub fn zeros(width_px: usize, depth_px: usize) -> Self {
        let columns = (0..width_px)
            .map(|index| AScanColumn {
                index,
                intensities: vec![0.0; depth_px],
            })
            .collect();
        Self {
            width_px,
            depth_px,
            columns,
        }
    }

    /// Builds a frame from row-major samples (`depth_px` rows of `width_px`).
    pub fn from_row_major(width_px: usize, depth_px: usize, samples: &[f64]) -> Result<Self> {
        if samples.len() != width_px * depth_px {
            return Err(Error::LengthMismatch {
                left: samples.len(),
                right: width_px * depth_px,
            });
        }
        let mut frame = Self::zeros(width_px, depth_px);
        for (row, chunk) in samples.chunks_exact(width_px.max(1)).enumerate() {
            for (col, &v) in chunk.iter().enumerate() {
                frame.columns[col].intensities[row] = v;
            }
        }
        Ok(frame)
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.width_px * self.depth_px];
        for (col, c) in self.columns.iter().enumerate() {
            for (row, &v) in c.intensities.iter().enumerate() {
                out[row * self.width_px + col] = v;
            }
        }
        out
    }

    pub fn get(&self, column: usize, row: usize) -> f64 {
        self.columns[column].intensities[row]
    }
}

/// Checks every frame invariant and hands the frame back untouched.
pub fn validate_frame(frame: MScanFrame) -> Result<MScanFrame> {
    if frame.width_px == 0 || frame.depth_px == 0 {
        return Err(Error::InvalidParam("frame dimensions must be positive".into()));
    }
    if frame.columns.len() != frame.width_px {
        return Err(Error::LengthMismatch {
            left: frame.columns.len(),
            right: frame.width_px,
        });
    }
    for (i, col) in frame.columns.iter().enumerate() {
        if col.intensities.len() != frame.depth_px {
            return Err(Error::DimensionMismatch {
                column: i,
                expected: frame.depth_px,
                found: col.intensities.len(),
            });
        }
        if col.index != i {
            return Err(Error::OutOfOrder {
                expected: i,
                found: col.index,
            });
        }
        if let Some(row) = col.intensities.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NonFiniteSample { column: i, row });
        }
    }
    Ok(frame)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayerId {
    Epithelium,
    DM,
}

impl LayerId {
    pub const ALL: [LayerId; 2] = [LayerId::Epithelium, LayerId::DM];

    pub fn as_str(self) -> &'static str {
        match self {
            LayerId::Epithelium => "epithelium",
            LayerId::DM => "dm",
        }
    }
}

impl fmt::Display for LayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LayerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "epithelium" => Ok(LayerId::Epithelium),
            "dm" => Ok(LayerId::DM),
            other => Err(Error::Format(format!("unknown layer {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObsStatus {
    Valid,
    Dropout,
}

impl ObsStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ObsStatus::Valid => "valid",
            ObsStatus::Dropout => "dropout",
        }
    }
}

impl FromStr for ObsStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "valid" => Ok(ObsStatus::Valid),
            "dropout" => Ok(ObsStatus::Dropout),
            other => Err(Error::Format(format!("unknown status {other:?}"))),
        }
    }
}

/// A single raw boundary depth for one layer at one column. `depth_px` is
/// meaningless when `status` is `Dropout`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryObservation {
    pub layer: LayerId,
    pub column_index: usize,
    pub depth_px: f64,
    pub status: ObsStatus,
}

impl BoundaryObservation {
    pub fn valid(layer: LayerId, column_index: usize, depth_px: f64) -> Self {
        Self {
            layer,
            column_index,
            depth_px,
            status: ObsStatus::Valid,
        }
    }

    pub fn dropout(layer: LayerId, column_index: usize) -> Self {
        Self {
            layer,
            column_index,
            depth_px: f64::NAN,
            status: ObsStatus::Dropout,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.status == ObsStatus::Valid
    }

    /// The depth if the observation is usable.
    pub fn depth(&self) -> Option<f64> {
        self.is_valid().then_some(self.depth_px)
    }
}

/// Raw and filtered boundary positions of one layer, column-aligned.
/// `filtered` is `None` only before the first valid observation of a track.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub layer: LayerId,
    pub raw: Vec<BoundaryObservation>,
    pub filtered: Vec<Option<f64>>,
    pub gain: Vec<f64>,
}

impl BoundaryTrace {
    pub fn new(layer: LayerId) -> Self {
        Self {
            layer,
            raw: Vec::new(),
            filtered: Vec::new(),
            gain: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.filtered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filtered.is_empty()
    }

    pub fn push(&mut self, obs: BoundaryObservation, filtered: Option<f64>, gain: f64) {
        self.raw.push(obs);
        self.filtered.push(filtered);
        self.gain.push(gain);
    }
}
