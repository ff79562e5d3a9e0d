// SPDX-License-Identifier: Apache-2.0

//! File formats: PGM (P5) and raw `MSCN` frames, observation / truth / trace
//! CSVs.
//!
//! Raw frame layout (little endian): `b"MSCN"`, `u32 width`, `u32 depth`,
//! `u32 flags` (must be 0), then `depth` rows of `width` `f32` samples.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::observers::{ObservationPair, ReplayReader};
use crate::signal::{validate_frame, BoundaryObservation, BoundaryTrace, LayerId, MScanFrame, ObsStatus};

pub const RAW_MAGIC: &[u8; 4] = b"MSCN";
const RAW_HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameFormat {
    Pgm,
    Raw,
}

impl FrameFormat {
    pub fn extension(self) -> &'static str {
        match self {
            FrameFormat::Pgm => "pgm",
            FrameFormat::Raw => "mscn",
        }
    }

    /// Guesses from the leading bytes.
    pub fn sniff(bytes: &[u8]) -> Option<Self> {
        if bytes.starts_with(RAW_MAGIC) {
            Some(FrameFormat::Raw)
        } else if bytes.starts_with(b"P5") {
            Some(FrameFormat::Pgm)
        } else {
            None
        }
    }
}

/// Encodes a frame as binary PGM. Samples are rounded and clamped; the bit
/// depth is 8 when every sample fits in a byte, 16 (big endian) otherwise.
pub fn encode_pgm(frame: &MScanFrame) -> Result<Vec<u8>> {
    let quantized: Vec<u16> = frame
        .to_row_major()
        .iter()
        .map(|v| v.round().clamp(0.0, 65535.0) as u16)
        .collect();
    let wide = quantized.iter().any(|&v| v > 255);
    let maxval = if wide { 65535 } else { 255 };
    let mut out = format!("P5\n{} {}\n{}\n", frame.width_px, frame.depth_px, maxval).into_bytes();
    if wide {
        out.extend(quantized.iter().flat_map(|v| v.to_be_bytes()));
    } else {
        out.extend(quantized.iter().map(|&v| v as u8));
    }
    Ok(out)
}

/// Decodes a binary PGM, 8- or 16-bit, with `#` comments allowed in the
/// header. Sample values are taken as-is (not rescaled by maxval).
pub fn decode_pgm(bytes: &[u8]) -> Result<MScanFrame> {
    let bad = |m: &str| Error::Format(format!("PGM: {m}"));
    if !bytes.starts_with(b"P5") {
        return Err(bad("missing P5 magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad header number"))?;
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("missing raster separator"));
    }
    pos += 1;
    let [width, depth, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval out of range"));
    }
    let bytes_per = if maxval > 255 { 2 } else { 1 };
    let body = &bytes[pos..];
    if body.len() != width * depth * bytes_per {
        return Err(bad(&format!(
            "raster has {} bytes, expected {}",
            body.len(),
            width * depth * bytes_per
        )));
    }
    let samples: Vec<f64> = if bytes_per == 2 {
        body.chunks_exact(2).map(|c| f64::from(u16::from_be_bytes([c[0], c[1]]))).collect()
    } else {
        body.iter().map(|&b| f64::from(b)).collect()
    };
    validate_frame(MScanFrame::from_row_major(width, depth, &samples)?)
}

pub fn encode_raw(frame: &MScanFrame) -> Vec<u8> {
    let mut out = Vec::with_capacity(RAW_HEADER_LEN + 4 * frame.width_px * frame.depth_px);
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&(frame.width_px as u32).to_le_bytes());
    out.extend_from_slice(&(frame.depth_px as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for v in frame.to_row_major() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_raw(bytes: &[u8]) -> Result<MScanFrame> {
    if bytes.len() < RAW_HEADER_LEN || &bytes[..4] != RAW_MAGIC {
        return Err(Error::Format("missing MSCN header".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (width, depth, flags) = (word(4), word(8), word(12));
    if flags != 0 {
        return Err(Error::Format(format!("unsupported MSCN flags {flags:#x}")));
    }
    let body = &bytes[RAW_HEADER_LEN..];
    if body.len() != 4 * width * depth {
        return Err(Error::Format(format!(
            "MSCN body has {} bytes, expected {}",
            body.len(),
            4 * width * depth
        )));
    }
    let samples: Vec<f64> = body
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
        .collect();
    validate_frame(MScanFrame::from_row_major(width, depth, &samples)?)
}

pub fn write_frame(path: &Path, frame: &MScanFrame, format: FrameFormat) -> Result<()> {
    let bytes = match format {
        FrameFormat::Pgm => encode_pgm(frame)?,
        FrameFormat::Raw => encode_raw(frame),
    };
    std::fs::write(path, bytes).map_err(|e| Error::from(e).in_file(path))
}

pub fn read_frame(path: &Path) -> Result<MScanFrame> {
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
    let frame = match FrameFormat::sniff(&bytes) {
        Some(FrameFormat::Raw) => decode_raw(&bytes),
        Some(FrameFormat::Pgm) => decode_pgm(&bytes),
        None => Err(Error::Format("not a P5 PGM or MSCN file".into())),
    };
    frame.map_err(|e| e.in_file(path))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_observations<W: Write>(writer: W, pairs: &[ObservationPair]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["layer", "column", "depth_px", "status"])?;
    for (e, d) in pairs {
        for obs in [e, d] {
            w.write_record([
                obs.layer.as_str(),
                &obs.column_index.to_string(),
                &fmt_opt(obs.depth()),
                obs.status.as_str(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_observations<R: Read>(reader: R) -> Result<Vec<ObservationPair>> {
    ReplayReader::new(reader)?.read_all()
}

pub fn write_truth<W: Write>(writer: W, truth: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["column", "epi_px", "dm_px"])?;
    for (k, (e, d)) in truth.iter().enumerate() {
        w.write_record([k.to_string(), e.to_string(), d.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    expect_header(rdr.headers()?, &["column", "epi_px", "dm_px"])?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let column = parse_field::<usize>(&rec, 0, i)?;
        if column != i {
            return Err(Error::Misaligned(i));
        }
        out.push((parse_field(&rec, 1, i)?, parse_field(&rec, 2, i)?));
    }
    Ok(out)
}

/// One row of a per-layer trace file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub column: usize,
    pub raw_px: Option<f64>,
    pub filtered_px: Option<f64>,
    pub gain: f64,
    pub status: ObsStatus,
}

pub fn trace_rows(trace: &BoundaryTrace) -> impl Iterator<Item = TraceRow> + '_ {
    trace
        .raw
        .iter()
        .zip(&trace.filtered)
        .zip(&trace.gain)
        .map(|((obs, f), g)| TraceRow {
            column: obs.column_index,
            raw_px: obs.depth(),
            filtered_px: *f,
            gain: *g,
            status: obs.status,
        })
}

pub fn write_trace<W: Write>(writer: W, trace: &BoundaryTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["column", "raw_px", "filtered_px", "gain", "status"])?;
    for row in trace_rows(trace) {
        w.write_record([
            row.column.to_string(),
            fmt_opt(row.raw_px),
            fmt_opt(row.filtered_px),
            row.gain.to_string(),
            row.status.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(reader: R) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    expect_header(rdr.headers()?, &["column", "raw_px", "filtered_px", "gain", "status"])?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let column = parse_field::<usize>(&rec, 0, i)?;
        if column != i {
            return Err(Error::Misaligned(i));
        }
        let opt = |j: usize| -> Result<Option<f64>> {
            if rec.get(j).is_none_or(str::is_empty) {
                Ok(None)
            } else {
                parse_field(&rec, j, i).map(Some)
            }
        };
        out.push(TraceRow {
            column,
            raw_px: opt(1)?,
            filtered_px: opt(2)?,
            gain: parse_field(&rec, 3, i)?,
            status: rec
                .get(4)
                .unwrap_or_default()
                .parse()
                .map_err(|e: Error| Error::MalformedRow { column: i, message: e.to_string() })?,
        });
    }
    Ok(out)
}

/// Rebuilds the raw observations of a trace file.
pub fn trace_observations(layer: LayerId, rows: &[TraceRow]) -> Vec<BoundaryObservation> {
    rows.iter()
        .map(|r| match (r.status, r.raw_px) {
            (ObsStatus::Valid, Some(z)) => BoundaryObservation::valid(layer, r.column, z),
            _ => BoundaryObservation::dropout(layer, r.column),
        })
        .collect()
}

fn expect_header(headers: &csv::StringRecord, want: &[&str]) -> Result<()> {
    if headers.iter().ne(want.iter().copied()) {
        return Err(Error::Format(format!("expected header {}", want.join(","))));
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, j: usize, row: usize) -> Result<T> {
    let raw = rec.get(j).ok_or_else(|| Error::MalformedRow {
        column: row,
        message: format!("missing field {j}"),
    })?;
    raw.parse().map_err(|_| Error::MalformedRow {
        column: row,
        message: format!("bad value {raw:?} in field {j}"),
    })
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::from(e).in_file(path))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::from(e).in_file(path))
}
