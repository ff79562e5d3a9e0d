// SPDX-License-Identifier: Apache-2.0

//! Wall-clock measurement of the tracking loop. Observations are
//! materialized up front, so parsing and observation generation are not
//! timed.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kalman::FilterParams;
use crate::observers::ObservationPair;
use crate::signal::LayerId;
use crate::track::{Pipeline, Tracker};
use crate::window::WindowConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub pipeline: String,
    pub columns: usize,
    pub repetitions: usize,
    pub total_seconds: f64,
    /// Fastest single pass over the input.
    pub best_pass_seconds: f64,
    pub columns_per_second: f64,
    pub latency_p50_ns: f64,
    pub latency_p99_ns: f64,
}

fn percentile(sorted: &[u64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * (sorted.len() - 1) as f64).round() as usize;
    sorted[rank.min(sorted.len() - 1)] as f64
}

/// Runs both layer trackers column by column, `repetitions` times, timing
/// every column (both layers) individually.
pub fn bench_tracking(
    pairs: &[ObservationPair],
    pipeline: Pipeline,
    params: &FilterParams,
    window: &WindowConfig,
    repetitions: usize,
) -> Result<BenchReport> {
    if repetitions == 0 {
        return Err(Error::InvalidParam("repetitions must be at least 1".into()));
    }
    if pairs.is_empty() {
        return Err(Error::Empty);
    }
    let mut latencies = Vec::with_capacity(pairs.len() * repetitions);
    let mut total = 0.0;
    let mut best = f64::INFINITY;
    let mut sink = 0.0;
    for _ in 0..repetitions {
        let mut epi = Tracker::new(LayerId::Epithelium, pipeline, *params, *window);
        let mut dm = Tracker::new(LayerId::DM, pipeline, *params, *window);
        let pass = Instant::now();
        for (e, d) in pairs {
            let t0 = Instant::now();
            let a = epi.step(e);
            let b = dm.step(d);
            latencies.push(t0.elapsed().as_nanos() as u64);
            sink += a.estimate.unwrap_or(0.0) + b.estimate.unwrap_or(0.0);
        }
        let secs = pass.elapsed().as_secs_f64();
        total += secs;
        best = best.min(secs);
    }
    std::hint::black_box(sink);
    latencies.sort_unstable();
    let columns = pairs.len() * repetitions;
    Ok(BenchReport {
        pipeline: pipeline.to_string(),
        columns: pairs.len(),
        repetitions,
        total_seconds: total,
        best_pass_seconds: best,
        columns_per_second: columns as f64 / total.max(f64::MIN_POSITIVE),
        latency_p50_ns: percentile(&latencies, 50.0),
        latency_p99_ns: percentile(&latencies, 99.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::BoundaryObservation;

    #[test]
    fn reports_positive_throughput() {
        let pairs: Vec<_> = (0..512)
            .map(|k| {
                (
                    BoundaryObservation::valid(LayerId::Epithelium, k, 100.0),
                    BoundaryObservation::valid(LayerId::DM, k, 300.0),
                )
            })
            .collect();
        let r = bench_tracking(&pairs, Pipeline::Kdh, &Default::default(), &Default::default(), 2).unwrap();
        assert_eq!(r.columns, 512);
        assert!(r.columns_per_second > 0.0);
        assert!(r.latency_p99_ns.is_finite() && r.latency_p99_ns >= r.latency_p50_ns);
        assert!(bench_tracking(&pairs, Pipeline::Raw, &Default::default(), &Default::default(), 0).is_err());
    }

    #[test]
    fn percentile_ranks() {
        let v: Vec<u64> = (1..=100).collect();
        assert_eq!(percentile(&v, 50.0), 51.0);
        assert_eq!(percentile(&v, 99.0), 99.0);
    }
}
