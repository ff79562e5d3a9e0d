// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;

use octrack::evaluation::{jaggedness, mean_abs_error, reduction_pct};
use octrack::io;
use octrack::kalman::{FilterParams, KalmanState};
use octrack::observers::{noisy_oracle, ReplayReader};
use octrack::signal::{BoundaryObservation, LayerId, MScanFrame};
use octrack::synth::{preset, Regime};
use octrack::window::{WindowConfig, WindowState};

fn depth() -> impl Strategy<Value = f64> {
    0.0..512.0f64
}

fn obs_pair() -> impl Strategy<Value = (Option<f64>, Option<f64>)> {
    (prop::option::weighted(0.9, depth()), prop::option::weighted(0.9, depth()))
}

proptest! {
    #[test]
    fn posterior_is_convex_combination(x in depth(), p in 1e-6..10.0f64, z in depth(), q in 1e-8..1.0f64, r in 1e-3..10.0f64) {
        let params = FilterParams { q, r, ..Default::default() };
        let prior = KalmanState { x_hat: x, p, last_gain: 0.0, steps: 0 }.predict(&params);
        let post = prior.update(z, &params).unwrap();
        prop_assert!(post.last_gain > 0.0 && post.last_gain < 1.0);
        prop_assert!(post.p > 0.0 && post.p < prior.p);
        prop_assert!(post.x_hat >= x.min(z) - 1e-9 && post.x_hat <= x.max(z) + 1e-9);
    }

    #[test]
    fn full_window_output_is_bounded(values in prop::collection::vec(depth(), 100..250)) {
        let cfg = WindowConfig::default();
        let mut w = WindowState::new(&cfg);
        for v in &values {
            w.push(*v).unwrap();
        }
        let buf: Vec<f64> = w.samples().collect();
        let lo = buf.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = buf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let eff = w.effective_observation(*values.last().unwrap(), &cfg);
        prop_assert!(eff >= lo - 1e-9 && eff <= hi + 1e-9);
        prop_assert_eq!(buf.len(), 100);
    }

    #[test]
    fn observation_csv_roundtrip(pairs in prop::collection::vec(obs_pair(), 1..60)) {
        let pairs: Vec<_> = pairs
            .into_iter()
            .enumerate()
            .map(|(k, (e, d))| {
                let mk = |layer, v: Option<f64>| match v {
                    Some(v) => BoundaryObservation::valid(layer, k, v),
                    None => BoundaryObservation::dropout(layer, k),
                };
                (mk(LayerId::Epithelium, e), mk(LayerId::DM, d))
            })
            .collect();
        let mut buf = Vec::new();
        io::write_observations(&mut buf, &pairs).unwrap();
        let back = ReplayReader::new(buf.as_slice()).unwrap().read_all().unwrap();
        prop_assert_eq!(back.len(), pairs.len());
        for (a, b) in pairs.iter().zip(&back) {
            for (x, y) in [(a.0, b.0), (a.1, b.1)] {
                prop_assert_eq!(x.status, y.status);
                prop_assert_eq!(x.column_index, y.column_index);
                prop_assert_eq!(x.depth().map(f64::to_bits), y.depth().map(f64::to_bits));
            }
        }
    }

    #[test]
    fn integer_frames_roundtrip_through_files(w in 1usize..20, d in 1usize..20, wide in any::<bool>(), seed in any::<u64>()) {
        let max = if wide { 65535u64 } else { 255 };
        let samples: Vec<f64> = (0..w * d)
            .map(|i| (seed.wrapping_add(i as u64).wrapping_mul(6364136223846793005) >> 33) % (max + 1))
            .map(|v| v as f64)
            .collect();
        let frame = MScanFrame::from_row_major(w, d, &samples).unwrap();
        prop_assert_eq!(&io::decode_pgm(&io::encode_pgm(&frame).unwrap()).unwrap(), &frame);
        prop_assert_eq!(&io::decode_raw(&io::encode_raw(&frame)).unwrap(), &frame);
    }

    #[test]
    fn reduction_is_scale_invariant(a in 0.01..10.0f64, b in 0.0..10.0f64, c in 0.01..100.0f64) {
        let x = reduction_pct(a, b).unwrap();
        let y = reduction_pct(c * a, c * b).unwrap();
        prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
    }

    #[test]
    fn mae_is_translation_invariant(pairs in prop::collection::vec((depth(), depth()), 1..50), shift in -100.0..100.0f64) {
        let (e, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let es: Vec<f64> = e.iter().map(|v| v + shift).collect();
        let ts: Vec<f64> = t.iter().map(|v| v + shift).collect();
        let a = mean_abs_error(&e, &t).unwrap();
        let b = mean_abs_error(&es, &ts).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn oracle_is_pure(k in 0usize..512, seed in any::<u64>()) {
        let scene = preset(Regime::DropoutJagged);
        let key = |(e, d): (BoundaryObservation, BoundaryObservation)| {
            [e, d].map(|o| (o.status, o.depth().map(f64::to_bits)))
        };
        let a = key(noisy_oracle(&scene, k, seed).unwrap());
        let b = key(noisy_oracle(&scene, k, seed).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn jaggedness_nonnegative(values in prop::collection::vec(depth(), 2..100)) {
        prop_assert!(jaggedness(&values).unwrap() >= 0.0);
    }
}
