use std::f64::consts::TAU;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thermosig::cardio::{estimate_rate_track, postprocess_rates};
use thermosig::dsp::spectral::Welch;
use thermosig::{
    estimate_br, omit_fuse, AggregationKind, BiosignalEstimate, BiosignalKind, RateEstimatorConfig, RoiKind, RoiTrace,
};

const FS: f64 = 30.0;

fn noise(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sigma * z
        })
        .collect()
}

/// Four channels sharing a 0.5 Hz artifact plus a weighted 1.2 Hz pulse.
fn channels(seed: u64, n: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gains = [(1.0, 0.10), (0.8, 0.06), (1.2, 0.08), (0.9, 0.07)];
    gains
        .iter()
        .map(|&(ga, gc)| {
            let z = noise(&mut rng, n, 0.05);
            (0..n)
                .map(|i| {
                    let t = i as f64 / FS;
                    ga * (TAU * 0.5 * t).sin() + gc * (TAU * 1.2 * t).sin() + z[i]
                })
                .collect()
        })
        .collect()
}

fn normalized_spectrum(x: &[f64]) -> Vec<f64> {
    let spec = Welch::for_window(FS, 450).unwrap().estimate(x).unwrap();
    let total = spec.total_power();
    spec.power.iter().map(|p| p / total).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn omit_ignores_channel_scaling(seed in 0u64..1000, j in 0usize..4, k in 0.01f64..100.0) {
        let ch = channels(seed, 1800);
        let mut scaled = ch.clone();
        scaled[j].iter_mut().for_each(|v| *v *= k);
        let a = omit_fuse(&ch, FS, (1.0, 3.5)).unwrap();
        let b = omit_fuse(&scaled, FS, (1.0, 3.5)).unwrap();
        prop_assert_eq!(a.selected, b.selected);
        let (sa, sb) = (normalized_spectrum(&a.signal), normalized_spectrum(&b.signal));
        let d = sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(d < 1e-6, "spectrum diff {d}");
    }

    #[test]
    fn rate_track_follows_time_shift(seed in 0u64..1000, d in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 3600;
        let x: Vec<f64> = noise(&mut rng, n, 0.3)
            .into_iter()
            .enumerate()
            .map(|(i, z)| {
                let t = i as f64 / FS;
                (TAU * (1.2 * t + 0.002 * t * t)).sin() + z
            })
            .collect();
        let mut shifted = noise(&mut rng, d * FS as usize, 0.3);
        shifted.extend_from_slice(&x);
        let cfg = RateEstimatorConfig::cardiac();
        let a = estimate_rate_track(&x, &vec![true; x.len()], FS, &cfg).unwrap();
        let b = estimate_rate_track(&shifted, &vec![true; shifted.len()], FS, &cfg).unwrap();
        prop_assert_eq!(b.len(), a.len() + d);
        for i in 0..a.len() {
            prop_assert!((b.time(i + d) - a.time(i) - d as f64).abs() < 1e-9);
            prop_assert_eq!(b.values[i + d].to_bits(), a.values[i].to_bits());
            prop_assert_eq!(b.valid[i + d], a.valid[i]);
        }
    }

    #[test]
    fn postprocessed_rates_stay_in_range(
        raw in prop::collection::vec((0.0f64..300.0, any::<bool>()), 1..200),
        cardiac in any::<bool>(),
    ) {
        let cfg = if cardiac { RateEstimatorConfig::cardiac() } else { RateEstimatorConfig::respiratory() };
        let est = BiosignalEstimate {
            kind: cfg.kind,
            rate_hz: 1.0,
            values: raw.iter().map(|r| r.0).collect(),
            valid: raw.iter().map(|r| r.1).collect(),
            t0: 0.0,
        };
        let out = postprocess_rates(&est, &cfg);
        prop_assert_eq!(out.len(), est.len());
        for (v, ok) in out.values.iter().zip(&out.valid) {
            if *ok {
                prop_assert!(*v >= cfg.valid_bpm.0 && *v <= cfg.valid_bpm.1, "{v}");
            }
        }
    }

    #[test]
    fn breathing_rate_is_polarity_blind(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 4500;
        let traces: Vec<RoiTrace<f64>> = [RoiKind::Nose, RoiKind::CheekL, RoiKind::CheekR]
            .iter()
            .map(|&roi| {
                let z = noise(&mut rng, n, 1.0);
                let v = (0..n).map(|i| 3.0 * (TAU * 0.25 * i as f64 / FS).sin() + z[i]).collect();
                RoiTrace::from_values(roi, AggregationKind::Mean, FS, v)
            })
            .collect();
        let negated: Vec<RoiTrace<f64>> = traces
            .iter()
            .map(|t| RoiTrace::from_values(t.roi, t.aggregation, t.fps, t.values.iter().map(|v| -v).collect()))
            .collect();
        let cfg = RateEstimatorConfig::respiratory();
        let a = estimate_br(&traces, &cfg).unwrap().estimate;
        let b = estimate_br(&negated, &cfg).unwrap().estimate;
        prop_assert_eq!(&a.valid, &b.valid);
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() < 1e-9 || (x.is_nan() && y.is_nan()));
        }
        prop_assert_eq!(a.kind, BiosignalKind::BreathingRate);
    }
}
