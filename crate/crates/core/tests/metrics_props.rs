use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thermosig::metrics::{agreement_on_aligned, spearman, trend_agreement};
use thermosig::{eda_agreement, BiosignalEstimate, BiosignalKind, Polarity, ReferenceSignal};

/// Smoothed random walk: slow, broadband enough for an unambiguous lag.
fn slow_signal(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    let walk: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            acc += z;
            acc
        })
        .collect();
    let k = 5;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(k);
            let hi = (i + k + 1).min(n);
            walk[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

fn estimate(values: Vec<f64>) -> BiosignalEstimate<f64> {
    let n = values.len();
    BiosignalEstimate {
        kind: BiosignalKind::EdaTrend,
        rate_hz: 1.0,
        values,
        valid: vec![true; n],
        t0: 0.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pcc_abs_ignores_sign_scale_and_offset(
        seed in 0u64..10_000,
        k in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0],
        c in -1e3f64..1e3,
        on_reference in any::<bool>(),
    ) {
        let e = slow_signal(seed, 400);
        let r = slow_signal(seed + 7, 400);
        let base = agreement_on_aligned(&e, &r, 1.0).unwrap().pcc_abs;
        for t in [|v: f64, _k: f64, _c: f64| -v, |v, k, _c| k * v, |v, _k, c| v + c] {
            let (e2, r2): (Vec<f64>, Vec<f64>) = if on_reference {
                (e.clone(), r.iter().map(|&v| t(v, k, c)).collect())
            } else {
                (e.iter().map(|&v| t(v, k, c)).collect(), r.clone())
            };
            let got = agreement_on_aligned(&e2, &r2, 1.0).unwrap().pcc_abs;
            prop_assert!((got - base).abs() < 1e-9, "{got} vs {base}");
        }
    }

    #[test]
    fn spearman_ignores_monotone_maps(seed in 0u64..10_000, which in 0usize..3) {
        let e = slow_signal(seed, 300);
        let r = slow_signal(seed + 1, 300);
        let base = spearman(&e, &r).unwrap();
        let f = |v: f64| match which {
            0 => (v / 10.0).exp(),
            1 => v * v * v + v,
            _ => -(v.atan()),
        };
        let sign = if which == 2 { -1.0 } else { 1.0 };
        let got = spearman(&e.iter().map(|&v| f(v)).collect::<Vec<_>>(), &r).unwrap();
        prop_assert!((got - sign * base).abs() < 1e-12);
    }

    #[test]
    fn trend_agreement_extremes(steps in prop::collection::vec(prop_oneof![-5.0f64..-0.01, 0.01f64..5.0], 2..300)) {
        let mut acc = 0.0;
        let e: Vec<f64> = steps.iter().map(|s| { acc += s; acc }).collect();
        let neg: Vec<f64> = e.iter().map(|v| -v).collect();
        prop_assert_eq!(trend_agreement(&e, &e), 100.0);
        prop_assert_eq!(trend_agreement(&e, &neg), 0.0);
    }
}

#[test]
fn lag_is_recovered_with_its_sign() {
    // e[i] = r[i - d]: the estimate trails the reference by d seconds.
    let n = 900;
    let s = slow_signal(11, n + 400);
    for d in [-60i64, -15, 0, 15, 60] {
        let r: Vec<f64> = s[200..200 + n].to_vec();
        let start = (200 - d) as usize;
        let e: Vec<f64> = s[start..start + n].to_vec();
        let reference = ReferenceSignal::uniform("PEDA", "a.u.", 1.0, 0.0, r).unwrap();
        let rep = eda_agreement(&estimate(e), &reference).unwrap();
        assert!((rep.tau_star - d as f64).abs() <= 1.0, "d={d} tau={}", rep.tau_star);
    }
}

#[test]
fn polarity_follows_the_sign_of_the_correlation() {
    let r = slow_signal(5, 600);
    let reference = ReferenceSignal::uniform("PEDA", "a.u.", 1.0, 0.0, r.clone()).unwrap();
    let pos = eda_agreement(&estimate(r.clone()), &reference).unwrap();
    let neg = eda_agreement(&estimate(r.iter().map(|v| -2.0 * v + 3.0).collect()), &reference).unwrap();
    assert_eq!(pos.polarity, Polarity::Positive);
    assert_eq!(neg.polarity, Polarity::Negative);
    assert!((pos.pcc_abs - 1.0).abs() < 1e-12 && (neg.pcc_abs - 1.0).abs() < 1e-12);
    assert_eq!(neg.trend_agreement, 0.0);
}
