//! Acceptance suite. Each test prints one `PASS`/`FAIL` line with the
//! measured values before asserting, so `--nocapture` gives a full report.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thermosig::dsp::{
    design_iir, dwt_approx, filtfilt, parabolic_peak, savgol, welch_psd, FilterBand, FilterFamily, IirFilter,
};
use thermosig::metrics::pearson;
use thermosig::pipeline::AggregationPolicy;
use thermosig::synth::{gen_session, render_frames, RateProfile, RenderSpec, RhythmSpec, SyntheticSpec, RESP_GAIN};
use thermosig::sweep::config_key;
use thermosig::{
    eda_agreement, enumerate_methods, estimate_br, estimate_hr, extract_eda_trend, extract_roi_traces, io,
    rate_agreement, run_sweep, to_processing_rate, AggregationKind, EdaMethod, Polarity, ReferenceSignal, RoiKind,
    RoiTrace, RunConfig, SessionData, SweepResult,
};

fn verdict(id: &str, name: &str, pass: bool, detail: impl AsRef<str>) {
    println!(
        "criterion {id:>3} {name:<28} {} | {}",
        if pass { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    assert!(pass, "criterion {id} ({name}) failed: {}", detail.as_ref());
}

fn reference<'a>(refs: &'a [ReferenceSignal], name: &str) -> &'a ReferenceSignal {
    refs.iter().find(|r| r.name == name).unwrap()
}

fn quiet_spec(seed: u64, duration_s: f64) -> SyntheticSpec {
    let mut s = SyntheticSpec {
        seed,
        duration_s,
        ..SyntheticSpec::default()
    };
    s.cardiac.amplitude = 0.0;
    s.resp.amplitude = 0.0;
    s.motion.amplitude = 0.0;
    s
}

#[test]
fn c01_breathing_rate_recovery() {
    let resp_amp = 5.0;
    let mut spec = SyntheticSpec {
        seed: 11,
        duration_s: 600.0,
        fps: 7.5,
        resp: RhythmSpec {
            bpm: RateProfile::Modulated {
                mean: 15.0,
                depth: 3.0,
                period_s: 120.0,
            },
            amplitude: resp_amp,
        },
        ..SyntheticSpec::default()
    };
    // 0 dB on the nose: white-noise power equals the respiratory power there
    spec.noise.white_sigma = RESP_GAIN[0] * resp_amp / 2f64.sqrt();
    let s = gen_session(&spec).unwrap();
    let cfg = RunConfig::default();

    let start = Instant::now();
    let traces = to_processing_rate(&s.traces, &cfg.pipeline).unwrap();
    let out = estimate_br(&traces, &cfg.br).unwrap();
    let elapsed = start.elapsed().as_secs_f64();

    let agr = rate_agreement(&out.estimate, reference(&s.references, "BR")).unwrap();
    let pass = agr.mae < 1.0 && elapsed < 10.0;
    verdict(
        "1",
        "breathing rate recovery",
        pass,
        format!(
            "MAE {:.3} bpm (< 1.0) over {} valid samples, coverage {:.3}, runtime {:.2} s (< 10)",
            agr.mae, agr.n_valid, agr.coverage, elapsed
        ),
    );
}

/// Four channels at 7.5 Hz: a shared 0.5 Hz artifact with per-channel gains,
/// a 72 bpm pulse and independent white noise.
fn omit_channels(cardiac_amp: f64, seed: u64, duration_s: f64) -> Vec<RoiTrace<f64>> {
    let fs = 7.5;
    let n = (duration_s * fs) as usize;
    let artifact_gain = [1.0, 0.8, 1.2, 0.9];
    let cardiac_gain = [1.0, 0.6, 0.8, 0.7];
    let rois = [RoiKind::Forehead, RoiKind::Nose, RoiKind::CheekL, RoiKind::CheekR];
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rois.iter()
        .enumerate()
        .map(|(c, &roi)| {
            let values = (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    artifact_gain[c] * (TAU * 0.5 * t).sin()
                        + cardiac_gain[c] * cardiac_amp * (TAU * 1.2 * t + 0.4 * c as f64).sin()
                        + noise.sample(&mut rng)
                })
                .collect();
            RoiTrace::from_values(roi, AggregationKind::Mean, fs, values)
        })
        .collect()
}

#[test]
fn c02_heart_rate_via_omit() {
    let cfg = RunConfig::default();
    let hr_ref = ReferenceSignal::uniform("HR", "bpm", 1.0, 0.0, vec![72.0; 301]).unwrap();
    let mut maes = Vec::new();
    let mut invalid = Vec::new();
    for seed in 0..5 {
        let with_pulse = to_processing_rate(&omit_channels(0.1, seed, 300.0), &cfg.pipeline).unwrap();
        let out = estimate_hr(&with_pulse, &cfg.hr).unwrap();
        maes.push(rate_agreement(&out.estimate, &hr_ref).unwrap().mae);

        let without = to_processing_rate(&omit_channels(0.0, seed, 300.0), &cfg.pipeline).unwrap();
        invalid.push(estimate_hr(&without, &cfg.hr).unwrap().estimate.invalid_fraction());
    }
    let worst_mae = maes.iter().copied().fold(0.0, f64::max);
    let least_invalid = invalid.iter().copied().fold(1.0, f64::min);
    verdict(
        "2",
        "heart rate via OMIT",
        worst_mae < 2.0 && least_invalid >= 0.8,
        format!(
            "worst MAE {worst_mae:.3} bpm (< 2) over 5 seeds; pulse-free sessions min invalid fraction {least_invalid:.3} (>= 0.80)"
        ),
    );
}

#[test]
fn c03_eda_recovery() {
    let mut spec = quiet_spec(3, 600.0);
    spec.eda.polarity = -1.0;
    // the EDA source is standardized, so its nose power is amplitude²
    spec.noise.white_sigma = spec.eda.amplitude;
    let s = gen_session(&spec).unwrap();
    let cfg = RunConfig::default();
    let traces = to_processing_rate(&s.traces, &cfg.pipeline).unwrap();
    let nose = traces.iter().find(|t| t.roi == RoiKind::Nose).unwrap();
    let peda = reference(&s.references, "PEDA");

    let mut scores = BTreeMap::new();
    let mut bw = None;
    for m in enumerate_methods() {
        let trend = extract_eda_trend(nose, &m).unwrap();
        let r = eda_agreement(&trend, peda).unwrap();
        if m == EdaMethod::BUTTERWORTH {
            bw = Some(r.clone());
        }
        scores.insert(m.name(), (r.pcc_abs, r.r_max, r.tau_star));
    }
    let bw = bw.unwrap();
    let worst = scores.values().map(|s| s.0).fold(1.0, f64::min);
    let listing: Vec<String> = scores
        .iter()
        .map(|(k, (pcc, r_max, tau))| format!("{k} {pcc:.3} (r_max {r_max:.3} at {tau:+.0} s)"))
        .collect();
    verdict(
        "3",
        "EDA trend recovery",
        bw.pcc_abs > 0.90 && bw.polarity == Polarity::Negative && worst > 0.75,
        format!(
            "butterworth pcc_abs {:.3} (> 0.90) polarity {}; all methods > 0.75: [{}]",
            bw.pcc_abs,
            bw.polarity.as_str(),
            listing.join(", ")
        ),
    );
}

#[test]
fn c04_lag_and_polarity() {
    let fps = 7.5;
    let s = gen_session(&quiet_spec(4, 900.0)).unwrap();
    let nose = &s.traces[0];
    let peda = reference(&s.references, "PEDA");
    let (start_s, len_s) = (150.0, 600.0);
    let len = (len_s * fps) as usize;
    let ref_start = (start_s * fps) as usize;
    let r_window = ReferenceSignal::uniform(
        "PEDA",
        "a.u.",
        fps,
        0.0,
        peda.values[ref_start..ref_start + len].to_vec(),
    )
    .unwrap();

    let mut lag_ok = true;
    let mut found = Vec::new();
    for d in [-60i64, -15, 0, 15, 60] {
        // the estimate at time t shows the reference value from t - d
        let from = ref_start as i64 - (d as f64 * fps) as i64;
        let values = nose.values[from as usize..from as usize + len].to_vec();
        let trace = RoiTrace::from_values(RoiKind::Nose, nose.aggregation, fps, values);
        let trend = extract_eda_trend(&trace, &EdaMethod::BUTTERWORTH).unwrap();
        let r = eda_agreement(&trend, &r_window).unwrap();
        lag_ok &= (r.tau_star - d as f64).abs() <= 1.0;
        found.push(format!("{d}->{:.1}", r.tau_star));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let flips: Vec<bool> = (0..50).map(|_| rng.random_bool(0.7)).collect();
    let sessions: Vec<SessionData> = flips
        .iter()
        .zip(1000u64..)
        .map(|(&flip, seed)| {
            let mut spec = quiet_spec(seed, 300.0);
            spec.eda.polarity = if flip { -1.0 } else { 1.0 };
            gen_session(&spec).unwrap().into()
        })
        .collect();
    let flipped = flips.iter().filter(|&&f| f).count() as f64 / 50.0;
    let mut cfg = RunConfig::default();
    cfg.sweep.rois = vec![RoiKind::Nose];
    cfg.sweep.methods = vec![EdaMethod::BUTTERWORTH];
    cfg.sweep.references = vec!["PEDA".into()];
    cfg.sweep.rates = false;
    let sweep = run_sweep(&sessions, &cfg).unwrap();
    let scored: Vec<Polarity> = sweep.cells.iter().filter_map(|c| c.report.as_ref().map(|r| r.polarity)).collect();
    let census = scored.iter().filter(|p| **p == Polarity::Negative).count() as f64 / scored.len() as f64;
    let census_ok = scored.len() == 50 && (census - 0.7).abs() <= 0.1;

    verdict(
        "4",
        "lag and polarity analytics",
        lag_ok && census_ok,
        format!(
            "tau_star (d->found, ±1 s): [{}]; negative-polarity census {census:.2} (0.7 ± 0.1, {} scored, {flipped:.2} drawn flipped)",
            found.join(", "),
            scored.len()
        ),
    );
}

fn pipeline_filters(cfg: &RunConfig) -> Vec<(String, FilterFamily, FilterBand)> {
    let mut out = Vec::new();
    for m in &cfg.sweep.methods {
        match *m {
            EdaMethod::ButterworthLp { cutoff_hz, order } => {
                out.push((format!("{m} lp o{order}"), FilterFamily::Butterworth, FilterBand::Lowpass(cutoff_hz)))
            }
            EdaMethod::BesselLp { cutoff_hz, order } => {
                out.push((format!("{m} lp o{order}"), FilterFamily::Bessel, FilterBand::Lowpass(cutoff_hz)))
            }
            EdaMethod::HilbertEnv {
                band_lo_hz,
                band_hi_hz,
                cutoff_hz,
                ..
            } => {
                out.push((
                    format!("{m} bp"),
                    FilterFamily::Butterworth,
                    FilterBand::Bandpass(band_lo_hz, band_hi_hz),
                ));
                out.push((format!("{m} lp"), FilterFamily::Butterworth, FilterBand::Lowpass(cutoff_hz)));
            }
            _ => {}
        }
    }
    let hr = &cfg.hr;
    out.push(("hr prefilter".into(), FilterFamily::Butterworth, FilterBand::Bandpass(hr.prefilter.0, hr.prefilter.1)));
    if let Some((lo, hi)) = hr.pulse_band {
        out.push(("hr pulse band".into(), FilterFamily::Butterworth, FilterBand::Bandpass(lo, hi)));
    }
    let br = &cfg.br;
    out.push(("br prefilter".into(), FilterFamily::Butterworth, FilterBand::Bandpass(br.prefilter.0, br.prefilter.1)));
    out
}

fn filter_order(cfg: &RunConfig, name: &str) -> usize {
    if name.starts_with("hr") {
        return cfg.hr.filter_order;
    }
    if name.starts_with("br") {
        return cfg.br.filter_order;
    }
    for m in &cfg.sweep.methods {
        if !name.starts_with(m.name()) {
            continue;
        }
        match *m {
            EdaMethod::ButterworthLp { order, .. } | EdaMethod::BesselLp { order, .. } => return order,
            EdaMethod::HilbertEnv { band_order, order, .. } => {
                return if name.ends_with("bp") { band_order } else { order };
            }
            _ => {}
        }
    }
    unreachable!("{name}")
}

/// Peak of the cross-correlation over lags in `±max_lag`, summed over a
/// window spanning whole periods of the probe tone.
fn peak_lag(x: &[f64], y: &[f64], range: std::ops::Range<usize>, max_lag: i64) -> i64 {
    let mut best = (0i64, f64::NEG_INFINITY);
    for lag in -max_lag..=max_lag {
        let s: f64 = range.clone().map(|i| x[i] * y[(i as i64 + lag) as usize]).sum();
        if s > best.1 {
            best = (lag, s);
        }
    }
    best.0
}

#[test]
fn c05_filter_correctness() {
    let cfg = RunConfig::default();
    let fs = cfg.pipeline.processing_hz;
    let mut details = Vec::new();

    let designed: Vec<(String, FilterFamily, FilterBand, IirFilter)> = pipeline_filters(&cfg)
        .into_iter()
        .map(|(name, fam, band)| {
            let f = design_iir(fam, filter_order(&cfg, &name), band, fs).unwrap();
            (name, fam, band, f)
        })
        .collect();
    let worst_pole = designed.iter().map(|d| d.3.max_pole_modulus()).fold(0.0, f64::max);
    let stable = worst_pole < 1.0 - 1e-9;
    details.push(format!("{} filters, max pole modulus {worst_pole:.9}", designed.len()));

    let mut worst_gain: f64 = 0.0;
    for (_, fam, band, f) in &designed {
        if *fam != FilterFamily::Butterworth {
            continue;
        }
        let edges = match *band {
            FilterBand::Lowpass(fc) => vec![fc],
            FilterBand::Bandpass(lo, hi) => vec![lo, hi],
        };
        for fc in edges {
            worst_gain = worst_gain.max((f.magnitude(fc) - std::f64::consts::FRAC_1_SQRT_2).abs());
        }
    }
    let gain_ok = worst_gain <= 1e-4;
    details.push(format!("Butterworth |H(fc)| worst deviation {worst_gain:.2e}"));

    let n = 12000;
    let mut lags = Vec::new();
    for (name, f0) in [("butterworth lp o3", 0.02), ("hr pulse band", 2.0), ("br prefilter", 0.25)] {
        let filter = &designed.iter().find(|d| d.0 == name).unwrap().3;
        let x: Vec<f64> = (0..n).map(|i| (TAU * f0 * i as f64 / fs).sin()).collect();
        let y = filtfilt(filter, &x).unwrap();
        // 9000 samples hold a whole number of periods for each probe
        lags.push(peak_lag(&x, &y, 1500..10500, 30));
    }
    let lag_ok = lags.iter().all(|l| l.abs() <= 1);
    details.push(format!("filtfilt tone lags {lags:?}"));

    let x: Vec<f64> = (0..3000)
        .map(|i| {
            let t = i as f64 / fs;
            1.5 - 0.2 * t + 0.03 * t * t - 0.0004 * t * t * t
        })
        .collect();
    let sg = savgol(&x, 30.0, 3, fs).unwrap();
    let half = 450;
    let sg_err = (half..x.len() - half)
        .map(|i| ((sg[i] - x[i]) / x[i].abs().max(1e-12)).abs())
        .fold(0.0, f64::max);
    let sg_ok = sg_err < 1e-6;
    details.push(format!("SavGol cubic rel err {sg_err:.2e}"));

    let constant = dwt_approx(&vec![7.5f64; 18000], fs, 0.05).unwrap();
    let c_err = constant.iter().map(|v| (v - 7.5).abs() / 7.5).fold(0.0, f64::max);
    let ramp: Vec<f64> = (0..18000).map(|i| 100.0 + 0.01 * i as f64).collect();
    let r_approx = dwt_approx(&ramp, fs, 0.05).unwrap();
    let edge = 3000;
    let r_err = (edge..ramp.len() - edge)
        .map(|i| ((r_approx[i] - ramp[i]) / ramp[i]).abs())
        .fold(0.0, f64::max);
    let tone: Vec<f64> = (0..18000).map(|i| (TAU * i as f64 / fs).sin()).collect();
    let t_approx = dwt_approx(&tone, fs, 0.05).unwrap();
    let rms = |v: &[f64]| (v.iter().map(|a| a * a).sum::<f64>() / v.len() as f64).sqrt();
    let t_ratio = rms(&t_approx) / rms(&tone);
    let db4_ok = c_err < 1e-6 && r_err < 1e-6 && t_ratio < 0.05;
    details.push(format!(
        "db4 const {c_err:.1e}, interior ramp {r_err:.1e}, 1 Hz RMS ratio {t_ratio:.4}"
    ));

    verdict(
        "5",
        "filter correctness",
        stable && gain_ok && lag_ok && sg_ok && db4_ok,
        details.join("; "),
    );
}

#[test]
fn c06_spectral_estimation() {
    let fs = 30.0;
    let seg = 256;
    let res = fs / seg as f64;
    let mut worst_off: f64 = 0.0;
    for k in 0..19 {
        let delta = -0.45 + 0.05 * k as f64;
        let f = (20.0 + delta) * res;
        let x: Vec<f64> = (0..seg).map(|i| (TAU * f * i as f64 / fs + 0.3).sin()).collect();
        let s = welch_psd(&x, fs, seg, 0.0, seg).unwrap();
        let p = parabolic_peak(&s, 10.0 * res, 30.0 * res).unwrap();
        worst_off = worst_off.max((p.freq - f).abs() / res);
    }

    let mut worst_flat: f64 = 0.0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..9000).map(|_| normal.sample(&mut rng)).collect();
        let s = welch_psd(&x, fs, seg, 0.5, seg).unwrap();
        // DC is removed by the detrend and Nyquist is one-sided
        let band = &s.power[1..s.power.len() - 1];
        let mut sorted = band.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        worst_flat = worst_flat.max(band.iter().copied().fold(0.0, f64::max) / median);
    }
    verdict(
        "6",
        "spectral estimation",
        worst_off < 0.02 && worst_flat < 10.0,
        format!(
            "worst off-bin error {:.4} bins (< 0.02) over 19 offsets; worst white-noise max/median {worst_flat:.2} (< 10) over 20 seeds",
            worst_off
        ),
    );
}

fn cli(args: &[&str]) -> i32 {
    thermosig_cli::cli_main(std::iter::once("thermosig").chain(args.iter().copied()))
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_file() {
            out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap());
        }
    }
    out
}

/// Synthesizes two sessions and sweeps them, leaving the results in `root/out`.
fn synth_and_sweep(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let sessions = root.join("sessions");
    for seed in ["7", "8"] {
        let dir = sessions.join(format!("s{seed}"));
        let code = cli(&["synth", "--duration", "300", "--seed", seed, "--out", dir.to_str().unwrap()]);
        assert_eq!(code, 0);
    }
    let out = root.join("out");
    let code = cli(&["sweep", "--sessions", sessions.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    read_tree(&out)
}

#[test]
fn c07_sweep_reproducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("run");
    let first = synth_and_sweep(&root);
    fs::rename(&root, tmp.path().join("first")).unwrap();
    let second = synth_and_sweep(&root);

    let sweep = SweepResult::from_json(std::str::from_utf8(&first["sweep.json"]).unwrap()).unwrap();
    let grid = String::from_utf8(first["grid.csv"].clone()).unwrap();
    let mut per_ref: BTreeMap<String, usize> = BTreeMap::new();
    let mut rdr = csv::Reader::from_reader(grid.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let (ref_col, sess_col) = (
        headers.iter().position(|h| h == "reference").unwrap(),
        headers.iter().position(|h| h == "session_id").unwrap(),
    );
    let mut sessions = std::collections::BTreeSet::new();
    for row in rdr.records() {
        let row = row.unwrap();
        *per_ref.entry(row[ref_col].to_string()).or_default() += 1;
        sessions.insert(row[sess_col].to_string());
    }
    let n_sessions = sessions.len();
    let cells_ok = !per_ref.is_empty() && per_ref.values().all(|&c| c == 48 * n_sessions);

    let mut oracle_ok = true;
    let mut oracle_detail = Vec::new();
    for r in sweep.references.iter().filter(|r| per_ref.contains_key(*r)) {
        let oracle = sweep.oracle.get(r).map(|o| o.pcc_abs.mean).unwrap_or(f64::NAN);
        let best = sweep.best_fixed(r).map(|b| b.1).unwrap_or(f64::NAN);
        oracle_ok &= oracle.is_finite() && oracle >= best;
        oracle_detail.push(format!("{r} oracle {oracle:.4} >= best fixed {best:.4}"));
    }
    let same = first == second;
    verdict(
        "7",
        "sweep reproducibility",
        cells_ok && oracle_ok && same,
        format!(
            "grid rows per reference {per_ref:?} for {n_sessions} sessions (48 each); {}; {} output files byte-identical: {same}",
            oracle_detail.join(", "),
            first.len()
        ),
    );
}

#[test]
fn c08_frame_round_trip() {
    let spec = SyntheticSpec {
        seed: 8,
        duration_s: 60.0,
        ..SyntheticSpec::default()
    };
    let s = gen_session(&spec).unwrap();
    let (frames, track) = render_frames(&s.traces, &RenderSpec::default()).unwrap();
    let mut cfg = RunConfig::default().pipeline;
    cfg.aggregation = AggregationPolicy::Fixed(AggregationKind::Mean);
    let got = extract_roi_traces::<f64>(&frames, &track, &RoiKind::GEOMETRIC, &cfg).unwrap();
    let corr: Vec<f64> = got
        .iter()
        .zip(&s.traces)
        .map(|(g, w)| pearson(&g.values, &w.values).unwrap_or(f64::NAN))
        .collect();
    let worst = corr.iter().copied().fold(1.0, f64::min);
    verdict(
        "8",
        "frame round trip",
        worst > 0.99,
        format!("worst ROI correlation {worst:.5} (> 0.99) over {} regions", corr.len()),
    );
}

#[test]
fn c09_dataset_track() {
    let Some(root) = std::env::var_os("THERMOSIG_DATASET") else {
        println!("criterion   9 dataset track                SKIP | THERMOSIG_DATASET is not set");
        return;
    };
    let cfg = RunConfig::default();
    let sessions: Vec<SessionData> = io::session_dirs(Path::new(&root))
        .unwrap()
        .into_iter()
        .map(|d| SessionData::from_bundle(io::load_session(&d, None).unwrap(), &cfg.pipeline).unwrap())
        .collect();
    let sweep = run_sweep(&sessions, &cfg).unwrap();
    let mut table = Vec::new();
    thermosig::sweep::write_summary_csv(&sweep, &mut table).unwrap();
    let shaped = ["PEDA", "PP_NR"]
        .iter()
        .all(|r| sweep.summaries.by_config.get(*r).is_some_and(|c| c.len() == 48));
    let nose_ema = sweep
        .summaries
        .by_config
        .get("PEDA")
        .and_then(|c| c.get(&config_key(RoiKind::Nose, "ema")))
        .map(|c| c.pcc_abs.mean)
        .unwrap_or(f64::NAN);
    verdict(
        "9",
        "dataset track",
        shaped && (nose_ema - 0.40).abs() <= 0.15,
        format!(
            "{} sessions, 48-config summaries for PEDA and PP_NR: {shaped}; nose/ema pcc_abs vs PEDA {nose_ema:.3} (0.40 ± 0.15)",
            sessions.len()
        ),
    );
}

const SESSION_S: f64 = 642.0;

fn timed_sweep(sessions: &[SessionData], threads: usize) -> f64 {
    let cfg = RunConfig::default();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let start = Instant::now();
    let result = pool.install(|| run_sweep(sessions, &cfg)).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(result.cells.iter().all(|c| c.error.is_none()));
    elapsed
}

fn perf_sessions(count: u64) -> Vec<SessionData> {
    (0..count)
        .map(|i| {
            gen_session(&SyntheticSpec {
                seed: 500 + i,
                duration_s: SESSION_S,
                ..SyntheticSpec::default()
            })
            .unwrap()
            .into()
        })
        .collect()
}

#[test]
fn c10a_single_session_runtime() {
    let sessions = perf_sessions(1);
    let cfg = RunConfig::default();
    let elapsed = timed_sweep(&sessions, 1);
    let cells = cfg.sweep.rois.len() * cfg.sweep.methods.len();
    verdict(
        "10a",
        "single-session runtime",
        elapsed < 60.0,
        format!("{SESSION_S} s session, {cells}-cell EDA sweep plus HR/BR on 1 thread: {elapsed:.2} s (< 60)"),
    );
}

#[test]
fn c10b_parallel_speedup() {
    let sessions = perf_sessions(8);
    let serial = timed_sweep(&sessions, 1);
    let parallel = timed_sweep(&sessions, 8);
    let speedup = serial / parallel;
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    verdict(
        "10b",
        "parallel speedup",
        speedup >= 4.0,
        format!("8 sessions: 1 thread {serial:.2} s, 8 threads {parallel:.2} s, speedup {speedup:.2}x (>= 4) on {cores} available cores"),
    );
}
