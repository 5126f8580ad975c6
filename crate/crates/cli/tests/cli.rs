use std::fs;
use std::path::Path;

fn run(args: &[&str]) -> i32 {
    thermosig_cli::cli_main(std::iter::once("thermosig").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, seed: &str) {
    assert_eq!(run(&["synth", "--duration", "120", "--seed", seed, "--out", p(dir)]), 0);
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]), 0);
    assert_eq!(run(&["--version"]), 0);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(run(&["hr", "--no-such-flag"]), 1);
    assert_eq!(run(&["frobnicate"]), 1);
}

#[test]
fn missing_input_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["hr", "--out", p(tmp.path())]), 1);
    assert_eq!(run(&["eda", "--frames", p(tmp.path())]), 1);
    assert_eq!(run(&["sweep", "--sessions", p(&tmp.path().join("nothing"))]), 1);
}

#[test]
fn synth_writes_a_loadable_session_with_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let s = tmp.path().join("s");
    synth(&s, "3");
    for f in ["meta.json", "traces.csv", "landmarks.csv", "synth_spec.json", "provenance.json"] {
        assert!(s.join(f).is_file(), "{f}");
    }
    let prov: serde_json::Value = serde_json::from_str(&fs::read_to_string(s.join("provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["command"], "synth");
    assert_eq!(prov["seed"], 3);
    assert_eq!(prov["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn eda_hr_br_write_estimates() {
    let tmp = tempfile::tempdir().unwrap();
    let s = tmp.path().join("s");
    synth(&s, "4");
    let out = tmp.path().join("o");
    assert_eq!(run(&["eda", "--session", p(&s), "--method", "savgol", "--out", p(&out)]), 0);
    assert_eq!(run(&["hr", "--session", p(&s), "--out", p(&out)]), 0);
    assert_eq!(run(&["br", "--traces", p(&s.join("traces.csv")), "--out", p(&out)]), 0);
    for f in ["eda_nose_savgol.csv", "hr.csv", "br.csv", "provenance.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert_eq!(run(&["eda", "--session", p(&s), "--method", "nonsense", "--out", p(&out)]), 1);
}

#[test]
fn eval_of_identical_series_is_perfect() {
    let tmp = tempfile::tempdir().unwrap();
    let s = tmp.path().join("s");
    synth(&s, "5");
    let out = tmp.path().join("o");
    assert_eq!(run(&["eda", "--session", p(&s), "--out", p(&out)]), 0);
    let est = out.join("eda_nose_butterworth.csv");
    let ev = tmp.path().join("ev");
    assert_eq!(
        run(&["eval", "--estimate", p(&est), "--reference", p(&est), "--kind", "eda", "--out", p(&ev)]),
        0
    );
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(ev.join("eval_eda.json")).unwrap()).unwrap();
    assert!((report["pcc_abs"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(report["tau_star"].as_f64().unwrap(), 0.0);
    assert_eq!(report["polarity"], "positive");
}

#[test]
fn sweep_and_report_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let sessions = tmp.path().join("sessions");
    synth(&sessions.join("a"), "1");
    synth(&sessions.join("b"), "2");
    let mut outputs = Vec::new();
    for name in ["r1", "r2"] {
        let out = tmp.path().join("runs").join(name);
        assert_eq!(run(&["sweep", "--sessions", p(&sessions), "--out", p(&out)]), 0);
        let grid = fs::read_to_string(out.join("grid.csv")).unwrap();
        // header plus 2 sessions × 48 configurations × one PEDA reference
        assert_eq!(grid.lines().count(), 1 + 2 * 48);
        let rep = out.join("report");
        assert_eq!(run(&["report", "--sweep", p(&out), "--sessions", p(&sessions), "--out", p(&rep)]), 0);
        assert!(rep.join("heatmap_PEDA.svg").is_file());
        let files = ["grid.csv", "summary.csv", "oracle.csv", "rates.csv", "sweep.json"];
        outputs.push(files.map(|f| fs::read(out.join(f)).unwrap()));
    }
    assert!(outputs[0] == outputs[1]);
}

#[test]
fn config_file_overrides_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let s = tmp.path().join("s");
    synth(&s, "6");
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"sweep": {"rois": ["nose"], "methods": [{"method": "butterworth_lp", "cutoff_hz": 0.05, "order": 3}], "rates": false}}"#).unwrap();
    let out = tmp.path().join("o");
    let code = run(&["--config", p(&cfg), "sweep", "--sessions", p(&s), "--out", p(&out)]);
    assert_eq!(code, 0);
    let grid = fs::read_to_string(out.join("grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 2);
    fs::write(&cfg, r#"{"parallelism": 0}"#).unwrap();
    assert_eq!(run(&["--config", p(&cfg), "sweep", "--sessions", p(&s), "--out", p(&out)]), 1);
}
