//! `thermosig` command-line front end.
//!
//! Exit codes: 0 on success, 1 on bad input or usage, 2 on internal failure.

mod report;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};
use thermosig::io::{self, SessionBundle};
use thermosig::metrics::MAX_LAG_S;
use thermosig::pipeline::select_rois;
use thermosig::sweep::{self, config_key, SweepResult};
use thermosig::synth::{self, RateProfile, RenderSpec, SyntheticSpec};
use thermosig::{
    eda_agreement, estimate_br, estimate_hr, extract_eda_trend, extract_roi_traces, rate_agreement,
    to_processing_rate, BiosignalKind, EdaMethod, Estimate, RoiKind, RunConfig, SessionData, Trace,
};

/// Optional default for `--config`.
pub const CONFIG_ENV: &str = "THERMOSIG_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "thermosig", version, about = "Physiological signals from thermal facial video")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (JSON); falls back to $THERMOSIG_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Frame rate override for frames or traces without one.
    #[arg(long, global = true)]
    fps: Option<f64>,
    /// Worker threads.
    #[arg(long, global = true)]
    parallel: Option<usize>,
    /// Random seed (synth).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Args, Default)]
struct InputArgs {
    /// Session directory.
    #[arg(long)]
    session: Option<PathBuf>,
    /// Pre-extracted traces CSV.
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Raw frame file or PNG directory.
    #[arg(long)]
    frames: Option<PathBuf>,
    /// Landmark CSV for --frames.
    #[arg(long)]
    landmarks: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// ROI traces (native rate) from frames and landmarks.
    Extract {
        #[command(flatten)]
        input: InputArgs,
        /// Comma-separated regions; default all six.
        #[arg(long, value_delimiter = ',')]
        rois: Vec<String>,
    },
    /// 1 Hz EDA-like trend for one region and method.
    Eda {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "nose")]
        roi: String,
        #[arg(long, default_value = "butterworth")]
        method: String,
    },
    /// Heart-rate track.
    Hr {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Breathing-rate track.
    Br {
        #[command(flatten)]
        input: InputArgs,
    },
    /// ROI × method grid over one or more sessions.
    Sweep {
        /// A session directory or a directory of sessions.
        #[arg(long)]
        sessions: PathBuf,
    },
    /// Agreement of one estimate CSV with one reference CSV.
    Eval {
        #[arg(long)]
        estimate: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, value_parser = ["eda", "hr", "br"])]
        kind: String,
    },
    /// Synthetic session with known ground truth.
    Synth {
        #[arg(long, default_value_t = 300.0)]
        duration: f64,
        /// EDA embedding sign, 1 or -1.
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        polarity: f64,
        #[arg(long)]
        hr_bpm: Option<f64>,
        #[arg(long)]
        br_bpm: Option<f64>,
        /// Also render 16-bit frames.
        #[arg(long)]
        render_frames: bool,
    },
    /// Summary tables and SVG plots from a sweep.
    Report {
        /// sweep.json or the directory holding it.
        #[arg(long)]
        sweep: PathBuf,
        /// Sessions for trend overlays.
        #[arg(long)]
        sessions: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl From<thermosig::Error> for CliError {
    fn from(e: thermosig::Error) -> Self {
        match e {
            thermosig::Error::Unstable(_) => CliError::Internal(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(cli)));
    match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            let msg = match &e {
                CliError::Input(m) => format!("error: {m}"),
                CliError::Internal(m) => format!("internal error: {m}"),
            };
            eprintln!("{msg}");
            e.code()
        }
        Err(_) => {
            eprintln!("internal error: unexpected failure");
            2
        }
    }
}

struct Ctx {
    cfg: RunConfig,
    out: Option<PathBuf>,
    fps: Option<f64>,
    seed: Option<u64>,
}

impl Ctx {
    fn out_dir(&self) -> CliResult<&Path> {
        let dir = self
            .out
            .as_deref()
            .ok_or_else(|| input_err("--out <dir> is required for this command"))?;
        fs::create_dir_all(dir).map_err(|e| input_err(format!("{}: {e}", dir.display())))?;
        Ok(dir)
    }

    fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.cfg.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Written next to every output set. Holds nothing run-specific beyond
    /// the command, inputs, config hash, versions and seed, so identical runs
    /// produce identical files.
    fn provenance(&self, dir: &Path, command: &str, inputs: &[&Path]) -> CliResult<()> {
        let record = json!({
            "tool": "thermosig",
            "cli_version": env!("CARGO_PKG_VERSION"),
            "core_version": thermosig::VERSION,
            "command": command,
            "inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "config_sha256": self.config_hash(),
            "seed": self.seed,
        });
        write_text(&dir.join("provenance.json"), &pretty(&record))
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("JSON value serializes") + "\n"
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> CliResult<fs::File> {
    fs::File::create(path).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    match path.map(Path::to_path_buf).or(env_path) {
        Some(p) => Ok(RunConfig::load(&p)?),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(p) = cli.parallel {
        if p == 0 {
            return Err(input_err("--parallel must be at least 1"));
        }
        cfg.parallelism = Some(p);
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = Some(out.clone());
    }
    if let Some(f) = cli.fps {
        if !(f > 0.0 && f.is_finite()) {
            return Err(input_err(format!("--fps must be positive, got {f}")));
        }
    }
    let ctx = Ctx {
        out: cfg.output_dir.clone(),
        fps: cli.fps,
        seed: cli.seed,
        cfg,
    };
    match ctx.cfg.parallelism {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(&ctx, cli.command))
        }
        None => dispatch(&ctx, cli.command),
    }
}

fn dispatch(ctx: &Ctx, command: Command) -> CliResult<()> {
    match command {
        Command::Extract { input, rois } => cmd_extract(ctx, &input, &rois),
        Command::Eda { input, roi, method } => cmd_eda(ctx, &input, &roi, &method),
        Command::Hr { input } => cmd_rate(ctx, &input, true),
        Command::Br { input } => cmd_rate(ctx, &input, false),
        Command::Sweep { sessions } => cmd_sweep(ctx, &sessions),
        Command::Eval {
            estimate,
            reference,
            kind,
        } => cmd_eval(ctx, &estimate, &reference, &kind),
        Command::Synth {
            duration,
            polarity,
            hr_bpm,
            br_bpm,
            render_frames,
        } => cmd_synth(ctx, duration, polarity, hr_bpm, br_bpm, render_frames),
        Command::Report { sweep, sessions } => cmd_report(ctx, &sweep, sessions.as_deref()),
    }
}

impl InputArgs {
    fn paths(&self) -> Vec<&Path> {
        [&self.session, &self.traces, &self.frames, &self.landmarks]
            .into_iter()
            .filter_map(|p| p.as_deref())
            .collect()
    }
}

/// Native-rate traces from whichever input was given.
fn load_input_traces(ctx: &Ctx, input: &InputArgs, command: &str, rois: &[RoiKind]) -> CliResult<Vec<Trace>> {
    if let Some(dir) = &input.session {
        let bundle = io::load_session(dir, ctx.fps)?;
        return Ok(SessionData::from_bundle(bundle, &ctx.cfg.pipeline)?.traces);
    }
    if let Some(path) = &input.traces {
        return Ok(io::load_traces(path, ctx.fps)?);
    }
    match (&input.frames, &input.landmarks) {
        (Some(frames), Some(lm)) => {
            let seq = io::load_frames(frames, ctx.fps)?;
            let track = io::load_landmarks(lm)?;
            Ok(extract_roi_traces(&seq, &track, rois, &ctx.cfg.pipeline)?)
        }
        (Some(_), None) => Err(input_err(format!("{command}: --frames needs --landmarks"))),
        _ => Err(input_err(format!(
            "{command}: no input; pass --session, --traces, or --frames with --landmarks"
        ))),
    }
}

fn cmd_extract(ctx: &Ctx, input: &InputArgs, rois: &[String]) -> CliResult<()> {
    if input.frames.is_none() && input.session.is_none() {
        return Err(input_err("extract: pass --frames with --landmarks, or --session"));
    }
    let rois: Vec<RoiKind> = if rois.is_empty() {
        RoiKind::GEOMETRIC.to_vec()
    } else {
        rois.iter().map(|r| r.parse()).collect::<thermosig::Result<_>>()?
    };
    let traces = match &input.session {
        Some(dir) => {
            let bundle = io::load_session(dir, ctx.fps)?;
            let (Some(seq), Some(track)) = (&bundle.frames, &bundle.landmarks) else {
                return Err(input_err("extract: session has no frames with landmarks"));
            };
            extract_roi_traces(seq, track, &rois, &ctx.cfg.pipeline)?
        }
        None => load_input_traces(ctx, input, "extract", &rois)?,
    };
    let dir = ctx.out_dir()?;
    io::write_traces(&traces, &dir.join("traces.csv"))?;
    ctx.provenance(dir, "extract", &input.paths())?;
    println!("wrote {} traces to {}", traces.len(), dir.join("traces.csv").display());
    Ok(())
}

fn cmd_eda(ctx: &Ctx, input: &InputArgs, roi: &str, method: &str) -> CliResult<()> {
    let roi: RoiKind = roi.parse()?;
    let method: EdaMethod = ctx
        .cfg
        .sweep
        .methods
        .iter()
        .find(|m| m.name().eq_ignore_ascii_case(method))
        .cloned()
        .map_or_else(|| method.parse(), Ok)?;
    let wanted: Vec<RoiKind> = roi.members().map_or_else(|| vec![roi], |m| m.to_vec());
    let traces = load_input_traces(ctx, input, "eda", &wanted)?;
    let traces = to_processing_rate(&traces, &ctx.cfg.pipeline)?;
    let picked = select_rois(&traces, &[roi])?;
    let trend = extract_eda_trend(&picked[0], &method)?;
    let dir = ctx.out_dir()?;
    let path = dir.join(format!("eda_{roi}_{}.csv", method.name()));
    io::write_estimate(&trend, &path)?;
    ctx.provenance(dir, "eda", &input.paths())?;
    println!("wrote {} samples to {}", trend.len(), path.display());
    Ok(())
}

fn cmd_rate(ctx: &Ctx, input: &InputArgs, heart: bool) -> CliResult<()> {
    let name = if heart { "hr" } else { "br" };
    let traces = load_input_traces(ctx, input, name, &RoiKind::GEOMETRIC)?;
    let traces = to_processing_rate(&traces, &ctx.cfg.pipeline)?;
    let out = if heart {
        estimate_hr(&traces, &ctx.cfg.hr)?
    } else {
        estimate_br(&traces, &ctx.cfg.br)?
    };
    let dir = ctx.out_dir()?;
    let path = dir.join(format!("{name}.csv"));
    io::write_estimate(&out.estimate, &path)?;
    ctx.provenance(dir, name, &input.paths())?;
    let missing: Vec<String> = out.missing.iter().map(|r| r.to_string()).collect();
    println!(
        "wrote {} samples to {} ({:.1}% invalid{})",
        out.estimate.len(),
        path.display(),
        100.0 * out.estimate.invalid_fraction(),
        if missing.is_empty() { String::new() } else { format!("; missing {}", missing.join(", ")) }
    );
    Ok(())
}

fn load_sessions(ctx: &Ctx, path: &Path) -> CliResult<Vec<SessionData>> {
    let dirs = io::session_dirs(path)?;
    dirs.iter()
        .map(|d| {
            let bundle = io::load_session(d, ctx.fps)?;
            Ok(SessionData::from_bundle(bundle, &ctx.cfg.pipeline)?)
        })
        .collect()
}

fn cmd_sweep(ctx: &Ctx, sessions: &Path) -> CliResult<()> {
    let data = load_sessions(ctx, sessions)?;
    let result = thermosig::run_sweep(&data, &ctx.cfg)?;
    let dir = ctx.out_dir()?;
    sweep::write_grid_csv(&result, create(&dir.join("grid.csv"))?)?;
    sweep::write_summary_csv(&result, create(&dir.join("summary.csv"))?)?;
    sweep::write_oracle_csv(&result, create(&dir.join("oracle.csv"))?)?;
    sweep::write_rates_csv(&result, create(&dir.join("rates.csv"))?)?;
    write_text(&dir.join("sweep.json"), &(result.to_json()? + "\n"))?;
    ctx.provenance(dir, "sweep", &[sessions])?;
    let failed = result.cells.iter().filter(|c| c.error.is_some()).count();
    println!(
        "{} sessions, {} cells ({} failed) written to {}",
        data.len(),
        result.cells.len(),
        failed,
        dir.display()
    );
    Ok(())
}

fn cmd_eval(ctx: &Ctx, estimate: &Path, reference: &Path, kind: &str) -> CliResult<()> {
    let (bk, units) = match kind {
        "eda" => (BiosignalKind::EdaTrend, "a.u."),
        "hr" => (BiosignalKind::HeartRate, "bpm"),
        _ => (BiosignalKind::BreathingRate, "bpm"),
    };
    let est = io::load_estimate(estimate, bk)?;
    let name = reference.file_stem().and_then(|s| s.to_str()).unwrap_or("reference");
    let reference_sig = io::load_reference(reference, name, units)?;
    let text = if bk == BiosignalKind::EdaTrend {
        pretty(&eda_agreement(&est, &reference_sig)?)
    } else {
        pretty(&rate_agreement(&est, &reference_sig)?)
    };
    print!("{text}");
    if let Some(dir) = &ctx.out {
        fs::create_dir_all(dir).map_err(|e| input_err(format!("{}: {e}", dir.display())))?;
        write_text(&dir.join(format!("eval_{kind}.json")), &text)?;
        ctx.provenance(dir, "eval", &[estimate, reference])?;
    }
    Ok(())
}

fn cmd_synth(
    ctx: &Ctx,
    duration: f64,
    polarity: f64,
    hr_bpm: Option<f64>,
    br_bpm: Option<f64>,
    render: bool,
) -> CliResult<()> {
    let mut spec = SyntheticSpec {
        duration_s: duration,
        seed: ctx.seed.unwrap_or(0),
        ..SyntheticSpec::default()
    };
    if let Some(f) = ctx.fps {
        spec.fps = f;
    }
    spec.eda.polarity = polarity;
    if let Some(b) = hr_bpm {
        spec.cardiac.bpm = RateProfile::Constant(b);
    }
    if let Some(b) = br_bpm {
        spec.resp.bpm = RateProfile::Constant(b);
    }
    let s = synth::gen_session(&spec)?;
    let (frames, landmarks) = if render {
        let rs = RenderSpec {
            width: spec.frame_width,
            height: spec.frame_height,
            seed: spec.seed,
            ..RenderSpec::default()
        };
        let (f, l) = synth::render_frames(&s.traces, &rs)?;
        (Some(f), l)
    } else {
        (None, s.landmarks)
    };
    let mut references = s.references;
    references.sort_by(|a, b| a.name.cmp(&b.name));
    let bundle = SessionBundle {
        meta: s.meta,
        frames,
        landmarks: Some(landmarks),
        traces: Some(s.traces),
        references,
    };
    let dir = ctx.out_dir()?;
    io::write_session(&bundle, dir)?;
    write_text(&dir.join("synth_spec.json"), &pretty(&spec))?;
    ctx.provenance(dir, "synth", &[])?;
    println!("synthetic session {} written to {}", bundle.meta.session_id, dir.display());
    Ok(())
}

fn load_sweep(path: &Path) -> CliResult<SweepResult> {
    let file = if path.is_dir() { path.join("sweep.json") } else { path.to_path_buf() };
    let text = fs::read_to_string(&file).map_err(|e| input_err(format!("{}: {e}", file.display())))?;
    Ok(SweepResult::from_json(&text)?)
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn cmd_report(ctx: &Ctx, sweep_path: &Path, sessions: Option<&Path>) -> CliResult<()> {
    let result = load_sweep(sweep_path)?;
    let dir = ctx.out_dir()?;
    sweep::write_summary_csv(&result, create(&dir.join("summary.csv"))?)?;
    sweep::write_oracle_csv(&result, create(&dir.join("oracle.csv"))?)?;
    sweep::write_rates_csv(&result, create(&dir.join("rates.csv"))?)?;
    let refs: Vec<String> = result.summaries.by_config.keys().cloned().collect();
    for r in &refs {
        let tag = file_safe(r);
        write_text(&dir.join(format!("heatmap_{tag}.svg")), &report::heatmap(&result, r))?;
        write_text(
            &dir.join(format!("lags_{tag}.svg")),
            &report::lag_histogram(&result, r, MAX_LAG_S, 10.0),
        )?;
    }
    let mut inputs = vec![sweep_path];
    if let Some(path) = sessions {
        inputs.push(path);
        let data = load_sessions(ctx, path)?;
        for r in &refs {
            let Some((key, _)) = result.best_fixed(r) else { continue };
            let Some((roi, method)) = result
                .rois
                .iter()
                .flat_map(|&roi| result.methods.iter().map(move |m| (roi, m)))
                .find(|(roi, m)| config_key(*roi, m.name()) == key)
            else {
                continue;
            };
            for s in &data {
                let Some(reference) = s.references.iter().find(|x| &x.name == r) else { continue };
                let trend = to_processing_rate(&s.traces, &ctx.cfg.pipeline)
                    .and_then(|t| select_rois(&t, &[roi]))
                    .and_then(|t| extract_eda_trend(&t[0], method));
                let Ok(trend) = trend else { continue };
                let (t, e, rv) = aligned(&trend, reference);
                if t.len() < 2 {
                    continue;
                }
                let title = format!("{} {} vs {}", s.meta.session_id, key, r);
                let name = format!("trend_{}_{}.svg", file_safe(&s.meta.session_id), file_safe(r));
                write_text(&dir.join(name), &report::trend_overlay(&title, &t, &e, &rv))?;
            }
        }
    }
    ctx.provenance(dir, "report", &inputs)?;
    println!("report for {} references written to {}", refs.len(), dir.display());
    Ok(())
}

fn aligned(est: &Estimate, reference: &thermosig::ReferenceSignal) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (mut t, mut e, mut r) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..est.len() {
        if !est.valid[i] {
            continue;
        }
        if let Some(v) = reference.value_at(est.time(i)) {
            t.push(est.time(i));
            e.push(est.values[i]);
            r.push(v);
        }
    }
    (t, e, r)
}
