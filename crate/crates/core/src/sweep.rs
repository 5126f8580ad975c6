//! ROI × method evaluation grid over many sessions, with grouped summaries
//! and per-session oracle selection.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cardio::{estimate_br, estimate_hr};
use crate::config::RunConfig;
use crate::eda::{enumerate_methods, extract_eda_trend, EdaMethod};
use crate::error::{Error, Result};
use crate::metrics::{eda_agreement, rate_agreement, sample_std, AgreementReport, Polarity, RateAgreement};
use crate::model::{ReferenceSignal, RoiKind, RoiTrace, SessionMeta};
use crate::io::SessionBundle;
use crate::pipeline::{extract_roi_traces, select_rois, to_processing_rate, PipelineConfig};
use crate::scalar::fmt_f64;

/// Grid definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub rois: Vec<RoiKind>,
    pub methods: Vec<EdaMethod>,
    /// EDA reference channels to score against, when present in a session.
    pub references: Vec<String>,
    /// Also run the HR and BR chains against `HR` / `BR` references.
    pub rates: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            rois: RoiKind::GEOMETRIC.to_vec(),
            methods: enumerate_methods(),
            references: vec!["PEDA".into(), "PP".into(), "PP_NR".into()],
            rates: true,
        }
    }
}

/// Everything the sweep needs from one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionData {
    pub meta: SessionMeta,
    /// ROI traces at their native or processing rate.
    pub traces: Vec<RoiTrace<f64>>,
    pub references: Vec<ReferenceSignal>,
}

impl SessionData {
    /// Uses the bundle's traces when present, otherwise extracts the six
    /// geometric regions from its frames and landmarks.
    pub fn from_bundle(bundle: SessionBundle, cfg: &PipelineConfig) -> Result<Self> {
        let traces = match (bundle.traces, &bundle.frames, &bundle.landmarks) {
            (Some(t), _, _) => t,
            (None, Some(frames), Some(track)) => extract_roi_traces(frames, track, &RoiKind::GEOMETRIC, cfg)?,
            _ => return Err(Error::Empty("session has no traces and no frames with landmarks")),
        };
        Ok(Self {
            meta: bundle.meta,
            traces,
            references: bundle.references,
        })
    }
}

impl From<crate::synth::SyntheticSession> for SessionData {
    fn from(s: crate::synth::SyntheticSession) -> Self {
        Self {
            meta: s.meta,
            traces: s.traces,
            references: s.references,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub session_id: String,
    pub roi: RoiKind,
    pub method: String,
    pub reference: String,
    pub report: Option<AgreementReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCell {
    pub session_id: String,
    /// `HR` or `BR`.
    pub signal: String,
    pub agreement: Option<RateAgreement>,
    pub invalid_fraction: Option<f64>,
    pub error: Option<String>,
}

/// Mean and sample standard deviation over sessions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub n: usize,
    #[serde(with = "crate::scalar::nullable_f64")]
    pub mean: f64,
    #[serde(with = "crate::scalar::nullable_f64")]
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return Self {
                n: 0,
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        Self {
            n: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            std: sample_std(&v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub pcc_abs: Stat,
    pub spearman: Stat,
    pub r_max: Stat,
    pub tau_star: Stat,
    pub trend_agreement: Stat,
    pub positive_fraction: f64,
}

impl ConfigSummary {
    fn of(reports: &[&AgreementReport]) -> Self {
        let col = |f: fn(&AgreementReport) -> f64| Stat::of(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
        let pos = reports.iter().filter(|r| r.polarity == Polarity::Positive).count();
        Self {
            pcc_abs: col(|r| r.pcc_abs),
            spearman: col(|r| r.spearman),
            r_max: col(|r| r.r_max),
            tau_star: col(|r| r.tau_star),
            trend_agreement: col(|r| r.trend_agreement),
            positive_fraction: if reports.is_empty() { f64::NAN } else { pos as f64 / reports.len() as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub mae: Stat,
    pub rmse: Stat,
    pub pcc: Stat,
    pub bias: Stat,
    pub coverage: Stat,
}

/// `reference → config → summary`, configs keyed as `roi/method`.
pub type ByConfig = BTreeMap<String, BTreeMap<String, ConfigSummary>>;
/// `reference → group value → config → summary`.
pub type ByGroup = BTreeMap<String, BTreeMap<String, BTreeMap<String, ConfigSummary>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summaries {
    pub by_config: ByConfig,
    pub by_condition: ByGroup,
    pub by_subject: ByGroup,
    pub by_sex: ByGroup,
    pub by_age_group: ByGroup,
    pub rates: BTreeMap<String, RateSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub session_id: String,
    pub roi: RoiKind,
    pub method: String,
    pub pcc_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub pcc_abs: Stat,
    pub sessions: Vec<OracleEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rois: Vec<RoiKind>,
    pub methods: Vec<EdaMethod>,
    pub references: Vec<String>,
    pub sessions: Vec<SessionMeta>,
    /// Ordered by session, ROI, method, reference.
    pub cells: Vec<GridCell>,
    pub rate_cells: Vec<RateCell>,
    pub summaries: Summaries,
    pub oracle: BTreeMap<String, OracleSummary>,
}

pub fn config_key(roi: RoiKind, method: &str) -> String {
    format!("{roi}/{method}")
}

fn err_string(e: &Error) -> String {
    e.to_string()
}

fn session_cells(s: &SessionData, cfg: &RunConfig) -> (Vec<GridCell>, Vec<RateCell>) {
    let grid = &cfg.sweep;
    let refs: Vec<&ReferenceSignal> = grid
        .references
        .iter()
        .filter_map(|name| s.references.iter().find(|r| &r.name == name))
        .collect();
    let id = &s.meta.session_id;
    let traces = to_processing_rate(&s.traces, &cfg.pipeline);
    let pairs: Vec<(RoiKind, &EdaMethod)> = grid
        .rois
        .iter()
        .flat_map(|&r| grid.methods.iter().map(move |m| (r, m)))
        .collect();
    let cells: Vec<GridCell> = pairs
        .par_iter()
        .flat_map_iter(|&(roi, method)| {
            let trend = traces
                .as_ref()
                .map_err(err_string)
                .and_then(|t| select_rois(t, &[roi]).map_err(|e| err_string(&e)))
                .and_then(|t| extract_eda_trend(&t[0], method).map_err(|e| err_string(&e)));
            refs.iter()
                .map(|r| {
                    let outcome = trend
                        .as_ref()
                        .map_err(Clone::clone)
                        .and_then(|t| eda_agreement(t, r).map_err(|e| err_string(&e)));
                    let (report, error) = match outcome {
                        Ok(rep) => (Some(rep), None),
                        Err(e) => (None, Some(e)),
                    };
                    GridCell {
                        session_id: id.clone(),
                        roi,
                        method: method.name().to_string(),
                        reference: r.name.clone(),
                        report,
                        error,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let mut rate_cells = Vec::new();
    if grid.rates {
        for (signal, is_hr) in [("HR", true), ("BR", false)] {
            let Some(reference) = s.references.iter().find(|r| r.name == signal) else {
                continue;
            };
            let out = traces.as_ref().map_err(err_string).and_then(|t| {
                if is_hr {
                    estimate_hr(t, &cfg.hr)
                } else {
                    estimate_br(t, &cfg.br)
                }
                .map_err(|e| err_string(&e))
            });
            let cell = match out {
                Ok(o) => {
                    let inv = Some(o.estimate.invalid_fraction());
                    match rate_agreement(&o.estimate, reference) {
                        Ok(a) => RateCell {
                            session_id: id.clone(),
                            signal: signal.into(),
                            agreement: Some(a),
                            invalid_fraction: inv,
                            error: None,
                        },
                        Err(e) => RateCell {
                            session_id: id.clone(),
                            signal: signal.into(),
                            agreement: None,
                            invalid_fraction: inv,
                            error: Some(err_string(&e)),
                        },
                    }
                }
                Err(e) => RateCell {
                    session_id: id.clone(),
                    signal: signal.into(),
                    agreement: None,
                    invalid_fraction: None,
                    error: Some(e),
                },
            };
            rate_cells.push(cell);
        }
    }
    (cells, rate_cells)
}

/// Scores every (session, ROI, method, reference) cell. A failing cell
/// records its error and is left out of the summaries; the sweep itself only
/// fails on an empty grid.
pub fn run_sweep(sessions: &[SessionData], cfg: &RunConfig) -> Result<SweepResult> {
    if sessions.is_empty() {
        return Err(Error::Empty("no sessions to sweep"));
    }
    if cfg.sweep.rois.is_empty() || cfg.sweep.methods.is_empty() {
        return Err(Error::Empty("sweep needs at least one ROI and one method"));
    }
    let per_session: Vec<(Vec<GridCell>, Vec<RateCell>)> =
        sessions.par_iter().map(|s| session_cells(s, cfg)).collect();
    let mut cells = Vec::new();
    let mut rate_cells = Vec::new();
    for (c, r) in per_session {
        cells.extend(c);
        rate_cells.extend(r);
    }
    let metas: Vec<SessionMeta> = sessions.iter().map(|s| s.meta.clone()).collect();
    let summaries = summarize(&cells, &rate_cells, &metas);
    let oracle = oracle(&cells, &metas);
    Ok(SweepResult {
        rois: cfg.sweep.rois.clone(),
        methods: cfg.sweep.methods.clone(),
        references: cfg.sweep.references.clone(),
        sessions: metas,
        cells,
        rate_cells,
        summaries,
        oracle,
    })
}

fn group_by(
    cells: &[GridCell],
    metas: &[SessionMeta],
    key: impl Fn(&SessionMeta) -> Option<String>,
) -> ByGroup {
    let by_id: BTreeMap<&str, &SessionMeta> = metas.iter().map(|m| (m.session_id.as_str(), m)).collect();
    let mut acc: BTreeMap<String, BTreeMap<String, BTreeMap<String, Vec<&AgreementReport>>>> = BTreeMap::new();
    for c in cells {
        let (Some(rep), Some(meta)) = (&c.report, by_id.get(c.session_id.as_str())) else {
            continue;
        };
        let Some(g) = key(meta) else { continue };
        acc.entry(c.reference.clone())
            .or_default()
            .entry(g)
            .or_default()
            .entry(config_key(c.roi, &c.method))
            .or_default()
            .push(rep);
    }
    acc.into_iter()
        .map(|(r, groups)| {
            let groups = groups
                .into_iter()
                .map(|(g, cfgs)| (g, cfgs.into_iter().map(|(k, v)| (k, ConfigSummary::of(&v))).collect()))
                .collect();
            (r, groups)
        })
        .collect()
}

/// Recomputes every summary from grid cells.
pub fn summarize(cells: &[GridCell], rate_cells: &[RateCell], metas: &[SessionMeta]) -> Summaries {
    let by_config = group_by(cells, metas, |_| Some(String::new()))
        .into_iter()
        .map(|(r, mut g)| (r, g.remove("").unwrap_or_default()))
        .collect();
    let mut rates = BTreeMap::new();
    for signal in ["HR", "BR"] {
        let ok: Vec<&RateAgreement> = rate_cells
            .iter()
            .filter(|c| c.signal == signal)
            .filter_map(|c| c.agreement.as_ref())
            .collect();
        if ok.is_empty() {
            continue;
        }
        let col = |f: fn(&RateAgreement) -> f64| Stat::of(&ok.iter().map(|a| f(a)).collect::<Vec<_>>());
        rates.insert(
            signal.to_string(),
            RateSummary {
                mae: col(|a| a.mae),
                rmse: col(|a| a.rmse),
                pcc: col(|a| a.pcc),
                bias: col(|a| a.bias),
                coverage: col(|a| a.coverage),
            },
        );
    }
    Summaries {
        by_config,
        by_condition: group_by(cells, metas, |m| Some(m.condition.to_string())),
        by_subject: group_by(cells, metas, |m| Some(m.subject_id.clone())),
        by_sex: group_by(cells, metas, |m| Some(m.sex.to_string())),
        by_age_group: group_by(cells, metas, |m| Some(m.age_group.to_string())),
        rates,
    }
}

/// Best cell per session (highest `pcc_abs`, first in grid order on ties).
pub fn oracle(cells: &[GridCell], metas: &[SessionMeta]) -> BTreeMap<String, OracleSummary> {
    let mut refs: Vec<&str> = cells.iter().map(|c| c.reference.as_str()).collect();
    refs.sort_unstable();
    refs.dedup();
    refs.into_iter()
        .map(|r| {
            let sessions: Vec<OracleEntry> = metas
                .iter()
                .filter_map(|m| {
                    let mut best: Option<(&GridCell, f64)> = None;
                    for c in cells.iter().filter(|c| c.reference == r && c.session_id == m.session_id) {
                        if let Some(rep) = &c.report {
                            if best.is_none_or(|(_, b)| rep.pcc_abs > b) {
                                best = Some((c, rep.pcc_abs));
                            }
                        }
                    }
                    best.map(|(c, v)| OracleEntry {
                        session_id: c.session_id.clone(),
                        roi: c.roi,
                        method: c.method.clone(),
                        pcc_abs: v,
                    })
                })
                .collect();
            let stat = Stat::of(&sessions.iter().map(|e| e.pcc_abs).collect::<Vec<_>>());
            (r.to_string(), OracleSummary { pcc_abs: stat, sessions })
        })
        .collect()
}

impl SweepResult {
    /// Number of grid cells scored against `reference`.
    pub fn cell_count(&self, reference: &str) -> usize {
        self.cells.iter().filter(|c| c.reference == reference).count()
    }

    /// Fixed configuration with the highest mean `pcc_abs` against `reference`.
    pub fn best_fixed(&self, reference: &str) -> Option<(String, f64)> {
        let mut best: Option<(String, f64)> = None;
        for (k, s) in self.summaries.by_config.get(reference)? {
            if s.pcc_abs.mean.is_finite() && best.as_ref().is_none_or(|(_, b)| s.pcc_abs.mean > *b) {
                best = Some((k.clone(), s.pcc_abs.mean));
            }
        }
        best
    }

    /// Fraction of sessions with positive polarity for one configuration, per reference.
    pub fn polarity_census(&self, roi: RoiKind, method: &EdaMethod) -> Result<BTreeMap<String, f64>> {
        polarity_census(self, roi, method)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::param(format!("cannot serialize sweep: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format("<sweep json>", e.to_string()))
    }
}

pub fn polarity_census(sweep: &SweepResult, roi: RoiKind, method: &EdaMethod) -> Result<BTreeMap<String, f64>> {
    let mut acc: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for c in &sweep.cells {
        if c.roi != roi || c.method != method.name() {
            continue;
        }
        if let Some(rep) = &c.report {
            let e = acc.entry(c.reference.clone()).or_default();
            e.1 += 1;
            if rep.polarity == Polarity::Positive {
                e.0 += 1;
            }
        }
    }
    if acc.is_empty() {
        return Err(Error::Empty("no scored cells for this configuration"));
    }
    Ok(acc.into_iter().map(|(r, (p, n))| (r, p as f64 / n as f64)).collect())
}

fn csv_err(e: csv::Error) -> Error {
    Error::io("<csv output>", std::io::Error::other(e))
}

/// One row per grid cell.
pub fn write_grid_csv<W: Write>(sweep: &SweepResult, out: W) -> Result<()> {
    let by_id: BTreeMap<&str, &SessionMeta> =
        sweep.sessions.iter().map(|m| (m.session_id.as_str(), m)).collect();
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "session_id",
        "subject_id",
        "condition",
        "sex",
        "age_group",
        "roi",
        "method",
        "reference",
        "pcc_abs",
        "pcc_signed",
        "spearman",
        "r_max",
        "tau_star_s",
        "trend_agreement_pct",
        "polarity",
        "n_valid",
        "error",
    ])
    .map_err(csv_err)?;
    for c in &sweep.cells {
        let meta = by_id.get(c.session_id.as_str());
        let mut row = vec![
            c.session_id.clone(),
            meta.map(|m| m.subject_id.clone()).unwrap_or_default(),
            meta.map(|m| m.condition.to_string()).unwrap_or_default(),
            meta.map(|m| m.sex.to_string()).unwrap_or_default(),
            meta.map(|m| m.age_group.to_string()).unwrap_or_default(),
            c.roi.to_string(),
            c.method.clone(),
            c.reference.clone(),
        ];
        match &c.report {
            Some(r) => row.extend([
                fmt_f64(r.pcc_abs),
                fmt_f64(r.pcc_signed),
                fmt_f64(r.spearman),
                fmt_f64(r.r_max),
                fmt_f64(r.tau_star),
                fmt_f64(r.trend_agreement),
                r.polarity.as_str().to_string(),
                r.n_valid.to_string(),
                String::new(),
            ]),
            None => {
                row.extend(std::iter::repeat_n(String::new(), 8));
                row.push(c.error.clone().unwrap_or_default());
            }
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))
}

/// Mean ± std per (reference, roi, method).
pub fn write_summary_csv<W: Write>(sweep: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "reference",
        "config",
        "n",
        "pcc_abs_mean",
        "pcc_abs_std",
        "spearman_mean",
        "r_max_mean",
        "tau_star_mean_s",
        "trend_agreement_mean_pct",
        "positive_fraction",
    ])
    .map_err(csv_err)?;
    for (r, cfgs) in &sweep.summaries.by_config {
        for (k, s) in cfgs {
            w.write_record([
                r.clone(),
                k.clone(),
                s.pcc_abs.n.to_string(),
                fmt_f64(s.pcc_abs.mean),
                fmt_f64(s.pcc_abs.std),
                fmt_f64(s.spearman.mean),
                fmt_f64(s.r_max.mean),
                fmt_f64(s.tau_star.mean),
                fmt_f64(s.trend_agreement.mean),
                fmt_f64(s.positive_fraction),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))
}

/// Per-session best configuration per reference.
pub fn write_oracle_csv<W: Write>(sweep: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["reference", "session_id", "roi", "method", "pcc_abs"])
        .map_err(csv_err)?;
    for (r, o) in &sweep.oracle {
        for e in &o.sessions {
            w.write_record([
                r.clone(),
                e.session_id.clone(),
                e.roi.to_string(),
                e.method.clone(),
                fmt_f64(e.pcc_abs),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))
}

/// HR/BR agreement per session.
pub fn write_rates_csv<W: Write>(sweep: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "session_id",
        "signal",
        "mae",
        "rmse",
        "pcc",
        "bias",
        "n_valid",
        "coverage",
        "invalid_fraction",
        "error",
    ])
    .map_err(csv_err)?;
    for c in &sweep.rate_cells {
        let inv = c.invalid_fraction.map(fmt_f64).unwrap_or_default();
        let row = match &c.agreement {
            Some(a) => vec![
                c.session_id.clone(),
                c.signal.clone(),
                fmt_f64(a.mae),
                fmt_f64(a.rmse),
                fmt_f64(a.pcc),
                fmt_f64(a.bias),
                a.n_valid.to_string(),
                fmt_f64(a.coverage),
                inv,
                String::new(),
            ],
            None => {
                let mut r = vec![c.session_id.clone(), c.signal.clone()];
                r.extend(std::iter::repeat_n(String::new(), 6));
                r.push(inv);
                r.push(c.error.clone().unwrap_or_default());
                r
            }
        };
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))
}
