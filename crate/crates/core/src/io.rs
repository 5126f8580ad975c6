//! File formats: frame stacks, landmark tracks, reference and trace CSVs, and
//! the one-directory-per-session layout.
//!
//! Session directory:
//!
//! ```text
//! meta.json         SessionMeta
//! frames.raw        u16le frame stack, with frames.json sidecar
//! frames/           or a directory of 16-bit PNGs (lexicographic order)
//! landmarks.csv     required with frames
//! traces.csv        pre-extracted ROI traces, alternative to frames
//! refs/<NAME>.csv   time_s,value per reference channel
//! refs/units.json   optional name → units map
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregate::AggregationKind;
use crate::error::{Error, Result};
use crate::model::{
    BBox, BiosignalEstimate, BiosignalKind, LandmarkFrame, LandmarkTrack, Point, ReferenceSignal, RoiKind, RoiTrace,
    SessionMeta, ThermalFrameSequence,
};
use crate::scalar::fmt_f64;

/// Sidecar of a raw `u16le` frame stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSidecar {
    pub width: usize,
    pub height: usize,
    pub count: usize,
    pub dtype: String,
    pub fps: Option<f64>,
}

/// Sidecar for a raw file: `frames.raw` → `frames.json`.
pub fn sidecar_path(raw: &Path) -> PathBuf {
    raw.with_extension("json")
}

/// Loads a raw file (with sidecar) or a directory of 16-bit PNGs.
/// `fps` overrides the sidecar rate and is required for PNG directories
/// without a `frames.json`.
pub fn load_frames(path: &Path, fps: Option<f64>) -> Result<ThermalFrameSequence> {
    if path.is_dir() {
        load_png_dir(path, fps)
    } else {
        load_raw(path, fps)
    }
}

pub fn load_raw(path: &Path, fps: Option<f64>) -> Result<ThermalFrameSequence> {
    let side_path = sidecar_path(path);
    let text = fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
    let side: RawSidecar =
        serde_json::from_str(&text).map_err(|e| Error::format(&side_path, format!("invalid sidecar: {e}")))?;
    if side.dtype != "u16le" {
        return Err(Error::format(&side_path, format!("unsupported dtype '{}', expected u16le", side.dtype)));
    }
    let fps = fps
        .or(side.fps)
        .ok_or_else(|| Error::format(&side_path, "no fps in sidecar and none given"))?;
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let frame_px = side.width * side.height;
    let expected = frame_px * 2 * side.count;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            format!("expected {expected} bytes for {} frames, found {}", side.count, bytes.len()),
        ));
    }
    let frames = bytes
        .chunks_exact(frame_px * 2)
        .map(|f| f.chunks_exact(2).map(|b| u16::from_le_bytes([b[0], b[1]])).collect())
        .collect();
    ThermalFrameSequence::new(side.width, side.height, frames, fps, None)
}

pub fn write_raw(seq: &ThermalFrameSequence, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for f in seq.frames() {
        let bytes: Vec<u8> = f.iter().flat_map(|v| v.to_le_bytes()).collect();
        w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let side = RawSidecar {
        width: seq.width(),
        height: seq.height(),
        count: seq.len(),
        dtype: "u16le".into(),
        fps: Some(seq.fps()),
    };
    let side_path = sidecar_path(path);
    let text = serde_json::to_string_pretty(&side).expect("sidecar serializes");
    fs::write(&side_path, text).map_err(|e| Error::io(&side_path, e))
}

fn png_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    Ok(files)
}

fn read_png16(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dec = png::Decoder::new(BufReader::new(file));
    dec.set_transformations(png::Transformations::IDENTITY);
    let mut reader = dec
        .read_info()
        .map_err(|e| Error::format(path, format!("cannot decode PNG: {e}")))?;
    let info = reader.info();
    if info.bit_depth != png::BitDepth::Sixteen || info.color_type != png::ColorType::Grayscale {
        return Err(Error::format(
            path,
            format!(
                "16-bit required: found {:?}-bit {:?}, expected 16-bit grayscale",
                info.bit_depth, info.color_type
            ),
        ));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let mut buf = vec![0u8; w * h * 2];
    reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(path, format!("cannot decode PNG: {e}")))?;
    Ok((w, h, buf.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])).collect()))
}

pub fn load_png_dir(dir: &Path, fps: Option<f64>) -> Result<ThermalFrameSequence> {
    let files = png_files(dir)?;
    if files.is_empty() {
        return Err(Error::format(dir, "no PNG frames in directory"));
    }
    let side_path = dir.join("frames.json");
    let fps = match fps {
        Some(f) => f,
        None if side_path.exists() => {
            let text = fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::format(&side_path, e.to_string()))?;
            v.get("fps")
                .and_then(|f| f.as_f64())
                .ok_or_else(|| Error::format(&side_path, "missing fps"))?
        }
        None => return Err(Error::format(dir, "frame rate unknown: pass fps or add frames.json")),
    };
    let (width, height, first) = read_png16(&files[0])?;
    let mut frames = vec![first];
    for f in &files[1..] {
        let (w, h, data) = read_png16(f)?;
        if (w, h) != (width, height) {
            return Err(Error::format(
                f,
                format!("frame is {w}x{h}, expected {width}x{height} like {}", files[0].display()),
            ));
        }
        frames.push(data);
    }
    ThermalFrameSequence::new(width, height, frames, fps, None)
}

/// Writes `frame_000000.png`, ... plus a `frames.json` carrying the rate.
pub fn write_png_dir(seq: &ThermalFrameSequence, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for i in 0..seq.len() {
        let path = dir.join(format!("frame_{i:06}.png"));
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut enc = png::Encoder::new(BufWriter::new(file), seq.width() as u32, seq.height() as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Sixteen);
        let bytes: Vec<u8> = seq.frame(i).iter().flat_map(|v| v.to_be_bytes()).collect();
        enc.write_header()
            .and_then(|mut w| w.write_image_data(&bytes))
            .map_err(|e| Error::format(&path, format!("cannot encode PNG: {e}")))?;
    }
    let side_path = dir.join("frames.json");
    let text = serde_json::json!({ "width": seq.width(), "height": seq.height(), "fps": seq.fps() }).to_string();
    fs::write(&side_path, text).map_err(|e| Error::io(&side_path, e))
}

pub const LANDMARK_COLUMNS: [&str; 16] = [
    "frame_idx",
    "conf",
    "bb_x",
    "bb_y",
    "bb_w",
    "bb_h",
    "eye_l_x",
    "eye_l_y",
    "eye_r_x",
    "eye_r_y",
    "nose_x",
    "nose_y",
    "mouth_l_x",
    "mouth_l_y",
    "mouth_r_x",
    "mouth_r_y",
];

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_fail(path: &Path, e: csv::Error) -> Error {
    Error::format(path, e.to_string())
}

fn header_index(path: &Path, headers: &csv::StringRecord, names: &[&str]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| Error::format(path, format!("missing column '{n}'")))
        })
        .collect()
}

/// Data rows are numbered from 1, header excluded.
fn parse_cell(path: &Path, rec: &csv::StringRecord, idx: usize, row: usize, column: &str) -> Result<f64> {
    let cell = rec.get(idx).unwrap_or("");
    cell.parse::<f64>().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        message: format!("not a number: '{cell}'"),
    })
}

/// Duplicate `frame_idx` rows keep the highest-confidence detection.
pub fn load_landmarks(path: &Path) -> Result<LandmarkTrack> {
    let mut rdr = csv_reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_fail(path, e))?.clone();
    let idx = header_index(path, &headers, &LANDMARK_COLUMNS)?;
    let mut dets = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_fail(path, e))?;
        let v: Vec<f64> = LANDMARK_COLUMNS
            .iter()
            .zip(&idx)
            .map(|(name, &i)| parse_cell(path, &rec, i, r + 1, name))
            .collect::<Result<_>>()?;
        if v[0] < 0.0 || v[0].fract() != 0.0 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: r + 1,
                column: "frame_idx".into(),
                message: format!("not a frame index: {}", v[0]),
            });
        }
        dets.push(LandmarkFrame {
            frame_idx: v[0] as usize,
            confidence: v[1],
            bbox: BBox {
                x: v[2],
                y: v[3],
                w: v[4],
                h: v[5],
            },
            points: [
                Point::new(v[6], v[7]),
                Point::new(v[8], v[9]),
                Point::new(v[10], v[11]),
                Point::new(v[12], v[13]),
                Point::new(v[14], v[15]),
            ],
        });
    }
    if dets.is_empty() {
        return Err(Error::format(path, "no landmark rows"));
    }
    LandmarkTrack::from_detections(dets)
}

pub fn write_landmarks(track: &LandmarkTrack, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(LANDMARK_COLUMNS).map_err(|e| csv_fail(path, e))?;
    for e in track.entries() {
        let mut row = vec![
            e.frame_idx.to_string(),
            fmt_f64(e.confidence),
            fmt_f64(e.bbox.x),
            fmt_f64(e.bbox.y),
            fmt_f64(e.bbox.w),
            fmt_f64(e.bbox.h),
        ];
        for p in &e.points {
            row.push(fmt_f64(p.x));
            row.push(fmt_f64(p.y));
        }
        w.write_record(&row).map_err(|e| csv_fail(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `time_s,value` with strictly increasing time.
pub fn load_reference(path: &Path, name: &str, units: &str) -> Result<ReferenceSignal> {
    let mut rdr = csv_reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_fail(path, e))?.clone();
    let idx = header_index(path, &headers, &["time_s", "value"])?;
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_fail(path, e))?;
        times.push(parse_cell(path, &rec, idx[0], r + 1, "time_s")?);
        values.push(parse_cell(path, &rec, idx[1], r + 1, "value")?);
    }
    if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::format(path, format!("time not increasing at row {}", i + 2)));
    }
    ReferenceSignal::new(name, units, times, values).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_reference(reference: &ReferenceSignal, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["time_s", "value"]).map_err(|e| csv_fail(path, e))?;
    for (t, v) in reference.times.iter().zip(&reference.values) {
        w.write_record([fmt_f64(*t), fmt_f64(*v)])
            .map_err(|e| csv_fail(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Column label such as `nose:gaussian:0.35` or `eye_l:mean`.
pub fn trace_column(trace: &RoiTrace<f64>) -> String {
    let param = match trace.aggregation {
        AggregationKind::Mean => None,
        AggregationKind::GaussianWeightedMean { sigma_factor } => Some(sigma_factor),
        AggregationKind::TrimmedMean { trim_fraction } => Some(trim_fraction),
        AggregationKind::HottestFractionMean { fraction } => Some(fraction),
    };
    match param {
        Some(p) => format!("{}:{}:{}", trace.roi, trace.aggregation.name(), fmt_f64(p)),
        None => format!("{}:{}", trace.roi, trace.aggregation.name()),
    }
}

fn parse_trace_column(path: &Path, label: &str) -> Result<(RoiKind, AggregationKind)> {
    let bad = |m: String| Error::format(path, format!("bad trace column '{label}': {m}"));
    let mut parts = label.split(':');
    let roi: RoiKind = parts.next().unwrap_or("").parse().map_err(|e: Error| bad(e.to_string()))?;
    let kind: AggregationKind = match parts.next() {
        Some(k) => k.parse().map_err(|e: Error| bad(e.to_string()))?,
        None => AggregationKind::Mean,
    };
    let kind = match parts.next() {
        None => kind,
        Some(p) => {
            let p: f64 = p.parse().map_err(|_| bad(format!("parameter '{p}' is not a number")))?;
            match kind {
                AggregationKind::Mean => return Err(bad("mean takes no parameter".into())),
                AggregationKind::GaussianWeightedMean { .. } => AggregationKind::GaussianWeightedMean { sigma_factor: p },
                AggregationKind::TrimmedMean { .. } => AggregationKind::TrimmedMean { trim_fraction: p },
                AggregationKind::HottestFractionMean { .. } => AggregationKind::HottestFractionMean { fraction: p },
            }
        }
    };
    if parts.next().is_some() {
        return Err(bad("too many ':' fields".into()));
    }
    Ok((roi, kind))
}

/// Rate from evenly spaced timestamps, snapped to 1e-6 Hz so that values
/// written as `i / fps` read back to the same rate.
fn infer_rate(path: &Path, times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::format(path, "need at least two rows to infer the sample rate"));
    }
    let span = times[times.len() - 1] - times[0];
    if !(span > 0.0) {
        return Err(Error::format(path, "time_s does not advance"));
    }
    let fps = (times.len() - 1) as f64 / span;
    Ok((fps * 1e6).round() / 1e6)
}

/// Traces sharing one time axis; empty cells are invalid samples.
pub fn write_traces(traces: &[RoiTrace<f64>], path: &Path) -> Result<()> {
    let first = traces.first().ok_or(Error::Empty("no traces to write"))?;
    for t in traces {
        if t.len() != first.len() || t.fps != first.fps {
            return Err(Error::param("traces must share length and rate"));
        }
    }
    let mut w = csv_writer(path)?;
    let mut header = vec!["time_s".to_string()];
    header.extend(traces.iter().map(trace_column));
    w.write_record(&header).map_err(|e| csv_fail(path, e))?;
    for i in 0..first.len() {
        let mut row = vec![fmt_f64(i as f64 / first.fps)];
        for t in traces {
            row.push(if t.valid[i] { fmt_f64(t.values[i]) } else { String::new() });
        }
        w.write_record(&row).map_err(|e| csv_fail(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_traces(path: &Path, fps: Option<f64>) -> Result<Vec<RoiTrace<f64>>> {
    let mut rdr = csv_reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_fail(path, e))?.clone();
    if headers.get(0) != Some("time_s") {
        return Err(Error::format(path, "missing column 'time_s'"));
    }
    let cols: Vec<(RoiKind, AggregationKind)> = headers
        .iter()
        .skip(1)
        .map(|h| parse_trace_column(path, h))
        .collect::<Result<_>>()?;
    if cols.is_empty() {
        return Err(Error::format(path, "no trace columns"));
    }
    let mut times = Vec::new();
    let mut values = vec![Vec::new(); cols.len()];
    let mut valid = vec![Vec::new(); cols.len()];
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_fail(path, e))?;
        times.push(parse_cell(path, &rec, 0, r + 1, "time_s")?);
        for c in 0..cols.len() {
            let cell = rec.get(c + 1).unwrap_or("");
            if cell.is_empty() {
                values[c].push(f64::NAN);
                valid[c].push(false);
            } else {
                let v = parse_cell(path, &rec, c + 1, r + 1, &headers[c + 1])?;
                values[c].push(v);
                valid[c].push(v.is_finite());
            }
        }
    }
    let fps = match fps {
        Some(f) => f,
        None => infer_rate(path, &times)?,
    };
    cols.into_iter()
        .zip(values.into_iter().zip(valid))
        .map(|((roi, kind), (v, m))| RoiTrace::new(roi, kind, fps, v, m))
        .collect()
}

/// `time_s,value,valid` with `valid` as 0/1 and an empty value when invalid.
pub fn write_estimate(est: &BiosignalEstimate<f64>, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["time_s", "value", "valid"]).map_err(|e| csv_fail(path, e))?;
    for i in 0..est.len() {
        let value = if est.values[i].is_finite() { fmt_f64(est.values[i]) } else { String::new() };
        w.write_record([fmt_f64(est.time(i)), value, u8::from(est.valid[i]).to_string()])
            .map_err(|e| csv_fail(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads an estimate CSV. A missing `valid` column marks finite values valid.
pub fn load_estimate(path: &Path, kind: BiosignalKind) -> Result<BiosignalEstimate<f64>> {
    let mut rdr = csv_reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_fail(path, e))?.clone();
    let idx = header_index(path, &headers, &["time_s", "value"])?;
    let valid_idx = headers.iter().position(|h| h == "valid");
    let (mut times, mut values, mut valid) = (Vec::new(), Vec::new(), Vec::new());
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_fail(path, e))?;
        times.push(parse_cell(path, &rec, idx[0], r + 1, "time_s")?);
        let cell = rec.get(idx[1]).unwrap_or("");
        let v = if cell.is_empty() { f64::NAN } else { parse_cell(path, &rec, idx[1], r + 1, "value")? };
        let ok = match valid_idx {
            Some(j) => match rec.get(j).unwrap_or("") {
                "1" | "true" => true,
                "0" | "false" => false,
                other => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        row: r + 1,
                        column: "valid".into(),
                        message: format!("expected 0 or 1, found '{other}'"),
                    })
                }
            },
            None => true,
        };
        values.push(v);
        valid.push(ok && v.is_finite());
    }
    let rate_hz = infer_rate(path, &times)?;
    Ok(BiosignalEstimate {
        kind,
        rate_hz,
        values,
        valid,
        t0: times[0],
    })
}

/// Units for the known reference channels; `a.u.` otherwise.
pub fn default_units(name: &str) -> &'static str {
    match name {
        "PEDA" => "kΩ",
        "PP" | "PP_NR" => "°C²",
        "HR" | "BR" => "bpm",
        _ => "a.u.",
    }
}

/// One session on disk: frames with landmarks, or pre-extracted traces.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionBundle {
    pub meta: SessionMeta,
    pub frames: Option<ThermalFrameSequence>,
    pub landmarks: Option<LandmarkTrack>,
    pub traces: Option<Vec<RoiTrace<f64>>>,
    /// Sorted by name.
    pub references: Vec<ReferenceSignal>,
}

/// True if `dir` looks like a session directory.
pub fn is_session_dir(dir: &Path) -> bool {
    dir.join("meta.json").is_file()
}

/// `path` itself if it is a session directory, else its session
/// subdirectories in lexicographic order.
pub fn session_dirs(path: &Path) -> Result<Vec<PathBuf>> {
    if is_session_dir(path) {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| is_session_dir(p))
        .collect();
    if dirs.is_empty() {
        return Err(Error::format(path, "no session directories (meta.json) found"));
    }
    dirs.sort();
    Ok(dirs)
}

/// Loads a session directory. Reference files that are absent are simply not
/// loaded; callers decide whether a missing channel matters.
pub fn load_session(dir: &Path, fps: Option<f64>) -> Result<SessionBundle> {
    let meta_path = dir.join("meta.json");
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: SessionMeta =
        serde_json::from_str(&text).map_err(|e| Error::format(&meta_path, format!("invalid meta: {e}")))?;

    let raw = dir.join("frames.raw");
    let png = dir.join("frames");
    let frames = if raw.is_file() {
        Some(load_raw(&raw, fps)?)
    } else if png.is_dir() {
        Some(load_png_dir(&png, fps)?)
    } else {
        None
    };
    let lm_path = dir.join("landmarks.csv");
    let landmarks = if lm_path.is_file() { Some(load_landmarks(&lm_path)?) } else { None };
    let tr_path = dir.join("traces.csv");
    let traces = if tr_path.is_file() { Some(load_traces(&tr_path, None)?) } else { None };
    if frames.is_none() && traces.is_none() {
        return Err(Error::format(dir, "session has neither frames nor traces.csv"));
    }
    if frames.is_some() && landmarks.is_none() && traces.is_none() {
        return Err(Error::format(dir, "frames need landmarks.csv"));
    }

    let refs_dir = dir.join("refs");
    let mut references = Vec::new();
    if refs_dir.is_dir() {
        let units_path = refs_dir.join("units.json");
        let units: BTreeMap<String, String> = if units_path.is_file() {
            let text = fs::read_to_string(&units_path).map_err(|e| Error::io(&units_path, e))?;
            serde_json::from_str(&text).map_err(|e| Error::format(&units_path, e.to_string()))?
        } else {
            BTreeMap::new()
        };
        let mut files: Vec<PathBuf> = fs::read_dir(&refs_dir)
            .map_err(|e| Error::io(&refs_dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        for f in files {
            let name = f.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let u = units.get(&name).map(String::as_str).unwrap_or(default_units(&name));
            references.push(load_reference(&f, &name, u)?);
        }
    }
    Ok(SessionBundle {
        meta,
        frames,
        landmarks,
        traces,
        references,
    })
}

pub fn write_session(bundle: &SessionBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta_path = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&bundle.meta).expect("meta serializes");
    fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))?;
    if let Some(seq) = &bundle.frames {
        write_raw(seq, &dir.join("frames.raw"))?;
    }
    if let Some(track) = &bundle.landmarks {
        write_landmarks(track, &dir.join("landmarks.csv"))?;
    }
    if let Some(traces) = &bundle.traces {
        write_traces(traces, &dir.join("traces.csv"))?;
    }
    if !bundle.references.is_empty() {
        let refs_dir = dir.join("refs");
        fs::create_dir_all(&refs_dir).map_err(|e| Error::io(&refs_dir, e))?;
        let mut units = BTreeMap::new();
        for r in &bundle.references {
            write_reference(r, &refs_dir.join(format!("{}.csv", r.name)))?;
            units.insert(r.name.clone(), r.units.clone());
        }
        let units_path = refs_dir.join("units.json");
        let text = serde_json::to_string_pretty(&units).expect("units serialize");
        fs::write(&units_path, text).map_err(|e| Error::io(&units_path, e))?;
    }
    Ok(())
}
