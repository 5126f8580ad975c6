//! Shared data model: frame stacks, landmark tracks, ROI traces, biosignal
//! estimates, reference signals and session metadata.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aggregate::AggregationKind;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Ordered stack of 16-bit radiometric frames, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalFrameSequence {
    width: usize,
    height: usize,
    frames: Vec<Vec<u16>>,
    fps: f64,
    timestamps: Option<Vec<f64>>,
}

impl ThermalFrameSequence {
    pub fn new(
        width: usize,
        height: usize,
        frames: Vec<Vec<u16>>,
        fps: f64,
        timestamps: Option<Vec<f64>>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param("frame dimensions must be positive"));
        }
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::param(format!("fps must be positive, got {fps}")));
        }
        let px = width * height;
        if let Some(i) = frames.iter().position(|f| f.len() != px) {
            return Err(Error::LengthMismatch {
                what: "frame pixel count",
                left: frames[i].len(),
                right: px,
            });
        }
        if let Some(ts) = &timestamps {
            if ts.len() != frames.len() {
                return Err(Error::LengthMismatch {
                    what: "timestamps vs frames",
                    left: ts.len(),
                    right: frames.len(),
                });
            }
            if let Some(i) = ts.windows(2).position(|w| !(w[1] > w[0])) {
                return Err(Error::param(format!(
                    "timestamps not strictly increasing at index {}",
                    i + 1
                )));
            }
        }
        Ok(Self {
            width,
            height,
            frames,
            fps,
            timestamps,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, i: usize) -> &[u16] {
        &self.frames[i]
    }

    pub fn frames(&self) -> &[Vec<u16>] {
        &self.frames
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }

    /// Timestamp of frame `i`; uniform grid at the nominal fps when absent.
    pub fn time(&self, i: usize) -> f64 {
        match &self.timestamps {
            Some(ts) => ts[i],
            None => i as f64 / self.fps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

/// Face bounding box, top-left origin, pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

/// One detection: bounding box plus five facial points in the order
/// left eye, right eye, nose tip, left mouth corner, right mouth corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandmarkFrame {
    pub frame_idx: usize,
    pub confidence: f64,
    pub bbox: BBox,
    pub points: [Point; 5],
}

impl LandmarkFrame {
    pub const EYE_L: usize = 0;
    pub const EYE_R: usize = 1;
    pub const NOSE: usize = 2;
    pub const MOUTH_L: usize = 3;
    pub const MOUTH_R: usize = 4;

    pub fn eye_l(&self) -> Point {
        self.points[Self::EYE_L]
    }
    pub fn eye_r(&self) -> Point {
        self.points[Self::EYE_R]
    }
    pub fn nose(&self) -> Point {
        self.points[Self::NOSE]
    }
    pub fn mouth_l(&self) -> Point {
        self.points[Self::MOUTH_L]
    }
    pub fn mouth_r(&self) -> Point {
        self.points[Self::MOUTH_R]
    }

    /// Flattened smoothable coordinates: confidence, bbox, then points.
    pub(crate) fn coords(&self) -> [f64; 15] {
        let mut c = [0.0; 15];
        c[0] = self.confidence;
        c[1] = self.bbox.x;
        c[2] = self.bbox.y;
        c[3] = self.bbox.w;
        c[4] = self.bbox.h;
        for (i, p) in self.points.iter().enumerate() {
            c[5 + 2 * i] = p.x;
            c[6 + 2 * i] = p.y;
        }
        c
    }

    pub(crate) fn with_coords(&self, c: &[f64; 15]) -> LandmarkFrame {
        let mut points = [Point::default(); 5];
        for (i, p) in points.iter_mut().enumerate() {
            *p = Point::new(c[5 + 2 * i], c[6 + 2 * i]);
        }
        LandmarkFrame {
            frame_idx: self.frame_idx,
            confidence: c[0],
            bbox: BBox {
                x: c[1],
                y: c[2],
                w: c[3],
                h: c[4],
            },
            points,
        }
    }
}

/// Per-frame detections, at most one per frame, ordered by frame index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LandmarkTrack {
    entries: Vec<LandmarkFrame>,
}

impl LandmarkTrack {
    /// Builds a track from entries already in frame order with one entry per frame.
    pub fn new(entries: Vec<LandmarkFrame>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if !(e.bbox.w > 0.0 && e.bbox.h > 0.0) {
                return Err(Error::param(format!(
                    "bbox of frame {} has non-positive size",
                    e.frame_idx
                )));
            }
            if i > 0 && e.frame_idx <= entries[i - 1].frame_idx {
                return Err(Error::param(format!(
                    "frame_idx not increasing at entry {i} (frame {})",
                    e.frame_idx
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Builds a track from raw detections in any order, keeping the
    /// highest-confidence detection for each frame.
    pub fn from_detections(mut dets: Vec<LandmarkFrame>) -> Result<Self> {
        // stable: among equal confidences the first-listed detection wins
        dets.sort_by(|a, b| {
            a.frame_idx.cmp(&b.frame_idx).then(
                b.confidence
                    .partial_cmp(&a.confidence)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
        });
        dets.dedup_by_key(|d| d.frame_idx);
        Self::new(dets)
    }

    pub fn entries(&self) -> &[LandmarkFrame] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Facial regions. The last two are trace-level averages of paired regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoiKind {
    Nose,
    EyeL,
    EyeR,
    CheekL,
    CheekR,
    Forehead,
    #[serde(rename = "cheeks")]
    CheeksAvg,
    #[serde(rename = "eyes")]
    EyesAvg,
}

impl RoiKind {
    /// The six regions placed by geometry, in rect-list order.
    pub const GEOMETRIC: [RoiKind; 6] = [
        RoiKind::Nose,
        RoiKind::EyeL,
        RoiKind::EyeR,
        RoiKind::CheekL,
        RoiKind::CheekR,
        RoiKind::Forehead,
    ];

    pub fn is_derived(self) -> bool {
        matches!(self, RoiKind::CheeksAvg | RoiKind::EyesAvg)
    }

    /// Paired members of a derived region.
    pub fn members(self) -> Option<[RoiKind; 2]> {
        match self {
            RoiKind::CheeksAvg => Some([RoiKind::CheekL, RoiKind::CheekR]),
            RoiKind::EyesAvg => Some([RoiKind::EyeL, RoiKind::EyeR]),
            _ => None,
        }
    }

    /// Position in [`RoiKind::GEOMETRIC`]; `None` for derived kinds.
    pub fn geometric_index(self) -> Option<usize> {
        RoiKind::GEOMETRIC.iter().position(|&k| k == self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RoiKind::Nose => "nose",
            RoiKind::EyeL => "eye_l",
            RoiKind::EyeR => "eye_r",
            RoiKind::CheekL => "cheek_l",
            RoiKind::CheekR => "cheek_r",
            RoiKind::Forehead => "forehead",
            RoiKind::CheeksAvg => "cheeks",
            RoiKind::EyesAvg => "eyes",
        }
    }
}

impl fmt::Display for RoiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoiKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "nose" => RoiKind::Nose,
            "eye_l" => RoiKind::EyeL,
            "eye_r" => RoiKind::EyeR,
            "cheek_l" => RoiKind::CheekL,
            "cheek_r" => RoiKind::CheekR,
            "forehead" => RoiKind::Forehead,
            "cheeks" => RoiKind::CheeksAvg,
            "eyes" => RoiKind::EyesAvg,
            other => return Err(Error::param(format!("unknown ROI '{other}'"))),
        })
    }
}

/// Per-ROI scalar series, one sample per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiTrace<T = f64> {
    pub roi: RoiKind,
    pub aggregation: AggregationKind,
    pub fps: f64,
    pub values: Vec<T>,
    pub valid: Vec<bool>,
}

impl<T: Real> RoiTrace<T> {
    pub fn new(
        roi: RoiKind,
        aggregation: AggregationKind,
        fps: f64,
        values: Vec<T>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        if values.len() != valid.len() {
            return Err(Error::LengthMismatch {
                what: "values vs valid mask",
                left: values.len(),
                right: valid.len(),
            });
        }
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::param(format!("fps must be positive, got {fps}")));
        }
        Ok(Self {
            roi,
            aggregation,
            fps,
            values,
            valid,
        })
    }

    /// Trace with every sample valid.
    pub fn from_values(roi: RoiKind, aggregation: AggregationKind, fps: f64, values: Vec<T>) -> Self {
        let valid = vec![true; values.len()];
        Self {
            roi,
            aggregation,
            fps,
            values,
            valid,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn duration_s(&self) -> f64 {
        self.values.len() as f64 / self.fps
    }

    /// Resamples onto a uniform grid at `target_hz`.
    pub fn resampled(&self, target_hz: f64, method: crate::resample::ResampleMethod) -> Result<Self> {
        let out = crate::resample::resample_to_timeline(
            &self.values,
            &self.valid,
            self.fps,
            target_hz,
            method,
        )?;
        Ok(Self {
            roi: self.roi,
            aggregation: self.aggregation,
            fps: out.rate,
            values: out.values,
            valid: out.valid,
        })
    }

    /// Per-sample mean of two traces; a sample is valid only when both are.
    pub fn average(roi: RoiKind, a: &RoiTrace<T>, b: &RoiTrace<T>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                what: "paired traces",
                left: a.len(),
                right: b.len(),
            });
        }
        if (a.fps - b.fps).abs() > 1e-9 * a.fps {
            return Err(Error::param("paired traces have different rates"));
        }
        let half = T::of(0.5);
        let values = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(&x, &y)| (x + y) * half)
            .collect();
        let valid = a.valid.iter().zip(&b.valid).map(|(&x, &y)| x && y).collect();
        Ok(Self {
            roi,
            aggregation: a.aggregation,
            fps: a.fps,
            values,
            valid,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiosignalKind {
    EdaTrend,
    HeartRate,
    BreathingRate,
}

impl BiosignalKind {
    /// Valid physiological range in bpm; `None` for the unitless EDA trend.
    pub fn valid_bpm(self) -> Option<(f64, f64)> {
        match self {
            BiosignalKind::EdaTrend => None,
            BiosignalKind::HeartRate => Some((60.0, 180.0)),
            BiosignalKind::BreathingRate => Some((7.0, 45.0)),
        }
    }
}

/// Output series at a fixed rate (1 Hz throughout the pipeline).
#[derive(Debug, Clone, PartialEq)]
pub struct BiosignalEstimate<T = f64> {
    pub kind: BiosignalKind,
    pub rate_hz: f64,
    pub values: Vec<T>,
    pub valid: Vec<bool>,
    /// Time of the first sample, seconds.
    pub t0: f64,
}

impl<T: Real> BiosignalEstimate<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.rate_hz
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn invalid_fraction(&self) -> f64 {
        if self.is_empty() {
            return 1.0;
        }
        1.0 - self.valid_count() as f64 / self.len() as f64
    }
}

/// Contact ground-truth channel with explicit (possibly jittered) timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSignal {
    pub name: String,
    pub units: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// True when sample spacing is constant to within 1 µs.
    pub uniform: bool,
}

impl ReferenceSignal {
    pub fn new(
        name: impl Into<String>,
        units: impl Into<String>,
        times: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::LengthMismatch {
                what: "reference times vs values",
                left: times.len(),
                right: values.len(),
            });
        }
        if times.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: times.len(),
            });
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::param(format!("time not increasing at row {}", i + 1)));
        }
        let dts: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        let d0 = dts[0];
        let uniform = dts.iter().all(|d| (d - d0).abs() < 1e-6);
        Ok(Self {
            name: name.into(),
            units: units.into(),
            times,
            values,
            uniform,
        })
    }

    /// Uniformly sampled reference starting at `t0`.
    pub fn uniform(
        name: impl Into<String>,
        units: impl Into<String>,
        rate: f64,
        t0: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        let times = (0..values.len()).map(|i| t0 + i as f64 / rate).collect();
        Self::new(name, units, times, values)
    }

    /// Median-spacing sample rate.
    pub fn rate(&self) -> f64 {
        let mut dts: Vec<f64> = self.times.windows(2).map(|w| w[1] - w[0]).collect();
        dts.sort_by(|a, b| a.total_cmp(b));
        1.0 / dts[dts.len() / 2]
    }

    /// Linear interpolation at `t`; `None` outside the sampled span.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let ts = &self.times;
        let (first, last) = (ts[0], ts[ts.len() - 1]);
        if !(t >= first - 1e-9 && t <= last + 1e-9) {
            return None;
        }
        let j = ts.partition_point(|&x| x <= t);
        if j == 0 {
            return Some(self.values[0]);
        }
        if j >= ts.len() {
            return Some(self.values[ts.len() - 1]);
        }
        let (t0, t1) = (ts[j - 1], ts[j]);
        let w = (t - t0) / (t1 - t0);
        Some(self.values[j - 1] * (1.0 - w) + self.values[j] * w)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum Condition {
    /// Practice drive.
    PD,
    /// Normal driving.
    ND,
    /// Cognitive distraction.
    CD,
    /// Emotional distraction.
    ED,
    Other(String),
}

impl From<String> for Condition {
    fn from(s: String) -> Self {
        match s.as_str() {
            "PD" => Condition::PD,
            "ND" => Condition::ND,
            "CD" => Condition::CD,
            "ED" => Condition::ED,
            _ => Condition::Other(s),
        }
    }
}

impl From<Condition> for String {
    fn from(c: Condition) -> Self {
        c.to_string()
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::PD => f.write_str("PD"),
            Condition::ND => f.write_str("ND"),
            Condition::CD => f.write_str("CD"),
            Condition::ED => f.write_str("ED"),
            Condition::Other(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub enum Sex {
    F,
    M,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub enum AgeGroup {
    Young,
    Older,
    #[default]
    Unknown,
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for AgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub session_id: String,
    pub subject_id: String,
    pub condition: Condition,
    #[serde(default)]
    pub sex: Sex,
    #[serde(default)]
    pub age_group: AgeGroup,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(frame_idx: usize, confidence: f64) -> LandmarkFrame {
        LandmarkFrame {
            frame_idx,
            confidence,
            bbox: BBox {
                x: 0.0,
                y: 0.0,
                w: 10.0,
                h: 10.0,
            },
            points: [Point::new(confidence, 1.0); 5],
        }
    }

    #[test]
    fn frame_sequence_rejects_mismatched_frames() {
        let err = ThermalFrameSequence::new(2, 2, vec![vec![0; 4], vec![0; 3]], 7.5, None);
        assert!(matches!(err, Err(Error::LengthMismatch { .. })));
        let err = ThermalFrameSequence::new(2, 2, vec![vec![0; 4]; 2], 7.5, Some(vec![0.0, 0.0]));
        assert!(err.is_err());
        let seq = ThermalFrameSequence::new(2, 2, vec![vec![0; 4]; 3], 7.5, None).unwrap();
        assert!((seq.time(3 - 1) - 2.0 / 7.5).abs() < 1e-15);
    }

    #[test]
    fn detections_keep_highest_confidence() {
        let track =
            LandmarkTrack::from_detections(vec![det(7, 0.4), det(3, 0.8), det(7, 0.9)]).unwrap();
        assert_eq!(track.len(), 2);
        assert_eq!(track.entries()[1].frame_idx, 7);
        assert_eq!(track.entries()[1].confidence, 0.9);
    }

    #[test]
    fn track_rejects_duplicates_and_bad_boxes() {
        assert!(LandmarkTrack::new(vec![det(1, 0.5), det(1, 0.5)]).is_err());
        let mut bad = det(0, 0.5);
        bad.bbox.w = 0.0;
        assert!(LandmarkTrack::new(vec![bad]).is_err());
    }

    #[test]
    fn roi_kind_round_trips_through_str() {
        for k in RoiKind::GEOMETRIC.iter().chain(&[RoiKind::CheeksAvg, RoiKind::EyesAvg]) {
            assert_eq!(k.as_str().parse::<RoiKind>().unwrap(), *k);
        }
        assert!("noseY".parse::<RoiKind>().is_err());
    }

    #[test]
    fn trace_average_requires_both_valid() {
        let a = RoiTrace::new(RoiKind::CheekL, AggregationKind::Mean, 1.0, vec![1.0, 2.0], vec![true, false])
            .unwrap();
        let b = RoiTrace::new(RoiKind::CheekR, AggregationKind::Mean, 1.0, vec![3.0, 4.0], vec![true, true])
            .unwrap();
        let c = RoiTrace::average(RoiKind::CheeksAvg, &a, &b).unwrap();
        assert_eq!(c.values, vec![2.0, 3.0]);
        assert_eq!(c.valid, vec![true, false]);
    }

    #[test]
    fn reference_detects_jitter_and_regressions() {
        let r = ReferenceSignal::uniform("PEDA", "kOhm", 1.0, 0.0, vec![0.0; 600]).unwrap();
        assert!(r.uniform);
        assert!((r.rate() - 1.0).abs() < 1e-12);
        let times: Vec<f64> = (0..100)
            .map(|i| i as f64 + if i % 2 == 0 { 0.005 } else { -0.005 })
            .collect();
        let r = ReferenceSignal::new("HR", "bpm", times, vec![0.0; 100]).unwrap();
        assert!(!r.uniform);
        let mut times: Vec<f64> = (0..50).map(|i| i as f64).collect();
        times[42] = 40.0;
        let err = ReferenceSignal::new("HR", "bpm", times, vec![0.0; 50]).unwrap_err();
        assert!(err.to_string().contains("row 42"), "{err}");
    }

    #[test]
    fn condition_serializes_as_plain_string() {
        let meta = SessionMeta {
            session_id: "T003-CD".into(),
            subject_id: "T003".into(),
            condition: Condition::CD,
            sex: Sex::M,
            age_group: AgeGroup::Young,
        };
        let js = serde_json::to_string(&meta).unwrap();
        assert!(js.contains("\"condition\":\"CD\""), "{js}");
        let back: SessionMeta = serde_json::from_str(&js).unwrap();
        assert_eq!(back, meta);
        let other: Condition = serde_json::from_str("\"BL\"").unwrap();
        assert_eq!(other, Condition::Other("BL".into()));
    }
}
