//! From frames and landmarks to processing-rate ROI traces.

use serde::{Deserialize, Serialize};

use crate::aggregate::{default_aggregation, extract_traces, AggregationKind};
use crate::error::{Error, Result};
use crate::model::{LandmarkTrack, RoiKind, RoiTrace, ThermalFrameSequence};
use crate::resample::ResampleMethod;
use crate::roi::{rois_per_frame, smooth_landmarks, RoiGeometry};
use crate::scalar::Real;

/// Which spatial aggregator each region uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationPolicy {
    /// Gaussian for nose, cheeks and forehead; trimmed for the periorbital regions.
    PerRoi,
    Fixed(AggregationKind),
}

impl AggregationPolicy {
    pub fn for_roi(&self, roi: RoiKind) -> Result<AggregationKind> {
        match self {
            AggregationPolicy::Fixed(k) => Ok(*k),
            AggregationPolicy::PerRoi => match roi.members() {
                Some([a, _]) => default_aggregation(a),
                None => default_aggregation(roi),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// EMA factor for landmark coordinates.
    pub landmark_alpha: f64,
    /// How long a detection is reused for frames without one, seconds.
    pub carry_s: f64,
    pub geometry: RoiGeometry,
    pub aggregation: AggregationPolicy,
    /// Detector-input percentile stretch bounds.
    pub stretch_percentiles: (f64, f64),
    pub processing_hz: f64,
    pub resample: ResampleMethod,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            landmark_alpha: 0.15,
            carry_s: 2.0,
            geometry: RoiGeometry::default(),
            aggregation: AggregationPolicy::PerRoi,
            stretch_percentiles: (2.0, 98.0),
            processing_hz: 30.0,
            resample: ResampleMethod::CubicSpline,
        }
    }
}

/// Native-rate traces for `rois` from frames and raw detections.
pub fn extract_roi_traces<T: Real>(
    seq: &ThermalFrameSequence,
    track: &LandmarkTrack,
    rois: &[RoiKind],
    cfg: &PipelineConfig,
) -> Result<Vec<RoiTrace<T>>> {
    let smooth = smooth_landmarks(track, cfg.landmark_alpha)?;
    let rects = rois_per_frame(
        &smooth,
        seq.len(),
        seq.fps(),
        (seq.width(), seq.height()),
        &cfg.geometry,
        cfg.carry_s,
    )?;
    let kinds = rois
        .iter()
        .map(|&r| Ok((r, cfg.aggregation.for_roi(r)?)))
        .collect::<Result<Vec<_>>>()?;
    extract_traces(seq, &rects, &kinds)
}

/// Resamples every trace to the processing rate (no-op for traces already there).
pub fn to_processing_rate<T: Real>(traces: &[RoiTrace<T>], cfg: &PipelineConfig) -> Result<Vec<RoiTrace<T>>> {
    traces
        .iter()
        .map(|t| {
            if (t.fps - cfg.processing_hz).abs() <= 1e-9 * cfg.processing_hz {
                Ok(t.clone())
            } else {
                t.resampled(cfg.processing_hz, cfg.resample)
            }
        })
        .collect()
}

/// Picks the requested regions from `traces`, building the paired averages
/// from their members when they are not present.
pub fn select_rois<T: Real>(traces: &[RoiTrace<T>], rois: &[RoiKind]) -> Result<Vec<RoiTrace<T>>> {
    let find = |k: RoiKind| traces.iter().find(|t| t.roi == k);
    rois.iter()
        .map(|&k| match (find(k), k.members()) {
            (Some(t), _) => Ok(t.clone()),
            (None, Some([a, b])) => match (find(a), find(b)) {
                (Some(ta), Some(tb)) => RoiTrace::average(k, ta, tb),
                _ => Err(Error::param(format!("cannot build {k}: member traces missing"))),
            },
            (None, None) => Err(Error::param(format!("no trace for {k}"))),
        })
        .collect()
}
