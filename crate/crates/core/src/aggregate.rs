//! Spatial aggregation: one scalar per ROI patch per frame.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RoiKind, RoiTrace, ThermalFrameSequence};
use crate::roi::{FrameRois, RoiRect};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationKind {
    Mean,
    /// Separable Gaussian centred on the patch, σ = `sigma_factor` × half-width
    /// (and × half-height vertically).
    GaussianWeightedMean { sigma_factor: f64 },
    /// Mean after discarding ⌊`trim_fraction`·n⌋ values from each tail.
    TrimmedMean { trim_fraction: f64 },
    /// Mean of the ⌈`fraction`·n⌉ largest values.
    HottestFractionMean { fraction: f64 },
}

impl AggregationKind {
    pub const GAUSSIAN: AggregationKind = AggregationKind::GaussianWeightedMean { sigma_factor: 0.35 };
    pub const TRIMMED: AggregationKind = AggregationKind::TrimmedMean { trim_fraction: 0.10 };
    pub const HOTTEST: AggregationKind = AggregationKind::HottestFractionMean { fraction: 0.30 };

    pub fn validate(self) -> Result<Self> {
        match self {
            AggregationKind::Mean => {}
            AggregationKind::GaussianWeightedMean { sigma_factor } => {
                if !(sigma_factor > 0.0) {
                    return Err(Error::param("sigma_factor must be > 0"));
                }
            }
            AggregationKind::TrimmedMean { trim_fraction } => {
                if !(trim_fraction > 0.0 && trim_fraction < 0.5) {
                    return Err(Error::param("trim_fraction must be in (0, 0.5)"));
                }
            }
            AggregationKind::HottestFractionMean { fraction } => {
                if !(fraction > 0.0 && fraction <= 1.0) {
                    return Err(Error::param("hottest fraction must be in (0, 1]"));
                }
            }
        }
        Ok(self)
    }

    pub fn name(self) -> &'static str {
        match self {
            AggregationKind::Mean => "mean",
            AggregationKind::GaussianWeightedMean { .. } => "gaussian",
            AggregationKind::TrimmedMean { .. } => "trimmed",
            AggregationKind::HottestFractionMean { .. } => "hottest",
        }
    }

    fn min_pixels(self) -> usize {
        match self {
            AggregationKind::TrimmedMean { .. } | AggregationKind::HottestFractionMean { .. } => 4,
            _ => 1,
        }
    }
}

impl fmt::Display for AggregationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses a short name; parameters take their defaults.
impl FromStr for AggregationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "mean" => AggregationKind::Mean,
            "gaussian" => AggregationKind::GAUSSIAN,
            "trimmed" => AggregationKind::TRIMMED,
            "hottest" => AggregationKind::HOTTEST,
            other => return Err(Error::param(format!("unknown aggregation '{other}'"))),
        })
    }
}

/// Default aggregator per region: Gaussian weighting for nose, cheeks and
/// forehead; trimmed mean for the periorbital regions.
pub fn default_aggregation(roi: RoiKind) -> Result<AggregationKind> {
    match roi {
        RoiKind::Nose | RoiKind::CheekL | RoiKind::CheekR | RoiKind::Forehead => {
            Ok(AggregationKind::GAUSSIAN)
        }
        RoiKind::EyeL | RoiKind::EyeR => Ok(AggregationKind::TRIMMED),
        RoiKind::CheeksAvg | RoiKind::EyesAvg => Err(Error::param(format!(
            "{roi} is a trace-level combination and has no geometric aggregator"
        ))),
    }
}

// Guards against 0.1 * 30 = 3.0000000000000004 style rounding in counts.
const COUNT_EPS: f64 = 1e-9;

/// Reduces a row-major `width`×`height` patch to a scalar.
pub fn aggregate_patch<T: Real>(
    patch: &[T],
    width: usize,
    height: usize,
    kind: AggregationKind,
) -> Result<T> {
    let n = patch.len();
    if n == 0 {
        return Err(Error::Empty("patch"));
    }
    if n != width * height {
        return Err(Error::LengthMismatch {
            what: "patch pixels vs width*height",
            left: n,
            right: width * height,
        });
    }
    if n < kind.min_pixels() {
        return Err(Error::TooFewSamples {
            needed: kind.min_pixels(),
            got: n,
        });
    }
    kind.validate()?;
    let v = match kind {
        AggregationKind::Mean => patch.iter().map(|p| p.f64()).sum::<f64>() / n as f64,
        AggregationKind::GaussianWeightedMean { sigma_factor } => {
            let wx = gaussian_weights(width, sigma_factor);
            let wy = gaussian_weights(height, sigma_factor);
            let mut acc = 0.0;
            for (r, row) in patch.chunks_exact(width).enumerate() {
                let s: f64 = row.iter().zip(&wx).map(|(p, w)| p.f64() * w).sum();
                acc += wy[r] * s;
            }
            let total = wx.iter().sum::<f64>() * wy.iter().sum::<f64>();
            let (lo, hi) = min_max(patch);
            (acc / total).clamp(lo, hi)
        }
        AggregationKind::TrimmedMean { trim_fraction } => {
            let k = (trim_fraction * n as f64 + COUNT_EPS).floor() as usize;
            let mut s: Vec<f64> = patch.iter().map(|p| p.f64()).collect();
            s.sort_by(f64::total_cmp);
            let kept = &s[k..n - k];
            kept.iter().sum::<f64>() / kept.len() as f64
        }
        AggregationKind::HottestFractionMean { fraction } => {
            let k = ((fraction * n as f64 - COUNT_EPS).ceil() as usize).clamp(1, n);
            // descending by value, ties by row-major index
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| patch[b].f64().total_cmp(&patch[a].f64()).then(a.cmp(&b)));
            idx[..k].iter().map(|&i| patch[i].f64()).sum::<f64>() / k as f64
        }
    };
    Ok(T::of(v))
}

fn gaussian_weights(len: usize, sigma_factor: f64) -> Vec<f64> {
    let half = len as f64 / 2.0;
    let sigma = sigma_factor * half;
    (0..len)
        .map(|i| {
            let d = (i as f64 + 0.5 - half) / sigma;
            (-0.5 * d * d).exp()
        })
        .collect()
}

fn min_max<T: Real>(x: &[T]) -> (f64, f64) {
    x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v.f64()), hi.max(v.f64()))
    })
}

/// Copies the pixels under `rect` out of a row-major frame.
pub fn crop<T: Real>(frame: &[u16], frame_width: usize, rect: &RoiRect) -> Vec<T> {
    let mut out = Vec::with_capacity(rect.w * rect.h);
    for row in rect.y..rect.y + rect.h {
        let start = row * frame_width + rect.x;
        out.extend(frame[start..start + rect.w].iter().map(|&p| T::of(p as f64)));
    }
    out
}

/// Builds one trace per requested `(roi, aggregation)` pair from the frames.
///
/// Frames whose rect is missing yield an invalid (NaN) sample. Derived kinds
/// average their two members computed with the requested aggregator.
pub fn extract_traces<T: Real>(
    seq: &ThermalFrameSequence,
    rects: &[FrameRois],
    kinds: &[(RoiKind, AggregationKind)],
) -> Result<Vec<RoiTrace<T>>> {
    if rects.len() != seq.len() {
        return Err(Error::LengthMismatch {
            what: "per-frame ROI rects vs frames",
            left: rects.len(),
            right: seq.len(),
        });
    }
    let geometric = |roi: RoiKind, agg: AggregationKind| -> Result<RoiTrace<T>> {
        let gi = roi.geometric_index().expect("geometric roi");
        let samples: Vec<Result<Option<T>>> = rects
            .par_iter()
            .enumerate()
            .map(|(f, fr)| match &fr[gi] {
                Some(r) => {
                    let patch = crop::<T>(seq.frame(f), seq.width(), r);
                    aggregate_patch(&patch, r.w, r.h, agg).map(Some)
                }
                None => Ok(None),
            })
            .collect();
        let mut values = Vec::with_capacity(samples.len());
        let mut valid = Vec::with_capacity(samples.len());
        for s in samples {
            match s? {
                Some(v) => {
                    values.push(v);
                    valid.push(true);
                }
                None => {
                    values.push(T::nan());
                    valid.push(false);
                }
            }
        }
        RoiTrace::new(roi, agg, seq.fps(), values, valid)
    };

    kinds
        .iter()
        .map(|&(roi, agg)| match roi.members() {
            Some([a, b]) => {
                let ta = geometric(a, agg)?;
                let tb = geometric(b, agg)?;
                RoiTrace::average(roi, &ta, &tb)
            }
            None => geometric(roi, agg),
        })
        .collect()
}
