//! Landmark stabilisation, ROI geometry and detector-input normalisation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BBox, LandmarkFrame, LandmarkTrack, Point, RoiKind};

/// Axis-aligned, frame-clipped integer rectangle for one geometric region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RoiRect {
    pub roi: RoiKind,
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl RoiRect {
    pub fn overlaps(&self, other: &RoiRect) -> bool {
        self.x < other.x + other.w
            && other.x < self.x + self.w
            && self.y < other.y + other.h
            && other.y < self.y + self.h
    }
}

/// Rects for one frame, indexed like [`RoiKind::GEOMETRIC`]; `None` marks a
/// region that is fully clipped or has no usable detection.
pub type FrameRois = [Option<RoiRect>; 6];

/// Region sizes (fractions of bbox width × height) and placement offsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiGeometry {
    pub nose: (f64, f64),
    pub periorbital: (f64, f64),
    pub cheek: (f64, f64),
    pub forehead: (f64, f64),
    /// Shift of the periorbital centre from the eye point toward the other
    /// eye, as a fraction of the inter-eye distance.
    pub canthus_shift: f64,
    /// Lateral cheek offset away from the midline, fraction of bbox width.
    pub cheek_lateral: f64,
    /// Gap between inter-eye midpoint and forehead rect bottom, fraction of bbox height.
    pub forehead_gap: f64,
}

impl Default for RoiGeometry {
    fn default() -> Self {
        Self {
            nose: (0.30, 0.15),
            periorbital: (0.24, 0.12),
            cheek: (0.20, 0.20),
            forehead: (0.45, 0.18),
            canthus_shift: 0.25,
            cheek_lateral: 0.10,
            forehead_gap: 0.15,
        }
    }
}

/// Exponential smoothing of every landmark coordinate, bbox and confidence:
/// `s_t = alpha * p_t + (1 - alpha) * s_{t-1}`, seeded with the first entry.
pub fn smooth_landmarks(track: &LandmarkTrack, alpha: f64) -> Result<LandmarkTrack> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param(format!("alpha must be in (0, 1], got {alpha}")));
    }
    let entries = track.entries();
    let first = entries.first().ok_or(Error::Empty("landmark track"))?;
    let mut state = first.coords();
    let mut out = Vec::with_capacity(entries.len());
    out.push(*first);
    for e in &entries[1..] {
        let c = e.coords();
        for (s, p) in state.iter_mut().zip(c) {
            *s = alpha * p + (1.0 - alpha) * *s;
        }
        out.push(e.with_coords(&state));
    }
    LandmarkTrack::new(out)
}

fn rasterize(
    roi: RoiKind,
    center: Point,
    w: f64,
    h: f64,
    dims: (usize, usize),
) -> Option<RoiRect> {
    // round half away from zero, then clip
    let x0 = (center.x - w / 2.0).round().max(0.0);
    let x1 = (center.x + w / 2.0).round().min(dims.0 as f64);
    let y0 = (center.y - h / 2.0).round().max(0.0);
    let y1 = (center.y + h / 2.0).round().min(dims.1 as f64);
    if x1 - x0 < 1.0 || y1 - y0 < 1.0 {
        return None;
    }
    Some(RoiRect {
        roi,
        x: x0 as usize,
        y: y0 as usize,
        w: (x1 - x0) as usize,
        h: (y1 - y0) as usize,
    })
}

/// Six region rects for one detection, with the default geometry.
pub fn derive_rois(lf: &LandmarkFrame, dims: (usize, usize)) -> Result<FrameRois> {
    derive_rois_with(lf, dims, &RoiGeometry::default())
}

pub fn derive_rois_with(
    lf: &LandmarkFrame,
    dims: (usize, usize),
    g: &RoiGeometry,
) -> Result<FrameRois> {
    let BBox { w: bw, h: bh, .. } = lf.bbox;
    if !(bw > 0.0 && bh > 0.0) {
        return Err(Error::param("bbox must have positive area"));
    }
    let (el, er) = (lf.eye_l(), lf.eye_r());
    let eye_mid = el.midpoint(er);
    let inner = |eye: Point, other: Point| {
        Point::new(
            eye.x + g.canthus_shift * (other.x - eye.x),
            eye.y + g.canthus_shift * (other.y - eye.y),
        )
    };
    let cheek = |eye: Point, mouth: Point, fallback_dir: f64| {
        let mid = eye.midpoint(mouth);
        let side = mid.x - eye_mid.x;
        let dir = if side.abs() > 1e-12 { side.signum() } else { fallback_dir };
        Point::new(mid.x + dir * g.cheek_lateral * bw, mid.y)
    };
    let forehead_center = Point::new(
        eye_mid.x,
        eye_mid.y - g.forehead_gap * bh - g.forehead.1 * bh / 2.0,
    );

    let centers_sizes = [
        (RoiKind::Nose, lf.nose(), g.nose),
        (RoiKind::EyeL, inner(el, er), g.periorbital),
        (RoiKind::EyeR, inner(er, el), g.periorbital),
        (RoiKind::CheekL, cheek(el, lf.mouth_l(), -1.0), g.cheek),
        (RoiKind::CheekR, cheek(er, lf.mouth_r(), 1.0), g.cheek),
        (RoiKind::Forehead, forehead_center, g.forehead),
    ];
    let mut out: FrameRois = [None; 6];
    for (slot, (roi, c, (fw, fh))) in out.iter_mut().zip(centers_sizes) {
        *slot = rasterize(roi, c, fw * bw, fh * bh, dims);
    }
    Ok(out)
}

/// Per-frame rects for `n_frames` frames. A frame without its own detection
/// reuses the most recent one for up to `carry_s` seconds, after which all its
/// regions are `None`.
pub fn rois_per_frame(
    track: &LandmarkTrack,
    n_frames: usize,
    fps: f64,
    dims: (usize, usize),
    geometry: &RoiGeometry,
    carry_s: f64,
) -> Result<Vec<FrameRois>> {
    let max_age = (carry_s * fps + 1e-9).floor() as usize;
    let entries = track.entries();
    let mut out = Vec::with_capacity(n_frames);
    let mut next = 0;
    let mut current: Option<(usize, FrameRois)> = None;
    for f in 0..n_frames {
        while next < entries.len() && entries[next].frame_idx <= f {
            current = Some((
                entries[next].frame_idx,
                derive_rois_with(&entries[next], dims, geometry)?,
            ));
            next += 1;
        }
        out.push(match &current {
            Some((idx, rois)) if f - idx <= max_age => *rois,
            _ => [None; 6],
        });
    }
    Ok(out)
}

/// Linear-interpolated percentile of sorted data, `p` in [0, 100].
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

/// 8-bit normalisation for detector input: values at or below the `lo_pct`
/// percentile map to 0, at or above `hi_pct` to 255, linear in between.
pub fn percentile_stretch<P: Copy + Into<f64>>(frame: &[P], lo_pct: f64, hi_pct: f64) -> Result<Vec<u8>> {
    if frame.is_empty() {
        return Err(Error::Empty("frame"));
    }
    let mut sorted: Vec<f64> = frame.iter().map(|&p| p.into()).collect();
    sorted.sort_by(f64::total_cmp);
    let lo = percentile_sorted(&sorted, lo_pct);
    let hi = percentile_sorted(&sorted, hi_pct);
    Ok(frame
        .iter()
        .map(|&p| {
            let v: f64 = p.into();
            if v <= lo {
                0
            } else if v >= hi {
                255
            } else {
                (255.0 * (v - lo) / (hi - lo)).round() as u8
            }
        })
        .collect())
}

/// Frontal face layout used by the synthetic renderer: bbox spans the central
/// half of the frame width and 80% of its height.
pub fn canonical_frontal(width: usize, height: usize, frame_idx: usize) -> LandmarkFrame {
    let bbox = BBox {
        x: 0.25 * width as f64,
        y: 0.10 * height as f64,
        w: 0.50 * width as f64,
        h: 0.80 * height as f64,
    };
    let at = |u: f64, v: f64| Point::new(bbox.x + u * bbox.w, bbox.y + v * bbox.h);
    LandmarkFrame {
        frame_idx,
        confidence: 1.0,
        bbox,
        points: [
            at(0.25, 0.35),
            at(0.75, 0.35),
            at(0.50, 0.55),
            at(0.32, 0.78),
            at(0.68, 0.78),
        ],
    }
}
