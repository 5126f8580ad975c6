//! Agreement between estimates and contact references.

use serde::{Deserialize, Serialize};

use crate::dsp::xcorr_normalized;
use crate::error::{Error, Result};
use crate::model::{BiosignalEstimate, ReferenceSignal};
use crate::scalar::Real;

/// Lag window for the cross-correlation search, seconds.
pub const MAX_LAG_S: f64 = 120.0;
/// Minimum overlap for trend agreement, seconds.
pub const MIN_EDA_OVERLAP_S: f64 = 120.0;
/// Minimum number of jointly valid rate samples.
pub const MIN_RATE_SAMPLES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub pcc_abs: f64,
    pub pcc_signed: f64,
    #[serde(with = "crate::scalar::nullable_f64")]
    pub spearman: f64,
    pub r_max: f64,
    /// Optimal lag in seconds; positive when the estimate trails the reference.
    pub tau_star: f64,
    /// Percent of steps whose first differences share a sign.
    #[serde(with = "crate::scalar::nullable_f64")]
    pub trend_agreement: f64,
    pub polarity: Polarity,
    pub n_valid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateAgreement {
    pub mae: f64,
    pub rmse: f64,
    #[serde(with = "crate::scalar::nullable_f64")]
    pub pcc: f64,
    /// Mean of estimate minus reference.
    pub bias: f64,
    pub n_valid: usize,
    /// Fraction of reference-covered time points with a valid estimate.
    pub coverage: f64,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Pearson correlation; `None` when either input is constant or too short.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if !(va > 0.0 && vb > 0.0) {
        return None;
    }
    Some((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two values.
pub fn sample_std(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

fn signs(x: &[f64]) -> Vec<i8> {
    let n = x.len() as f64;
    let m = mean(x);
    let sd = (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
    let eps = 1e-9 * sd;
    x.windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            if d.abs() < eps {
                0
            } else if d > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect()
}

/// Percent of consecutive steps where both signals move the same way;
/// changes below 1e-9 of a signal's standard deviation count as flat.
pub fn trend_agreement(e: &[f64], r: &[f64]) -> f64 {
    let (se, sr) = (signs(e), signs(r));
    if se.is_empty() {
        return f64::NAN;
    }
    let hits = se.iter().zip(&sr).filter(|(a, b)| a == b).count();
    100.0 * hits as f64 / se.len() as f64
}

/// Jointly valid samples of the estimate and the reference interpolated at
/// the estimate's timestamps, plus the number of reference-covered points.
fn align<T: Real>(est: &BiosignalEstimate<T>, reference: &ReferenceSignal) -> (Vec<f64>, Vec<f64>, usize) {
    let (mut e, mut r, mut covered) = (Vec::new(), Vec::new(), 0);
    for i in 0..est.len() {
        if let Some(rv) = reference.value_at(est.time(i)) {
            covered += 1;
            let ev = est.values[i].f64();
            if est.valid[i] && ev.is_finite() && rv.is_finite() {
                e.push(ev);
                r.push(rv);
            }
        }
    }
    (e, r, covered)
}

/// Trend agreement of a 1 Hz estimate with a reference channel.
pub fn eda_agreement<T: Real>(est: &BiosignalEstimate<T>, reference: &ReferenceSignal) -> Result<AgreementReport> {
    let (e, r, _) = align(est, reference);
    let needed = (MIN_EDA_OVERLAP_S * est.rate_hz).ceil() as usize;
    if e.len() < needed {
        return Err(Error::InsufficientOverlap {
            n_valid: e.len(),
            needed,
        });
    }
    agreement_on_aligned(&e, &r, est.rate_hz)
}

/// Agreement metrics on two already aligned series sampled at `rate_hz`.
pub fn agreement_on_aligned(e: &[f64], r: &[f64], rate_hz: f64) -> Result<AgreementReport> {
    if e.len() != r.len() {
        return Err(Error::LengthMismatch {
            what: "aligned series",
            left: e.len(),
            right: r.len(),
        });
    }
    let pcc = pearson(e, r).ok_or_else(|| {
        if pearson(e, e).is_none() {
            Error::ZeroVariance("estimate")
        } else {
            Error::ZeroVariance("reference")
        }
    })?;
    let rho = spearman(e, r).unwrap_or(f64::NAN);
    let max_lag = ((MAX_LAG_S * rate_hz).round() as usize).min(e.len() / 2);
    let xc = xcorr_normalized(e, r, max_lag)?;
    Ok(AgreementReport {
        pcc_abs: pcc.abs(),
        pcc_signed: pcc,
        spearman: rho,
        r_max: xc.r_max,
        tau_star: xc.tau_star as f64 / rate_hz,
        trend_agreement: trend_agreement(e, r),
        polarity: if pcc >= 0.0 { Polarity::Positive } else { Polarity::Negative },
        n_valid: e.len(),
    })
}

/// Error statistics of a rate track against a reference rate channel.
pub fn rate_agreement<T: Real>(est: &BiosignalEstimate<T>, reference: &ReferenceSignal) -> Result<RateAgreement> {
    let (e, r, covered) = align(est, reference);
    if e.len() < MIN_RATE_SAMPLES {
        return Err(Error::InsufficientOverlap {
            n_valid: e.len(),
            needed: MIN_RATE_SAMPLES,
        });
    }
    Ok(rate_stats(&e, &r, covered))
}

fn rate_stats(e: &[f64], r: &[f64], covered: usize) -> RateAgreement {
    let n = e.len() as f64;
    let diff: Vec<f64> = e.iter().zip(r).map(|(a, b)| a - b).collect();
    RateAgreement {
        mae: diff.iter().map(|d| d.abs()).sum::<f64>() / n,
        rmse: (diff.iter().map(|d| d * d).sum::<f64>() / n).sqrt(),
        pcc: pearson(e, r).unwrap_or(f64::NAN),
        bias: diff.iter().sum::<f64>() / n,
        n_valid: e.len(),
        coverage: if covered == 0 { 0.0 } else { e.len() as f64 / covered as f64 },
    }
}
