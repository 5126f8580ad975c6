//! Static SVG plots. Output depends only on the inputs: fixed decimals, no
//! timestamps.

use std::fmt::Write;

use thermosig::sweep::{config_key, SweepResult};

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// White → dark blue ramp over [0, 1].
fn blue(v: f64) -> String {
    let t = v.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(247.0, 8.0), lerp(251.0, 48.0), lerp(255.0, 107.0))
}

/// Mean `pcc_abs` per (ROI, method) against one reference.
pub fn heatmap(sweep: &SweepResult, reference: &str) -> String {
    let (cw, ch, left, top) = (96.0, 30.0, 90.0, 60.0);
    let width = left + cw * sweep.methods.len() as f64 + 20.0;
    let height = top + ch * sweep.rois.len() as f64 + 20.0;
    let mut s = header(width, height);
    let _ = writeln!(
        s,
        "<text x=\"{left:.0}\" y=\"20\" font-size=\"14\">Mean |PCC| vs {}</text>",
        esc(reference)
    );
    let summary = sweep.summaries.by_config.get(reference);
    for (j, m) in sweep.methods.iter().enumerate() {
        let x = left + cw * (j as f64 + 0.5);
        let _ = writeln!(s, "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>", top - 8.0, m.name());
    }
    for (i, roi) in sweep.rois.iter().enumerate() {
        let y = top + ch * i as f64;
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{roi}</text>",
            left - 8.0,
            y + ch / 2.0 + 4.0
        );
        for (j, m) in sweep.methods.iter().enumerate() {
            let x = left + cw * j as f64;
            let v = summary
                .and_then(|c| c.get(&config_key(*roi, m.name())))
                .map(|c| c.pcc_abs.mean)
                .filter(|v| v.is_finite());
            let (fill, label, ink) = match v {
                Some(v) => (blue(v), format!("{v:.2}"), if v > 0.55 { "white" } else { "black" }),
                None => ("#dddddd".to_string(), "n/a".to_string(), "black"),
            };
            let _ = writeln!(
                s,
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cw:.1}\" height=\"{ch:.1}\" fill=\"{fill}\" stroke=\"white\"/>"
            );
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" fill=\"{ink}\">{label}</text>",
                x + cw / 2.0,
                y + ch / 2.0 + 4.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Histogram of best-lag values (seconds) over every scored cell.
pub fn lag_histogram(sweep: &SweepResult, reference: &str, max_lag_s: f64, bin_s: f64) -> String {
    let taus: Vec<f64> = sweep
        .cells
        .iter()
        .filter(|c| c.reference == reference)
        .filter_map(|c| c.report.as_ref().map(|r| r.tau_star))
        .collect();
    let nbins = ((2.0 * max_lag_s) / bin_s).ceil() as usize;
    let mut counts = vec![0usize; nbins];
    for t in &taus {
        let k = (((t + max_lag_s) / bin_s).floor() as isize).clamp(0, nbins as isize - 1) as usize;
        counts[k] += 1;
    }
    let peak = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let (left, top, pw, ph) = (50.0, 40.0, 600.0, 240.0);
    let mut s = header(left + pw + 30.0, top + ph + 50.0);
    let _ = writeln!(
        s,
        "<text x=\"{left:.0}\" y=\"20\" font-size=\"14\">Best lag vs {} (n = {})</text>",
        esc(reference),
        taus.len()
    );
    let bw = pw / nbins as f64;
    for (k, &c) in counts.iter().enumerate() {
        let h = ph * c as f64 / peak;
        let _ = writeln!(
            s,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"#4477aa\" stroke=\"white\"/>",
            left + bw * k as f64,
            top + ph - h,
            bw
        );
    }
    let _ = writeln!(
        s,
        "<line x1=\"{left:.0}\" y1=\"{:.0}\" x2=\"{:.0}\" y2=\"{:.0}\" stroke=\"black\"/>",
        top + ph,
        left + pw,
        top + ph
    );
    for tick in [-max_lag_s, -max_lag_s / 2.0, 0.0, max_lag_s / 2.0, max_lag_s] {
        let x = left + pw * (tick + max_lag_s) / (2.0 * max_lag_s);
        let _ = writeln!(
            s,
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{tick:.0} s</text>",
            top + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">positive: estimate trails reference</text>",
        left + pw / 2.0,
        top + ph + 38.0
    );
    s.push_str("</svg>\n");
    s
}

fn zscore(x: &[f64]) -> Vec<f64> {
    let n = x.len().max(1) as f64;
    let m = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
    if sd > 0.0 {
        x.iter().map(|v| (v - m) / sd).collect()
    } else {
        vec![0.0; x.len()]
    }
}

fn polyline(t: &[f64], y: &[f64], map: impl Fn(f64, f64) -> (f64, f64), colour: &str) -> String {
    let pts: Vec<String> = t
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let (x, y) = map(a, b);
            format!("{x:.1},{y:.1}")
        })
        .collect();
    format!(
        "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        pts.join(" ")
    )
}

/// Standardized estimate and reference on a shared time axis.
pub fn trend_overlay(title: &str, times: &[f64], estimate: &[f64], reference: &[f64]) -> String {
    let (left, top, pw, ph) = (50.0, 40.0, 700.0, 260.0);
    let mut s = header(left + pw + 30.0, top + ph + 50.0);
    let _ = writeln!(s, "<text x=\"{left:.0}\" y=\"20\" font-size=\"14\">{}</text>", esc(title));
    let (e, r) = (zscore(estimate), zscore(reference));
    let lim = e
        .iter()
        .chain(&r)
        .fold(1.0f64, |a, v| a.max(v.abs()))
        .ceil();
    let (t0, t1) = match (times.first(), times.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        _ => (0.0, 1.0),
    };
    let map = |t: f64, v: f64| (left + pw * (t - t0) / (t1 - t0), top + ph * (0.5 - v / (2.0 * lim)));
    let _ = writeln!(
        s,
        "<rect x=\"{left:.0}\" y=\"{top:.0}\" width=\"{pw:.0}\" height=\"{ph:.0}\" fill=\"none\" stroke=\"#999999\"/>"
    );
    s.push_str(&polyline(times, &r, map, "#222222"));
    s.push_str(&polyline(times, &e, map, "#cc3311"));
    let _ = writeln!(
        s,
        "<text x=\"{left:.0}\" y=\"{:.1}\">{t0:.0} s</text>\n<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{t1:.0} s</text>",
        top + ph + 18.0,
        left + pw,
        top + ph + 18.0
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"#222222\">reference</text>\n<text x=\"{:.1}\" y=\"{:.1}\" fill=\"#cc3311\">estimate</text>",
        left + pw / 2.0 - 80.0,
        top + ph + 38.0,
        left + pw / 2.0 + 20.0,
        top + ph + 38.0
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_endpoints() {
        assert_eq!(blue(0.0), "#f7fbff");
        assert_eq!(blue(1.0), "#08306b");
        assert_eq!(blue(7.0), "#08306b");
    }

    #[test]
    fn overlay_is_well_formed() {
        let t: Vec<f64> = (0..10).map(f64::from).collect();
        let svg = trend_overlay("a<b", &t, &t, &t);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
