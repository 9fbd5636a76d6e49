//! Minimal static SVG renderer for [`Plot`]: axes with ticks, points with
//! error bars, lines, step curves and a legend.

use sivsim::config::format_number;
use sivsim::experiment::{Plot, Series, Style};
use std::fmt::Write;

const W: f64 = 900.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
/// Space right of the frame, holding the legend.
const RIGHT: f64 = 230.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// One plot axis: data range and mapping onto a pixel interval.
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
    p0: f64,
    p1: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool, p0: f64, p1: f64) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = if log { (1.0, 10.0) } else { (0.0, 1.0) };
        }
        if log {
            (lo, hi) = (lo.log10(), hi.log10());
        }
        if hi - lo < 1e-12 * (1.0 + lo.abs()) {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        let pad = 0.04 * (hi - lo);
        Self {
            lo: lo - pad,
            hi: hi + pad,
            log,
            p0,
            p1,
        }
    }

    fn to_px(&self, v: f64) -> Option<f64> {
        let u = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        u.is_finite().then(|| self.p0 + (u - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0))
    }

    /// Tick positions in data units.
    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            if b >= a {
                let step = ((b - a) / 8 + 1) as usize;
                return (a..=b).step_by(step).map(|e| 10f64.powi(e)).collect();
            }
            // less than a decade: fall back to linear ticks in value space
            return linear_ticks(10f64.powf(self.lo), 10f64.powf(self.hi));
        }
        linear_ticks(self.lo, self.hi)
    }
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        // snap values like 3e-17 to zero
        out.push(if t.abs() < 1e-9 * step { 0.0 } else { t });
        t += step;
    }
    out
}

/// Tick label with enough digits to tell ticks `step` apart.
fn label(v: f64, step: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e4).contains(&a) {
        let digits = (a.log10().floor() - step.abs().log10().floor()).clamp(0.0, 12.0) as usize;
        let s = format!("{v:.digits$e}");
        let (m, e) = s.split_once('e').expect("exponent form");
        let m = if m.contains('.') { m.trim_end_matches('0').trim_end_matches('.') } else { m };
        return format!("{m}e{e}");
    }
    format_number((v * 1e6).round() / 1e6)
}

/// Distance to the neighbouring tick (log ticks: the value itself).
fn spacing(ticks: &[f64], t: f64) -> f64 {
    match ticks {
        [a, b, ..] if (b / a).abs() < 9.99 || a.signum() != b.signum() => b - a,
        _ => t,
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn path(points: &[(f64, f64)]) -> String {
    let mut d = String::new();
    for (i, (x, y)) in points.iter().enumerate() {
        let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, x, y);
    }
    d
}

fn draw_series(out: &mut String, s: &Series, color: &str, xa: &Axis, ya: &Axis) {
    let pts: Vec<Option<(f64, f64)>> = s.x.iter().zip(&s.y).map(|(x, y)| Some((xa.to_px(*x)?, ya.to_px(*y)?))).collect();
    match s.style {
        Style::Points | Style::OpenPoints => {
            for (i, p) in pts.iter().enumerate() {
                let Some((px, py)) = *p else { continue };
                if let Some(e) = s.err.as_ref().and_then(|e| e.get(i)).filter(|e| e.is_finite() && **e > 0.0) {
                    if let (Some(a), Some(b)) = (ya.to_px(s.y[i] - e), ya.to_px(s.y[i] + e)) {
                        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{a:.2}" x2="{px:.2}" y2="{b:.2}" stroke="{color}" stroke-width="1"/>"#);
                    }
                }
                let _ = writeln!(out, "{}", marker(s.style, px, py, color));
            }
        }
        Style::Line | Style::Steps => {
            // break the curve at points that cannot be drawn
            for run in pts.split(Option::is_none) {
                let mut p: Vec<(f64, f64)> = run.iter().flatten().copied().collect();
                if s.style == Style::Steps {
                    p = p
                        .windows(2)
                        .flat_map(|w| [w[0], (w[1].0, w[0].1)])
                        .chain(p.last().copied())
                        .collect();
                }
                if p.len() > 1 {
                    let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path(&p));
                }
            }
        }
    }
}

fn marker(style: Style, x: f64, y: f64, color: &str) -> String {
    if style == Style::OpenPoints {
        format!(r#"<circle cx="{x:.2}" cy="{y:.2}" r="5" fill="none" stroke="{color}" stroke-width="1.5"/>"#)
    } else {
        format!(r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#)
    }
}

/// Colour index per series. With several datasets, a curve that directly
/// follows a dataset (its fit) takes the dataset's colour.
fn colors(series: &[Series]) -> Vec<usize> {
    let grouped = series.iter().filter(|s| s.style == Style::Points).count() > 1;
    let mut out: Vec<usize> = Vec::with_capacity(series.len());
    let mut next = 0;
    for (i, s) in series.iter().enumerate() {
        if grouped && s.style == Style::Line && i > 0 && series[i - 1].style == Style::Points {
            out.push(out[i - 1]);
        } else {
            out.push(next);
            next += 1;
        }
    }
    out
}

pub fn render(plot: &Plot) -> String {
    let xa = Axis::new(plot.series.iter().flat_map(|s| s.x.iter().copied()), plot.log_x, LEFT, W - RIGHT);
    let ya = Axis::new(
        plot.series.iter().flat_map(|s| {
            let e = s.err.clone().unwrap_or_else(|| vec![0.0; s.y.len()]);
            s.y.iter().zip(e).flat_map(|(y, e)| [y - e.max(0.0), y + e.max(0.0)]).collect::<Vec<_>>()
        }),
        plot.log_y,
        H - BOTTOM,
        TOP,
    );
    let mut o = String::new();
    let _ = writeln!(o, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(o, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(o, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(&plot.title));

    let xt = xa.ticks();
    for &t in &xt {
        if let Some(px) = xa.to_px(t) {
            let _ = writeln!(o, r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{}" stroke="#e5e5e5"/>"##, H - BOTTOM);
            let _ = writeln!(o, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, H - BOTTOM + 16.0, label(t, spacing(&xt, t)));
        }
    }
    let yt = ya.ticks();
    for &t in &yt {
        if let Some(py) = ya.to_px(t) {
            let _ = writeln!(o, r##"<line x1="{LEFT}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#e5e5e5"/>"##, W - RIGHT);
            let _ = writeln!(o, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, py + 4.0, label(t, spacing(&yt, t)));
        }
    }
    let _ = writeln!(
        o,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    let _ = writeln!(o, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT) / 2.0, H - 14.0, escape(&plot.x_label));
    let cy = (TOP + H - BOTTOM) / 2.0;
    let _ = writeln!(o, r#"<text x="18" y="{cy}" text-anchor="middle" transform="rotate(-90 18 {cy})">{}</text>"#, escape(&plot.y_label));

    let color = colors(&plot.series);
    for (s, c) in plot.series.iter().zip(&color) {
        draw_series(&mut o, s, COLORS[c % COLORS.len()], &xa, &ya);
    }

    // legend right of the frame
    let lx = W - RIGHT + 14.0;
    for (i, (s, ci)) in plot.series.iter().zip(&color).enumerate() {
        let c = COLORS[ci % COLORS.len()];
        let y = TOP + 10.0 + 16.0 * i as f64;
        match s.style {
            Style::Points | Style::OpenPoints => {
                let _ = writeln!(o, "{}", marker(s.style, lx + 10.0, y - 4.0, c));
            }
            _ => {
                let _ = writeln!(o, r#"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="{c}" stroke-width="1.5"/>"#, y - 4.0, lx + 20.0, y - 4.0);
            }
        }
        let _ = writeln!(o, r#"<text x="{}" y="{y}">{}</text>"#, lx + 26.0, escape(&s.label));
    }
    o.push_str("</svg>\n");
    o
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plot(log: bool, y: Vec<f64>) -> Plot {
        Plot {
            title: "a <b>".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            log_x: log,
            log_y: false,
            series: vec![Series {
                label: "data".into(),
                x: vec![1e-4, 1e-3, 1e-2],
                y,
                err: Some(vec![0.1, 0.1, 0.1]),
                style: Style::Points,
            }],
        }
    }

    #[test]
    fn renders_escaped_document() {
        let s = render(&plot(true, vec![0.1, 0.5, 0.9]));
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("a &lt;b&gt;"));
        assert_eq!(s.matches("<circle").count(), 4);
        assert!(s.contains(r#"width="900""#));
        assert!(s.contains(">1e-3<"));
    }

    #[test]
    fn non_finite_points_are_skipped() {
        let s = render(&plot(false, vec![f64::NAN, 0.5, f64::INFINITY]));
        assert!(!s.contains("NaN") && !s.contains("inf"));
    }

    #[test]
    fn fits_share_their_dataset_colour() {
        let mk = |style| Series {
            label: String::new(),
            x: vec![],
            y: vec![],
            err: None,
            style,
        };
        let two = [mk(Style::Points), mk(Style::Line), mk(Style::Points), mk(Style::Line)];
        assert_eq!(colors(&two), vec![0, 0, 1, 1]);
        assert_eq!(colors(&two[..2]), vec![0, 1]);
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(linear_ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(label(0.6000000000000001, 0.2), "0.6");
        assert_eq!(label(1e-3, 1e-3), "1e-3");
        assert_eq!(label(7.123152e9, 2e3), "7.123152e9");
        assert_eq!(label(2.5e-6, 5e-7), "2.5e-6");
    }
}
