//! Self-contained SVG charts. Output depends only on the inputs, so files
//! are byte-stable across runs.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const ML: f64 = 60.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Plot area mapping from data space to pixels.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let widen = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = widen(x0, x1);
        let (y0, y1) = widen(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        ML + (x - self.x0) / (self.x1 - self.x0) * (W - ML - MR)
    }

    fn py(&self, y: f64) -> f64 {
        H - MB - (y - self.y0) / (self.y1 - self.y0) * (H - MT - MB)
    }
}

fn open(svg: &mut String, title: &str) {
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(svg, r##"<rect width="{W}" height="{H}" fill="#ffffff"/>"##);
    let _ = write!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        W / 2.0,
        escape(title)
    );
}

fn axes(svg: &mut String, f: &Frame, x_label: &str, y_label: &str, x_ticks: &[(f64, String)], y_ticks: &[(f64, String)]) {
    let (l, r, t, b) = (ML, W - MR, MT, H - MB);
    let _ = write!(
        svg,
        r##"<rect x="{l}" y="{t}" width="{:.1}" height="{:.1}" fill="none" stroke="#333333"/>"##,
        r - l,
        b - t
    );
    for (x, label) in x_ticks {
        let px = f.px(*x);
        let _ = write!(
            svg,
            r##"<line x1="{px:.1}" y1="{b}" x2="{px:.1}" y2="{:.1}" stroke="#333333"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
            b + 5.0,
            b + 18.0,
            escape(label)
        );
    }
    for (y, label) in y_ticks {
        let py = f.py(*y);
        let _ = write!(
            svg,
            r##"<line x1="{:.1}" y1="{py:.1}" x2="{l}" y2="{py:.1}" stroke="#333333"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            l - 5.0,
            l - 8.0,
            py + 4.0,
            escape(label)
        );
    }
    let _ = write!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = write!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(y_label)
    );
}

fn unit_ticks() -> Vec<(f64, String)> {
    (0..=5).map(|i| (i as f64 / 5.0, format!("{:.1}", i as f64 / 5.0))).collect()
}

fn polyline(svg: &mut String, f: &Frame, pts: &[(f64, f64)], stroke: &str, extra: &str) {
    let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", f.px(x), f.py(y))).collect();
    let _ = write!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"{extra}/>"#,
        coords.join(" ")
    );
}

fn legend(svg: &mut String, names: &[String]) {
    for (i, n) in names.iter().enumerate() {
        let y = MT + 14.0 + 16.0 * i as f64;
        let x = W - MR - 170.0;
        let _ = write!(
            svg,
            r#"<line x1="{x}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="3"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            y - 4.0,
            x + 18.0,
            y - 4.0,
            color(i),
            x + 24.0,
            y,
            escape(n)
        );
    }
}

/// Line chart on the unit square; `diagonal` draws the chance line.
pub fn unit_curves(title: &str, x_label: &str, y_label: &str, curves: &[(String, Vec<(f64, f64)>)], diagonal: bool) -> String {
    let f = Frame::new(0.0, 1.0, 0.0, 1.0);
    let mut svg = String::new();
    open(&mut svg, title);
    axes(&mut svg, &f, x_label, y_label, &unit_ticks(), &unit_ticks());
    if diagonal {
        polyline(&mut svg, &f, &[(0.0, 0.0), (1.0, 1.0)], "#999999", r#" stroke-dasharray="4 4""#);
    }
    for (i, (_, pts)) in curves.iter().enumerate() {
        polyline(&mut svg, &f, pts, color(i), "");
    }
    legend(&mut svg, &curves.iter().map(|c| c.0.clone()).collect::<Vec<_>>());
    svg.push_str("</svg>\n");
    svg
}

pub fn roc_svg(curves: &[(String, Vec<(f64, f64)>)]) -> String {
    unit_curves("ROC curve", "False positive rate", "True positive rate", curves, true)
}

/// Precision-recall as a step curve.
pub fn pr_svg(curves: &[(String, Vec<(f64, f64)>)]) -> String {
    let stepped: Vec<(String, Vec<(f64, f64)>)> = curves
        .iter()
        .map(|(n, pts)| {
            let mut s = Vec::with_capacity(2 * pts.len() + 1);
            let mut prev_r = 0.0;
            for &(r, p) in pts {
                s.push((prev_r, p));
                s.push((r, p));
                prev_r = r;
            }
            (n.clone(), s)
        })
        .collect();
    unit_curves("Precision-recall curve", "Recall", "Precision", &stepped, false)
}

/// Scores over trading days with shaded crash windows (inclusive day
/// ranges) and an optional threshold line. `x_labels` places date text.
pub fn timeline_svg(
    title: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
    windows: &[(f64, f64)],
    threshold: Option<f64>,
    x_labels: &[(f64, String)],
    y_range: (f64, f64),
) -> String {
    let xs = series.iter().flat_map(|s| s.1.iter().map(|p| p.0)).chain(windows.iter().flat_map(|w| [w.0, w.1]));
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (x0, x1) = if x0.is_finite() { (x0, x1) } else { (0.0, 1.0) };
    let f = Frame::new(x0, x1, y_range.0, y_range.1);
    let mut svg = String::new();
    open(&mut svg, title);
    for &(a, b) in windows {
        let (pa, pb) = (f.px(a - 0.5).max(ML), f.px(b + 0.5).min(W - MR));
        let _ = write!(
            svg,
            r##"<rect x="{pa:.1}" y="{MT}" width="{:.1}" height="{:.1}" fill="#d62728" fill-opacity="0.15"/>"##,
            (pb - pa).max(1.0),
            H - MT - MB
        );
    }
    let y_ticks: Vec<(f64, String)> = (0..=4)
        .map(|i| {
            let v = y_range.0 + (y_range.1 - y_range.0) * i as f64 / 4.0;
            (v, format!("{v:.2}"))
        })
        .collect();
    axes(&mut svg, &f, "Date", y_label, x_labels, &y_ticks);
    if let Some(g) = threshold {
        polyline(&mut svg, &f, &[(x0, g), (x1, g)], "#555555", r#" stroke-dasharray="6 3""#);
    }
    for (i, (_, pts)) in series.iter().enumerate() {
        polyline(&mut svg, &f, pts, color(i), "");
    }
    let mut names: Vec<String> = series.iter().map(|s| s.0.clone()).collect();
    if !windows.is_empty() {
        names.push("shaded: crash windows".into());
    }
    legend(&mut svg, &names);
    svg.push_str("</svg>\n");
    svg
}

fn bars(title: &str, x_label: &str, y_label: &str, items: &[(String, f64)], note: Option<&str>) -> String {
    let top = items.iter().map(|i| i.1).fold(0.0, f64::max);
    let top = if top > 0.0 { top * 1.1 } else { 1.0 };
    let n = items.len().max(1) as f64;
    let f = Frame::new(0.0, n, 0.0, top);
    let mut svg = String::new();
    open(&mut svg, title);
    let y_ticks: Vec<(f64, String)> = (0..=4).map(|i| (top * i as f64 / 4.0, format!("{:.3}", top * i as f64 / 4.0))).collect();
    let x_ticks: Vec<(f64, String)> = items.iter().enumerate().map(|(i, it)| (i as f64 + 0.5, it.0.clone())).collect();
    axes(&mut svg, &f, x_label, y_label, &x_ticks, &y_ticks);
    let bw = (f.px(1.0) - f.px(0.0)) * 0.7;
    for (i, (_, v)) in items.iter().enumerate() {
        let x = f.px(i as f64 + 0.5) - bw / 2.0;
        let y = f.py(*v);
        let _ = write!(
            svg,
            r#"<rect x="{x:.1}" y="{y:.1}" width="{bw:.1}" height="{:.1}" fill="{}"/>"#,
            f.py(0.0) - y,
            color(0)
        );
    }
    if let Some(n) = note {
        let _ = write!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, W / 2.0, H / 2.0, escape(n));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Labelled bar chart, one bar per item.
pub fn bar_chart_svg(title: &str, y_label: &str, items: &[(String, f64)]) -> String {
    bars(title, "", y_label, items, None)
}

/// Histogram of non-negative integers with `bins` equal-width bins.
pub fn histogram_svg(title: &str, x_label: &str, values: &[usize], bins: usize) -> String {
    let bins = bins.max(1);
    let max = values.iter().copied().max().unwrap_or(0);
    let width = (max / bins + 1).max(1);
    let mut counts = vec![0.0; bins];
    for &v in values {
        counts[(v / width).min(bins - 1)] += 1.0;
    }
    let items: Vec<(String, f64)> = counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (format!("{}", i * width), c))
        .collect();
    let note = values.is_empty().then_some("no matched warnings");
    bars(title, x_label, "Warnings", &items, note)
}

/// Nodes on a circle, coloured by group, with straight edges.
pub fn network_svg(title: &str, labels: &[String], groups: &[usize], edges: &[(usize, usize)]) -> String {
    let n = labels.len().max(1);
    let (cx, cy, r) = (W / 2.0, (H + MT) / 2.0, (H - MT) / 2.0 - 40.0);
    let pos: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64 - std::f64::consts::FRAC_PI_2;
            (cx + r * a.cos(), cy + r * a.sin())
        })
        .collect();
    let mut svg = String::new();
    open(&mut svg, title);
    for &(i, j) in edges {
        let (a, b) = (pos[i], pos[j]);
        let _ = write!(
            svg,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#888888" stroke-opacity="0.6"/>"##,
            a.0, a.1, b.0, b.1
        );
    }
    for (i, label) in labels.iter().enumerate() {
        let (x, y) = pos[i];
        let g = groups.get(i).copied().unwrap_or(0);
        let (tx, ty) = (cx + (x - cx) * 1.13, cy + (y - cy) * 1.13 + 4.0);
        let _ = write!(
            svg,
            r##"<circle cx="{x:.1}" cy="{y:.1}" r="7" fill="{}" stroke="#222222"/><text x="{tx:.1}" y="{ty:.1}" text-anchor="middle" font-size="10">{}</text>"##,
            color(g),
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
