//! Minimal static SVG charts for reports.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, WIDTH / 2.0, escape(title))
        .unwrap();
    s
}

fn write(path: &Path, body: String) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// One bar per label with an optional ± whisker.
pub struct Bar<'a> {
    pub label: &'a str,
    pub value: f64,
    pub spread: f64,
}

pub fn bar_chart(path: &Path, title: &str, bars: &[Bar<'_>]) -> Result<()> {
    let mut s = header(title);
    let top = bars.iter().map(|b| b.value + b.spread).fold(0.0, f64::max);
    let top = if top > 0.0 { top * 1.1 } else { 1.0 };
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let slot = (WIDTH - 2.0 * MARGIN) / bars.len().max(1) as f64;
    let y = |v: f64| HEIGHT - MARGIN - plot_h * (v.max(0.0) / top);
    writeln!(s, r#"<line x1="{MARGIN}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#, HEIGHT - MARGIN, WIDTH - MARGIN)
        .unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, MARGIN - 4.0, MARGIN, top).unwrap();
    for (i, b) in bars.iter().enumerate() {
        let cx = MARGIN + slot * (i as f64 + 0.5);
        let w = slot * 0.6;
        writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            cx - w / 2.0,
            y(b.value),
            w,
            (HEIGHT - MARGIN) - y(b.value),
            PALETTE[0]
        )
        .unwrap();
        if b.spread > 0.0 {
            writeln!(
                s,
                r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
                y(b.value - b.spread),
                y(b.value + b.spread)
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{cx:.2}" y="{}" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN + 14.0,
            escape(b.label)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    write(path, s)
}

/// 2-D scatter with one colour and marker shape per series.
pub fn scatter(path: &Path, title: &str, series: &[(&str, Vec<[f64; 2]>)]) -> Result<()> {
    let mut s = header(title);
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = |k: usize| if hi[k] > lo[k] { hi[k] - lo[k] } else { 1.0 };
    let map = |p: [f64; 2]| {
        (
            MARGIN + (WIDTH - 2.0 * MARGIN) * (p[0] - lo[0]) / span(0),
            HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (p[1] - lo[1]) / span(1),
        )
    };
    for (k, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for p in points {
            let (x, y) = map(*p);
            if k % 2 == 0 {
                writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{color}"/>"#).unwrap();
            } else {
                writeln!(s, r#"<rect x="{:.2}" y="{:.2}" width="8" height="8" fill="{color}"/>"#, x - 4.0, y - 4.0)
                    .unwrap();
            }
        }
        writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 100.0,
            MARGIN + 14.0 * k as f64,
            escape(name)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    write(path, s)
}
