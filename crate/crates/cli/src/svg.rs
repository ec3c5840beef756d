//! Static SVG figures written by hand.
//!
//! Each figure is 640x420 with a fixed plot frame. Log axes take base-10
//! ticks at decades, adding the 2 and 5 multiples when fewer than two
//! decades fall inside the range. Points that cannot be drawn on a log axis
//! (non-positive values) are skipped. No timestamps or random ids are emitted,
//! so the output is byte-for-byte reproducible.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;

pub const BLUE: &str = "#1f5fa8";
pub const ORANGE: &str = "#d9731a";
pub const GREY: &str = "#555555";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Style {
    Markers,
    MarkersLine,
    DashedLine,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub style: Style,
    pub points: Vec<(f64, f64)>,
}

/// Vertical interval with a centre marker.
#[derive(Debug, Clone)]
pub struct Interval {
    pub x: f64,
    pub low: f64,
    pub mid: f64,
    pub high: f64,
    pub color: &'static str,
}

#[derive(Debug, Clone)]
pub struct HLine {
    pub y: f64,
    pub color: &'static str,
    pub label: String,
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_log: bool,
    pub y_log: bool,
    pub series: Vec<Series>,
    pub intervals: Vec<Interval>,
    pub hlines: Vec<HLine>,
    /// Free text lines drawn in the lower-left corner of the frame.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let vals: Vec<f64> = values
            .filter(|v| v.is_finite() && (!log || *v > 0.0))
            .map(|v| if log { v.log10() } else { v })
            .collect();
        let (mut lo, mut hi) = vals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        let span = hi - lo;
        let pad = if log {
            (0.05 * span).max(0.1)
        } else if span > 0.0 {
            0.05 * span
        } else {
            0.1 * lo.abs().max(1.0)
        };
        Axis {
            lo: lo - pad,
            hi: hi + pad,
            log,
        }
    }

    /// Position in `[0, 1]` along the axis.
    fn frac(&self, v: f64) -> f64 {
        let t = if self.log { v.log10() } else { v };
        (t - self.lo) / (self.hi - self.lo)
    }

    fn drawable(&self, v: f64) -> bool {
        v.is_finite() && (!self.log || v > 0.0)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            log_ticks(self.lo, self.hi)
        } else {
            linear_ticks(self.lo, self.hi)
        }
    }
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|k| k * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last)
        .map(|k| {
            let v = k as f64 * step;
            let v = if v.abs() < step * 1e-9 { 0.0 } else { v };
            (v, format!("{v:.decimals$}"))
        })
        .collect()
}

fn log_label(v: f64) -> String {
    let e = v.log10().floor() as i32;
    if (-3..=4).contains(&e) {
        let decimals = (-e).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:e}")
    }
}

fn log_ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    let decades = |mantissas: &[f64]| -> Vec<f64> {
        let mut out = Vec::new();
        for e in lo.floor() as i32..=hi.ceil() as i32 {
            for &m in mantissas {
                let v = m * 10f64.powi(e);
                let t = v.log10();
                if t >= lo && t <= hi {
                    out.push(v);
                }
            }
        }
        out
    };
    let mut ticks = decades(&[1.0]);
    if ticks.len() < 2 {
        ticks = decades(&[1.0, 2.0, 5.0]);
    }
    ticks.into_iter().map(|v| (v, log_label(v))).collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Plot {
    pub fn render(&self) -> String {
        let xs = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0))
            .chain(self.intervals.iter().map(|i| i.x));
        let ys = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .chain(self.intervals.iter().flat_map(|i| [i.low, i.high]))
            .chain(self.hlines.iter().map(|h| h.y));
        let xa = Axis::fit(xs, self.x_log);
        let ya = Axis::fit(ys, self.y_log);
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let px = |v: f64| LEFT + xa.frac(v) * pw;
        let py = |v: f64| TOP + (1.0 - ya.frac(v)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for (v, label) in xa.ticks() {
            let x = px(v);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e4e4e4"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                TOP + ph,
                TOP + ph + 16.0,
                escape(&label)
            );
        }
        for (v, label) in ya.ticks() {
            let y = py(v);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e4e4e4"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0,
                escape(&label)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for h in self.hlines.iter().filter(|h| ya.drawable(h.y)) {
            let y = py(h.y);
            let _ = writeln!(
                s,
                r#"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-dasharray="6 4"/>"#,
                LEFT + pw,
                h.color
            );
        }
        for i in &self.intervals {
            if !(xa.drawable(i.x) && ya.drawable(i.low) && ya.drawable(i.high)) {
                continue;
            }
            let x = px(i.x);
            let (y0, y1) = (py(i.low), py(i.high));
            let _ = writeln!(
                s,
                r#"<g stroke="{c}"><line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}"/><line x1="{:.2}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}"/><line x1="{:.2}" y1="{y1:.2}" x2="{:.2}" y2="{y1:.2}"/></g>"#,
                x - 4.0,
                x + 4.0,
                x - 4.0,
                x + 4.0,
                c = i.color
            );
            if ya.drawable(i.mid) {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{x:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                    py(i.mid),
                    i.color
                );
            }
        }
        for series in &self.series {
            let pts: Vec<(f64, f64)> = series
                .points
                .iter()
                .filter(|(x, y)| xa.drawable(*x) && ya.drawable(*y))
                .map(|&(x, y)| (px(x), py(y)))
                .collect();
            if series.style != Style::Markers && pts.len() > 1 {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let dash = if series.style == Style::DashedLine {
                    r#" stroke-dasharray="5 3""#
                } else {
                    ""
                };
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{}"{dash}/>"#,
                    path.join(" "),
                    series.color
                );
            }
            if series.style != Style::DashedLine {
                for (x, y) in &pts {
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{}"/>"#,
                        series.color
                    );
                }
            }
        }

        let legend: Vec<(&str, &str)> = self
            .series
            .iter()
            .map(|se| (se.color, se.label.as_str()))
            .chain(self.hlines.iter().map(|h| (h.color, h.label.as_str())))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        for (k, (color, label)) in legend.iter().enumerate() {
            let y = TOP + 16.0 + 16.0 * k as f64;
            let x = LEFT + pw - 190.0;
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{y:.2}">{}</text>"#,
                y - 4.0,
                x + 18.0,
                y - 4.0,
                x + 24.0,
                escape(label)
            );
        }
        for (k, note) in self.notes.iter().enumerate() {
            let y = TOP + ph - 10.0 - 16.0 * (self.notes.len() - 1 - k) as f64;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{y:.2}">{}</text>"#,
                LEFT + 10.0,
                escape(note)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
