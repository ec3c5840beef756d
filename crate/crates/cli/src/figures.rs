//! The three experiment panels: interval estimates against n, log-log bias
//! and variance, and log-log absolute cross-covariance with its fitted slope.

use bifractal::montecarlo::{RateFit, Scale};
use bifractal::ExperimentSummary;

use crate::svg::{HLine, Interval, Plot, Series, Style, BLUE, GREY, ORANGE};

const GREEN: &str = "#2a8a3e";
const RED: &str = "#b02a37";

fn symbol(scale: Scale) -> &'static str {
    match scale {
        Scale::Nu => "nu",
        Scale::Alpha => "alpha",
    }
}

fn slope_text(fit: &Option<RateFit>) -> String {
    match fit {
        Some(f) => format!("{:.3}", f.slope),
        None => "n/a".into(),
    }
}

pub fn intervals(summary: &ExperimentSummary, case: &str) -> Plot {
    let sym = symbol(summary.scale);
    let ns: Vec<usize> = summary.per_n.iter().map(|s| s.n).collect();
    let gap = match (ns.first(), ns.last()) {
        (Some(a), Some(b)) if b > a => (b - a) as f64 * 0.008,
        _ => 2.0,
    };
    let mut plot = Plot {
        title: format!("{case}: 95% intervals for {sym}11 and {sym}22"),
        x_label: "n".into(),
        y_label: format!("{sym} estimate"),
        ..Plot::default()
    };
    for (k, color) in [(0, BLUE), (1, ORANGE)] {
        let offset = if k == 0 { -gap } else { gap };
        for s in &summary.per_n {
            let c = &s.components[k];
            plot.intervals.push(Interval {
                x: s.n as f64 + offset,
                low: c.ci_low,
                mid: c.mean,
                high: c.ci_high,
                color,
            });
        }
        plot.hlines.push(HLine {
            y: summary.truth[k],
            color,
            label: format!("true {sym}{0}{0} = {1}", k + 1, summary.truth[k]),
        });
    }
    plot.notes.push(format!(
        "coverage {}/{} and {}/{}",
        summary.coverage(1),
        ns.len(),
        summary.coverage(2),
        ns.len()
    ));
    plot
}

pub fn bias_variance(summary: &ExperimentSummary, case: &str) -> Plot {
    let sym = symbol(summary.scale);
    let series = |f: &dyn Fn(usize) -> f64| -> Vec<(f64, f64)> {
        summary
            .per_n
            .iter()
            .enumerate()
            .map(|(i, s)| (s.n as f64, f(i)))
            .collect()
    };
    let row = |i: usize| &summary.per_n[i];
    let sl = &summary.slopes;
    Plot {
        title: format!("{case}: bias and variance"),
        x_label: "n (log scale)".into(),
        y_label: "|bias|, variance (log scale)".into(),
        x_log: true,
        y_log: true,
        series: vec![
            Series {
                label: format!("|bias| {sym}11"),
                color: BLUE,
                style: Style::MarkersLine,
                points: series(&|i| row(i).components[0].bias.abs()),
            },
            Series {
                label: format!("|bias| {sym}22"),
                color: ORANGE,
                style: Style::MarkersLine,
                points: series(&|i| row(i).components[1].bias.abs()),
            },
            Series {
                label: format!("variance {sym}11"),
                color: GREEN,
                style: Style::MarkersLine,
                points: series(&|i| row(i).components[0].variance),
            },
            Series {
                label: format!("variance {sym}22"),
                color: RED,
                style: Style::MarkersLine,
                points: series(&|i| row(i).components[1].variance),
            },
        ],
        notes: vec![
            format!(
                "slopes: |bias| {} / {}",
                slope_text(&sl.bias[0]),
                slope_text(&sl.bias[1])
            ),
            format!(
                "variance {} / {}",
                slope_text(&sl.variance[0]),
                slope_text(&sl.variance[1])
            ),
        ],
        ..Plot::default()
    }
}

pub fn cross_covariance(summary: &ExperimentSummary, case: &str) -> Plot {
    let sym = symbol(summary.scale);
    let points: Vec<(f64, f64)> = summary
        .per_n
        .iter()
        .map(|s| (s.n as f64, s.cross_cov.abs()))
        .collect();
    let mut series = vec![Series {
        label: format!("|cov({sym}11, {sym}22)|"),
        color: BLUE,
        style: Style::Markers,
        points: points.clone(),
    }];
    let fit = &summary.slopes.cross_cov;
    let mut notes = Vec::new();
    if let Some(f) = fit {
        let line = points
            .iter()
            .map(|&(n, _)| (n, (f.intercept + f.slope * n.ln()).exp()))
            .collect();
        series.push(Series {
            label: "log-log fit".into(),
            color: GREY,
            style: Style::DashedLine,
            points: line,
        });
        notes.push(format!(
            "fitted slope {:.3} (R^2 = {:.3})",
            f.slope, f.r_squared
        ));
        if !f.dropped.is_empty() {
            notes.push(format!("dropped n = {:?}", f.dropped));
        }
    } else {
        notes.push("fitted slope n/a".into());
    }
    Plot {
        title: format!("{case}: cross-covariance of the estimates"),
        x_label: "n (log scale)".into(),
        y_label: "|cross-covariance| (log scale)".into(),
        x_log: true,
        y_log: true,
        series,
        notes,
        ..Plot::default()
    }
}
