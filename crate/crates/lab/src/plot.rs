//! Static SVG line, scatter and histogram plots.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{LabError, LabResult};

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

const SIZE: (u32, u32) = (800, 520);

fn plot_err(e: impl std::fmt::Display) -> LabError {
    LabError::Plot(e.to_string())
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

fn color(i: usize) -> RGBColor {
    const PALETTE: [RGBColor; 6] = [
        RGBColor(31, 119, 180),
        RGBColor(214, 39, 40),
        RGBColor(44, 160, 44),
        RGBColor(148, 103, 189),
        RGBColor(255, 127, 14),
        RGBColor(23, 190, 207),
    ];
    PALETTE[i % PALETTE.len()]
}

/// Lines (or markers when `scatter`) for every series on shared axes.
pub fn xy_plot(path: &Path, title: &str, x_label: &str, y_label: &str, series: &[Series], scatter: bool) -> LabResult<()> {
    let xs = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let ys = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(xs.0..xs.1, ys.0..ys.1)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc(x_label).y_desc(y_label).draw().map_err(plot_err)?;
    for (i, s) in series.iter().enumerate() {
        let c = color(i);
        let pts = s.points.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite());
        let drawn = if scatter {
            chart.draw_series(pts.map(|p| Circle::new(p, 3, c.filled()))).map_err(plot_err)?
        } else {
            chart.draw_series(LineSeries::new(pts, &c)).map_err(plot_err)?
        };
        drawn.label(s.label).legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], c));
    }
    chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw().map_err(plot_err)?;
    root.present().map_err(plot_err)
}

/// Histogram of `values` in `bins` equal bins, with an optional marker line.
pub fn histogram(path: &Path, title: &str, x_label: &str, values: &[f64], bins: usize, marker: Option<f64>) -> LabResult<()> {
    let (lo, hi) = bounds(values.iter().copied().chain(marker));
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u32; bins];
    for v in values.iter().filter(|v| v.is_finite()) {
        counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(1).max(1) as f64 * 1.1;
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(lo..hi, 0.0..top)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc(x_label).y_desc("count").draw().map_err(plot_err)?;
    chart
        .draw_series(counts.iter().enumerate().map(|(i, &c)| {
            let x0 = lo + i as f64 * width;
            Rectangle::new([(x0, 0.0), (x0 + width, c as f64)], color(0).mix(0.7).filled())
        }))
        .map_err(plot_err)?;
    if let Some(x) = marker {
        chart.draw_series(LineSeries::new([(x, 0.0), (x, top)], &color(1))).map_err(plot_err)?;
    }
    root.present().map_err(plot_err)
}
