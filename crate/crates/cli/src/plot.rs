//! Static SVG line plots.

use std::path::Path;

use anyhow::{anyhow, Result};
use plotters::prelude::*;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points }
    }
}

/// Reference line `y = C x^slope`, anchored at a data point.
pub struct Guide {
    pub label: String,
    pub slope: f64,
    pub anchor: (f64, f64),
}

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

fn span(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

fn padded_log(lo: f64, hi: f64) -> (f64, f64) {
    if hi <= lo * 1.0001 {
        (lo / 2.0, hi * 2.0)
    } else {
        (lo / 1.3, hi * 1.3)
    }
}

fn padded_lin(lo: f64, hi: f64) -> (f64, f64) {
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 1.0 };
    (lo - pad, hi + pad)
}

fn plot_err<E: std::fmt::Display>(e: E) -> anyhow::Error {
    anyhow!("plot: {e}")
}

/// Log–log plot of `|y|` against `x`; nonpositive or non-finite points are dropped.
pub fn loglog(path: &Path, title: &str, x_label: &str, y_label: &str, series: &[Series], guides: &[Guide]) -> Result<()> {
    let clean: Vec<Series> = series
        .iter()
        .map(|s| {
            let pts = s.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite() && *x > 0.0 && *y != 0.0).map(|&(x, y)| (x, y.abs())).collect();
            Series::new(s.label.clone(), pts)
        })
        .filter(|s: &Series| !s.points.is_empty())
        .collect();
    let (x0, x1) = span(clean.iter().flat_map(|s| s.points.iter().map(|p| p.0))).ok_or_else(|| anyhow!("plot {title}: no positive data"))?;
    let (y0, y1) = span(clean.iter().flat_map(|s| s.points.iter().map(|p| p.1))).ok_or_else(|| anyhow!("plot {title}: no positive data"))?;
    let (x0, x1) = padded_log(x0, x1);
    let (y0, y1) = padded_log(y0, y1);

    let root = SVGBackend::new(path, (720, 520)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(44)
        .y_label_area_size(72)
        .build_cartesian_2d((x0..x1).log_scale(), (y0..y1).log_scale())
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc(x_label).y_desc(y_label).y_label_formatter(&|v| format!("{v:.1e}")).draw().map_err(plot_err)?;

    for (i, s) in clean.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(s.points.clone(), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(s.label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
        chart.draw_series(s.points.iter().map(|&p| Circle::new(p, 3, color.filled()))).map_err(plot_err)?;
    }
    for g in guides {
        let (ax, ay) = g.anchor;
        if !(ax > 0.0 && ay.abs() > 0.0 && g.slope.is_finite()) {
            continue;
        }
        let at = |x: f64| ay.abs() * (x / ax).powf(g.slope);
        let line = vec![(x0, at(x0)), (x1, at(x1))];
        chart
            .draw_series(LineSeries::new(line, BLACK.mix(0.6).stroke_width(1)))
            .map_err(plot_err)?
            .label(g.label.as_str())
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], BLACK.mix(0.6)));
    }
    chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw().map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Plain linear plot, used for band diagrams.
pub fn linear(path: &Path, title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Result<()> {
    let (x0, x1) = span(series.iter().flat_map(|s| s.points.iter().map(|p| p.0))).ok_or_else(|| anyhow!("plot {title}: no data"))?;
    let (y0, y1) = span(series.iter().flat_map(|s| s.points.iter().map(|p| p.1))).ok_or_else(|| anyhow!("plot {title}: no data"))?;
    let (y0, y1) = padded_lin(y0, y1);

    let root = SVGBackend::new(path, (720, 520)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(44)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc(x_label).y_desc(y_label).draw().map_err(plot_err)?;
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(s.points.clone(), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(s.label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw().map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loglog_writes_svg_and_skips_bad_points() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.svg");
        let s = Series::new("norm", vec![(1e-3, 0.1), (1e-2, 0.2), (0.0, 1.0), (0.1, f64::NAN), (0.1, 0.4)]);
        let g = Guide { label: "slope 1/4".into(), slope: 0.25, anchor: (1e-2, 0.2) };
        loglog(&path, "test", "d", "norm", &[s], &[g]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.contains("slope 1/4"));
    }

    #[test]
    fn loglog_without_data_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let s = Series::new("empty", vec![(0.0, 1.0)]);
        assert!(loglog(&dir.path().join("p.svg"), "t", "x", "y", &[s], &[]).is_err());
    }
}
