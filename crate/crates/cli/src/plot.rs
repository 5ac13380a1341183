use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use wban_core::sweep::{Metric, Row, RowStatus, Table};
use wban_core::Error;

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(23, 190, 207),
];

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Io(format!("plot: {e}"))
}

/// X coordinate of a row: the swept number, or the point index for
/// non-numeric sweeps.
fn x_of(row: &Row, index: usize) -> f64 {
    row.value.as_number().unwrap_or(index as f64)
}

type Series = BTreeMap<(String, usize), Vec<(f64, f64)>>;

fn collect(table: &Table, metric: Metric, simulated: bool) -> Series {
    let mut out = Series::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for row in table.rows.iter().filter(|r| r.status == RowStatus::Ok) {
        let next = index.len();
        let i = *index.entry(row.value.to_string()).or_insert(next);
        let cells = if simulated { &row.simulated } else { &row.analytical };
        if let Some(y) = cells.get(metric).filter(|y| y.is_finite()) {
            out.entry((row.series.clone(), row.up)).or_default().push((x_of(row, i), y));
        }
    }
    out
}

fn bounds(series: &[&Series]) -> Option<((f64, f64), (f64, f64))> {
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|s| s.values().flatten().copied()).collect();
    let (x0, x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y0, y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if pts.is_empty() {
        return None;
    }
    let pad = |lo: f64, hi: f64| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    Some((pad(x0, x1), pad(y0.min(0.0), y1 * 1.05)))
}

fn chart(table: &Table, metric: Metric, path: &Path) -> Result<bool, Error> {
    let model = collect(table, metric, false);
    let sim = collect(table, metric, true);
    let Some(((x0, x1), (y0, y1))) = bounds(&[&model, &sim]) else {
        return Ok(false);
    };
    let xlabel = table.rows.first().map_or(String::new(), |r| r.parameter.to_string());
    let root = SVGBackend::new(path, (900, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut c = ChartBuilder::on(&root)
        .caption(metric.as_str(), ("sans-serif", 24))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    c.configure_mesh().x_desc(xlabel).y_desc(metric.as_str()).draw().map_err(plot_err)?;
    let thin = |series: &str| series == "basic";
    for ((series, up), pts) in &model {
        let color = PALETTE[*up % PALETTE.len()];
        let style = if thin(series) { color.stroke_width(1) } else { color.stroke_width(2) };
        c.draw_series(LineSeries::new(pts.iter().copied(), style))
            .map_err(plot_err)?
            .label(format!("{series} UP{up}"))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
    }
    for ((_, up), pts) in &sim {
        let color = PALETTE[*up % PALETTE.len()];
        c.draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled()))).map_err(plot_err)?;
    }
    c.configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(true)
}

/// Writes `<stem>_<metric>.svg` for every metric with data; lines are the
/// model, dots the simulation.
pub fn write_charts(table: &Table, stem: &Path) -> Result<Vec<PathBuf>, Error> {
    let mut written = Vec::new();
    for metric in Metric::ALL {
        let mut name = stem.as_os_str().to_owned();
        name.push(format!("_{}.svg", metric.as_str()));
        let path = PathBuf::from(name);
        if chart(table, metric, &path)? {
            written.push(path);
        }
    }
    Ok(written)
}
