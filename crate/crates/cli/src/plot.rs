//! Static SVG renders of result tables.

use std::collections::BTreeMap;
use std::path::Path;

use plotters::prelude::*;
use plotters::style::colors::colormaps::ViridisRGB;

use crate::table::ResultTable;
use crate::CliError;

/// Curve overlaid on a heatmap, in the units of its axes.
#[derive(Clone, Debug, PartialEq)]
pub struct Guide {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PlotSpec {
    /// One curve per `ys` column, split further into one curve per distinct
    /// value of `group` when set.
    Line { x: String, ys: Vec<String>, group: Option<String> },
    Heatmap { x: String, y: String, z: String, guides: Vec<Guide> },
}

const SIZE: (u32, u32) = (800, 600);
const PALETTE: [RGBColor; 6] = [
    RGBColor(200, 30, 30),
    RGBColor(30, 60, 200),
    RGBColor(20, 140, 60),
    RGBColor(150, 60, 170),
    RGBColor(220, 130, 0),
    RGBColor(0, 0, 0),
];

fn plot_error<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Output(format!("plot: {e}"))
}

/// `drive_MHz` reads "drive (MHz)".
pub fn axis_label(column: &str) -> String {
    for unit in ["ns", "kHz", "MHz", "GHz"] {
        if let Some(stem) = column.strip_suffix(&format!("_{unit}")) {
            return format!("{stem} ({unit})");
        }
    }
    column.to_string()
}

fn column(table: &ResultTable, name: &str) -> Result<Vec<f64>, CliError> {
    table
        .column(name)
        .ok_or_else(|| CliError::Invalid(format!("table {} has no column '{name}'", table.name)))
}

fn padded(lo: f64, hi: f64) -> std::ops::Range<f64> {
    if hi > lo {
        let pad = 0.02 * (hi - lo);
        (lo - pad)..(hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        (lo - pad)..(hi + pad)
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Renders `table` to an SVG at `path`. Nothing is written on error.
pub fn emit_plot(table: &ResultTable, spec: &PlotSpec, path: &Path) -> Result<(), CliError> {
    if table.rows.is_empty() {
        return Err(CliError::Invalid(format!("table {} is empty; nothing to plot", table.name)));
    }
    table.validate()?;
    match spec {
        PlotSpec::Line { x, ys, group } => line_plot(table, x, ys, group.as_deref(), path),
        PlotSpec::Heatmap { x, y, z, guides } => heatmap(table, x, y, z, guides, path),
    }
}

fn line_plot(table: &ResultTable, x: &str, ys: &[String], group: Option<&str>, path: &Path) -> Result<(), CliError> {
    if ys.is_empty() {
        return Err(CliError::Invalid("line plot needs at least one y column".into()));
    }
    let xs = column(table, x)?;
    let groups = match group {
        Some(g) => Some((g, column(table, g)?)),
        None => None,
    };
    let mut curves: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for y in ys {
        let values = column(table, y)?;
        match &groups {
            None => curves.push((y.clone(), xs.iter().cloned().zip(values).collect())),
            Some((gname, keys)) => {
                let mut split: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
                for ((&xv, yv), &k) in xs.iter().zip(values).zip(keys) {
                    split.entry(k.to_bits()).or_default().push((xv, yv));
                }
                for (k, pts) in split {
                    curves.push((format!("{y}, {} = {}", axis_label(gname), f64::from_bits(k)), pts));
                }
            }
        }
    }
    let (x0, x1) = bounds(xs.iter().cloned());
    let (y0, y1) = bounds(curves.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)));

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_error)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(&table.name, ("sans-serif", 22))
        .margin(15)
        .x_label_area_size(45)
        .y_label_area_size(70)
        .build_cartesian_2d(padded(x0, x1), padded(y0, y1))
        .map_err(plot_error)?;
    chart
        .configure_mesh()
        .x_desc(axis_label(x))
        .y_desc(if ys.len() == 1 { axis_label(&ys[0]) } else { String::new() })
        .draw()
        .map_err(plot_error)?;
    for (i, (label, pts)) in curves.into_iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(pts, color.stroke_width(2)))
            .map_err(plot_error)?
            .label(label)
            .legend(move |(px, py)| PathElement::new(vec![(px, py), (px + 20, py)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_error)?;
    root.present().map_err(plot_error)
}

/// Distinct sorted values and the smallest spacing between them.
fn axis_grid(values: &[f64]) -> (Vec<f64>, f64) {
    let mut u = values.to_vec();
    u.sort_by(f64::total_cmp);
    u.dedup();
    let step = u.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let step = if step.is_finite() { step } else { 1.0 };
    (u, step)
}

fn heatmap(table: &ResultTable, x: &str, y: &str, z: &str, guides: &[Guide], path: &Path) -> Result<(), CliError> {
    let xs = column(table, x)?;
    let ys = column(table, y)?;
    let zs = column(table, z)?;
    let (_, dx) = axis_grid(&xs);
    let (_, dy) = axis_grid(&ys);
    let (x0, x1) = bounds(xs.iter().cloned());
    let (y0, y1) = bounds(ys.iter().cloned());
    let (z0, z1) = bounds(zs.iter().cloned());
    let span = if z1 > z0 { z1 - z0 } else { 1.0 };

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_error)?;
    let (main, bar) = root.split_horizontally(SIZE.0 - 110);
    let mut chart = ChartBuilder::on(&main)
        .caption(format!("{} : {}", table.name, z), ("sans-serif", 22))
        .margin(15)
        .x_label_area_size(45)
        .y_label_area_size(80)
        .build_cartesian_2d((x0 - dx / 2.0)..(x1 + dx / 2.0), (y0 - dy / 2.0)..(y1 + dy / 2.0))
        .map_err(plot_error)?;
    chart
        .configure_mesh()
        .disable_mesh()
        .x_desc(axis_label(x))
        .y_desc(axis_label(y))
        .draw()
        .map_err(plot_error)?;
    chart
        .draw_series(xs.iter().zip(&ys).zip(&zs).map(|((&xv, &yv), &zv)| {
            let color = ViridisRGB::get_color((zv - z0) / span);
            Rectangle::new([(xv - dx / 2.0, yv - dy / 2.0), (xv + dx / 2.0, yv + dy / 2.0)], color.filled())
        }))
        .map_err(plot_error)?;
    for guide in guides {
        let inside: Vec<(f64, f64)> =
            guide.points.iter().cloned().filter(|&(_, gy)| gy >= y0 - dy && gy <= y1 + dy).collect();
        chart
            .draw_series(DashedLineSeries::new(inside, 6, 4, WHITE.stroke_width(2)))
            .map_err(plot_error)?
            .label(guide.label.clone())
            .legend(|(px, py)| PathElement::new(vec![(px, py), (px + 20, py)], BLACK.stroke_width(2)));
    }
    if !guides.is_empty() {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_error)?;
    }

    let mut scale = ChartBuilder::on(&bar)
        .margin_top(50)
        .margin_bottom(60)
        .margin_right(10)
        .y_label_area_size(60)
        .build_cartesian_2d(0.0..1.0, z0..(z0 + span))
        .map_err(plot_error)?;
    scale.configure_mesh().disable_mesh().disable_x_axis().y_desc(axis_label(z)).draw().map_err(plot_error)?;
    let steps = 100;
    scale
        .draw_series((0..steps).map(|i| {
            let a = z0 + span * i as f64 / steps as f64;
            let b = z0 + span * (i + 1) as f64 / steps as f64;
            Rectangle::new([(0.0, a), (1.0, b)], ViridisRGB::get_color(i as f64 / (steps - 1) as f64).filled())
        }))
        .map_err(plot_error)?;
    root.present().map_err(plot_error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Footer;

    fn table() -> ResultTable {
        let mut t = ResultTable::new("map", &["drive_MHz", "signal_GHz", "abs_r"], Footer {
            config_hash: "h".into(),
            dt: 0.02,
            n_max: 2,
        });
        for i in 0..4 {
            for j in 0..3 {
                t.push(vec![i as f64, 10.0 + 0.01 * j as f64, (i * j) as f64 / 6.0]);
            }
        }
        t
    }

    #[test]
    fn labels_carry_units() {
        assert_eq!(axis_label("drive_MHz"), "drive (MHz)");
        assert_eq!(axis_label("t_ns"), "t (ns)");
        assert_eq!(axis_label("p1"), "p1");
    }

    #[test]
    fn heatmap_and_lines_render() {
        let dir = tempfile::tempdir().unwrap();
        let t = table();
        let heat = dir.path().join("h.svg");
        let guides = vec![Guide { label: "guide".into(), points: vec![(0.0, 10.0), (3.0, 10.02)] }];
        emit_plot(&t, &PlotSpec::Heatmap { x: "drive_MHz".into(), y: "signal_GHz".into(), z: "abs_r".into(), guides }, &heat)
            .unwrap();
        let svg = std::fs::read_to_string(&heat).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("drive (MHz)") && svg.contains("signal (GHz)"));
        let line = dir.path().join("l.svg");
        let spec = PlotSpec::Line { x: "signal_GHz".into(), ys: vec!["abs_r".into()], group: Some("drive_MHz".into()) };
        emit_plot(&t, &spec, &line).unwrap();
        assert!(std::fs::read_to_string(&line).unwrap().contains("abs_r"));
    }

    #[test]
    fn empty_or_mismatched_tables_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = table();
        let path = dir.path().join("x.svg");
        let spec = PlotSpec::Line { x: "drive_MHz".into(), ys: vec!["missing".into()], group: None };
        assert!(matches!(emit_plot(&t, &spec, &path), Err(CliError::Invalid(_))));
        assert!(!path.exists());
        t.rows.clear();
        let spec = PlotSpec::Line { x: "drive_MHz".into(), ys: vec!["abs_r".into()], group: None };
        assert!(emit_plot(&t, &spec, &path).is_err());
        assert!(!path.exists());
    }
}
