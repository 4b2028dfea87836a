//! CSV sidecars, the JSON report and static SVG charts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ddtrack_core::synthesis::RecedingLog;
use ddtrack_core::{Error, Result};

use crate::pipeline::ExperimentReport;

pub const REPORT_FILE: &str = "report.json";
pub const OUTPUTS_FILE: &str = "outputs.csv";
pub const COSTS_FILE: &str = "costs.csv";
pub const OUTPUTS_SVG: &str = "outputs.svg";
pub const COSTS_SVG: &str = "costs.svg";
pub const RHC_FILE: &str = "rhc.csv";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::from)
}

pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<PathBuf> {
    create_dir(dir)?;
    let path = dir.join(REPORT_FILE);
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

/// `outputs.csv`: one row per predicted step, one column per realization and
/// output channel (`r{i}_y{j}`, both 1-based).
pub fn write_outputs_csv(report: &ExperimentReport, path: &Path) -> Result<()> {
    let p = report.output_dim.max(1);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["k".to_string()];
    for i in 0..report.outputs.len() {
        header.extend((0..p).map(|j| format!("r{}_y{}", i + 1, j + 1)));
    }
    w.write_record(&header)?;
    let steps = report.outputs.first().map_or(0, |y| y.len() / p);
    for k in 0..steps {
        let mut row = vec![k.to_string()];
        for y in &report.outputs {
            row.extend((0..p).map(|j| y[k * p + j].to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `costs.csv`: realization index (1-based), realized cost and γ*.
pub fn write_costs_csv(costs: &[f64], gamma_star: f64, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["realization", "cost", "gamma_star"])?;
    for (i, c) in costs.iter().enumerate() {
        w.write_record([(i + 1).to_string(), c.to_string(), gamma_star.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the CSV sidecars and the two charts into `dir`.
pub fn emit_plots(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let gamma = report.synthesis.gamma_star;
    let outputs = dir.join(OUTPUTS_FILE);
    write_outputs_csv(report, &outputs)?;
    let costs = dir.join(COSTS_FILE);
    write_costs_csv(&report.costs, gamma, &costs)?;

    let p = report.output_dim.max(1);
    let series: Vec<Vec<(f64, f64)>> = report
        .outputs
        .iter()
        .flat_map(|y| {
            (0..p).map(move |j| {
                (0..y.len() / p).map(|k| (k as f64, y[k * p + j])).collect::<Vec<_>>()
            })
        })
        .collect();
    let outputs_svg = dir.join(OUTPUTS_SVG);
    fs::write(&outputs_svg, line_chart(&series, "k", "y"))?;
    let points: Vec<(f64, f64)> = report.costs.iter().enumerate().map(|(i, &c)| ((i + 1) as f64, c)).collect();
    let costs_svg = dir.join(COSTS_SVG);
    fs::write(&costs_svg, scatter_chart(&points, gamma, "realization", "cost"))?;
    Ok(vec![outputs, costs, outputs_svg, costs_svg])
}

/// Closed-loop log: warm-up rows have `k < 0` and no γ.
pub fn write_receding_csv(log: &RecedingLog<f64>, path: &Path) -> Result<()> {
    let m = log.warmup_inputs.nrows();
    let p = log.warmup_measured.nrows();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["k".to_string()];
    header.extend((1..=m).map(|i| format!("u_{i}")));
    header.extend((1..=p).map(|j| format!("y_{j}")));
    header.extend((1..=p).map(|j| format!("y_meas_{j}")));
    header.push("gamma".into());
    w.write_record(&header)?;
    let warm = log.warmup_inputs.ncols() as i64;
    for t in 0..log.warmup_inputs.ncols() {
        let mut row = vec![(t as i64 - warm).to_string()];
        row.extend(log.warmup_inputs.column(t).iter().map(f64::to_string));
        row.extend(log.warmup_measured.column(t).iter().map(|_| String::new()));
        row.extend(log.warmup_measured.column(t).iter().map(f64::to_string));
        row.push(String::new());
        w.write_record(&row)?;
    }
    for t in 0..log.steps() {
        let mut row = vec![t.to_string()];
        row.extend(log.inputs.column(t).iter().map(f64::to_string));
        row.extend(log.outputs.column(t).iter().map(f64::to_string));
        row.extend(log.measured.column(t).iter().map(f64::to_string));
        row.push(log.gammas[t].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let (mut x, mut y) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
        for (a, b) in points {
            x = (x.0.min(a), x.1.max(a));
            y = (y.0.min(b), y.1.max(b));
        }
        let widen = |(lo, hi): (f64, f64)| {
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo <= f64::EPSILON * (1.0 + lo.abs()) {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        Self { x: widen(x), y: widen(y) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn svg_open(frame: &Frame, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
    );
    let font = r#"font-family="sans-serif" font-size="12""#;
    let _ = writeln!(s, r#"<text x="{}" y="{}" {font} text-anchor="middle">{x_label}</text>"#, WIDTH / 2.0, HEIGHT - 12.0);
    let _ = writeln!(s, r#"<text x="14" y="{}" {font} transform="rotate(-90 14 {})" text-anchor="middle">{y_label}</text>"#, HEIGHT / 2.0, HEIGHT / 2.0);
    let _ = writeln!(s, r#"<text x="{x0}" y="{}" {font} text-anchor="middle">{:.3}</text>"#, y0 + 16.0, frame.x.0);
    let _ = writeln!(s, r#"<text x="{x1}" y="{}" {font} text-anchor="middle">{:.3}</text>"#, y0 + 16.0, frame.x.1);
    let _ = writeln!(s, r#"<text x="{}" y="{y0}" {font} text-anchor="end">{:.3e}</text>"#, x0 - 4.0, frame.y.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" {font} text-anchor="end">{:.3e}</text>"#, x0 - 4.0, y1 + 10.0, frame.y.1);
    s
}

pub fn line_chart(series: &[Vec<(f64, f64)>], x_label: &str, y_label: &str) -> String {
    let frame = Frame::fit(series.iter().flatten().copied());
    let mut s = svg_open(&frame, x_label, y_label);
    for line in series.iter().filter(|l| !l.is_empty()) {
        let pts: Vec<String> = line.iter().map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-opacity="0.4"/>"#,
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Scatter of `points` with a dashed horizontal line at `level`.
pub fn scatter_chart(points: &[(f64, f64)], level: f64, x_label: &str, y_label: &str) -> String {
    let frame = Frame::fit(points.iter().copied().chain(std::iter::once((1.0, level))));
    let mut s = svg_open(&frame, x_label, y_label);
    for &(x, y) in points {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="steelblue"/>"#, frame.px(x), frame.py(y));
    }
    let ly = frame.py(level);
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{ly:.2}" x2="{}" y2="{ly:.2}" stroke="firebrick" stroke-dasharray="6 4"/>"#,
        WIDTH - MARGIN
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed() {
        let svg = line_chart(&[vec![(0.0, 1.0), (1.0, 0.5)], vec![]], "k", "y");
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        let svg = scatter_chart(&[], 2.0, "i", "c");
        assert_eq!(svg.matches("<circle").count(), 0);
        assert!(svg.contains("<line"));
    }

    #[test]
    fn costs_csv_has_one_row_per_cost() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        write_costs_csv(&[1.0, 2.5], 3.0, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "realization,cost,gamma_star\n1,1,3\n2,2.5,3\n");
    }
}
