//! Deterministic SVG plots of experiment CSVs.
//!
//! The renderer aggregates rows sharing an x value into mean ± one standard
//! error of the mean, draws one line plus shaded band per error column, and
//! adds a second panel for the `diff` column when present. Output contains
//! no timestamps and uses fixed float formatting, so identical input bytes
//! always produce identical SVG bytes.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("unknown plot kind: {0}")]
    UnknownKind(String),
    #[error("csv has no data rows")]
    EmptyData,
    #[error("csv is missing required column: {0}")]
    MissingColumn(String),
    #[error("malformed csv row {0}: {1}")]
    MalformedRow(usize, String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// x axis is the `epsilon` column (enhance, sparsity).
    LineByEpsilon,
    /// x axis is the `n` column, drawn on a log scale (gap).
    LineByN,
}

impl PlotKind {
    pub fn from_name(name: &str) -> Result<Self, PlotError> {
        match name {
            "line_by_epsilon" => Ok(PlotKind::LineByEpsilon),
            "line_by_n" => Ok(PlotKind::LineByN),
            other => Err(PlotError::UnknownKind(other.to_string())),
        }
    }

    fn x_column(self) -> &'static str {
        match self {
            PlotKind::LineByEpsilon => "epsilon",
            PlotKind::LineByN => "n",
        }
    }
}

struct Series {
    name: String,
    /// (x, mean, stderr) sorted by x.
    points: Vec<(f64, f64, f64)>,
}

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 360.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;

fn fnum(v: f64) -> String {
    // Fixed-width formatting keeps the SVG byte-stable across runs.
    format!("{v:.6}")
}

/// Groups rows by x cell and reduces each error column to mean ± stderr.
fn aggregate(
    header: &[&str],
    rows: &[Vec<&str>],
    x_col: usize,
    value_cols: &[usize],
) -> Vec<Series> {
    let mut xs: Vec<(f64, String)> = Vec::new();
    for row in rows {
        let key = row[x_col].to_string();
        if !xs.iter().any(|(_, k)| *k == key) {
            let x: f64 = key.parse().unwrap_or(f64::NAN);
            xs.push((x, key));
        }
    }
    xs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite x values"));

    value_cols
        .iter()
        .map(|&col| {
            let mut points = Vec::new();
            for (x, key) in &xs {
                let vals: Vec<f64> = rows
                    .iter()
                    .filter(|r| r[x_col] == key && !r[col].is_empty())
                    .map(|r| r[col].parse().unwrap_or(f64::NAN))
                    .collect();
                if vals.is_empty() {
                    continue;
                }
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                    / if vals.len() > 1 { n - 1.0 } else { 1.0 };
                let stderr = (var / n).sqrt();
                points.push((*x, mean, stderr));
            }
            Series { name: header[col].to_string(), points }
        })
        .filter(|s| !s.points.is_empty())
        .collect()
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn place(&self, v: f64, px_lo: f64, px_hi: f64) -> f64 {
        let (v, lo, hi) = if self.log {
            (v.log10(), self.lo.log10(), self.hi.log10())
        } else {
            (v, self.lo, self.hi)
        };
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        px_lo + t * (px_hi - px_lo)
    }
}

fn render_panel(out: &mut String, series: &[Series], x_axis: &Axis, y_top: f64, title: &str) {
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for s in series {
        for &(_, m, se) in &s.points {
            y_lo = y_lo.min(m - se);
            y_hi = y_hi.max(m + se);
        }
    }
    if !(y_hi > y_lo) {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let pad = 0.05 * (y_hi - y_lo);
    let y_axis = Axis { lo: y_lo - pad, hi: y_hi + pad, log: false };

    let px = |x: f64| x_axis.place(x, MARGIN_L, PANEL_W - MARGIN_R);
    let py = |y: f64| y_axis.place(y, y_top + PANEL_H - MARGIN_B, y_top + MARGIN_T);

    out.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
        fnum(MARGIN_L),
        fnum(y_top + MARGIN_T),
        fnum(PANEL_W - MARGIN_R - MARGIN_L),
        fnum(PANEL_H - MARGIN_T - MARGIN_B)
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        fnum((MARGIN_L + PANEL_W - MARGIN_R) / 2.0),
        fnum(y_top + 20.0),
        title
    ));
    // Axis end labels.
    for (v, anchor) in [(x_axis.lo, "start"), (x_axis.hi, "end")] {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"{anchor}\">{}</text>\n",
            fnum(px(v)),
            fnum(y_top + PANEL_H - MARGIN_B + 18.0),
            fnum(v)
        ));
    }
    for v in [y_axis.lo, y_axis.hi] {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            fnum(MARGIN_L - 6.0),
            fnum(py(v) + 4.0),
            fnum(v)
        ));
    }

    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        // Shaded ±1 stderr band: upper edge forward, lower edge backward.
        let mut band = String::from("<polygon points=\"");
        for &(x, m, se) in &s.points {
            band.push_str(&format!("{},{} ", fnum(px(x)), fnum(py(m + se))));
        }
        for &(x, m, se) in s.points.iter().rev() {
            band.push_str(&format!("{},{} ", fnum(px(x)), fnum(py(m - se))));
        }
        band.push_str(&format!("\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n"));
        out.push_str(&band);

        let mut line = String::from("<polyline points=\"");
        for &(x, m, _) in &s.points {
            line.push_str(&format!("{},{} ", fnum(px(x)), fnum(py(m))));
        }
        line.push_str(&format!("\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"));
        out.push_str(&line);
        for &(x, m, _) in &s.points {
            out.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{color}\"/>\n",
                fnum(px(x)),
                fnum(py(m))
            ));
        }
        // Legend entry.
        let ly = y_top + MARGIN_T + 16.0 * (idx as f64 + 1.0);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            fnum(PANEL_W - MARGIN_R + 10.0),
            fnum(ly),
            fnum(PANEL_W - MARGIN_R + 34.0),
            fnum(ly)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
            fnum(PANEL_W - MARGIN_R + 40.0),
            fnum(ly + 4.0),
            s.name
        ));
    }
}

/// Renders the CSV to SVG text.
pub fn render_svg(csv: &str, kind: PlotKind) -> Result<String, PlotError> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or(PlotError::EmptyData)?
        .split(',')
        .collect();
    let x_name = kind.x_column();
    let x_col = header
        .iter()
        .position(|&h| h == x_name)
        .ok_or_else(|| PlotError::MissingColumn(x_name.to_string()))?;
    let err_cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("err"))
        .map(|(i, _)| i)
        .collect();
    if err_cols.is_empty() {
        return Err(PlotError::MissingColumn("err*".to_string()));
    }
    let diff_col = header.iter().position(|&h| h == "diff");

    let mut rows: Vec<Vec<&str>> = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(PlotError::MalformedRow(i + 2, line.to_string()));
        }
        rows.push(cells);
    }
    if rows.is_empty() {
        return Err(PlotError::EmptyData);
    }

    let err_series = aggregate(&header, &rows, x_col, &err_cols);
    if err_series.is_empty() {
        return Err(PlotError::EmptyData);
    }
    let diff_series = diff_col
        .map(|c| aggregate(&header, &rows, x_col, &[c]))
        .unwrap_or_default();

    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    for s in err_series.iter().chain(diff_series.iter()) {
        for &(x, _, _) in &s.points {
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
        }
    }
    let x_axis = Axis { lo: x_lo, hi: x_hi, log: kind == PlotKind::LineByN && x_lo > 0.0 };

    let panels = 1 + usize::from(!diff_series.is_empty());
    let total_h = PANEL_H * panels as f64;
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" \
         viewBox=\"0 0 {} {}\" font-family=\"sans-serif\">\n",
        fnum(PANEL_W),
        fnum(total_h),
        fnum(PANEL_W),
        fnum(total_h)
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    render_panel(&mut out, &err_series, &x_axis, 0.0, &format!("mean error vs {x_name}"));
    if !diff_series.is_empty() {
        render_panel(&mut out, &diff_series, &x_axis, PANEL_H, &format!("mean diff vs {x_name}"));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Renders the CSV and writes the SVG to `out`.
pub fn emit_plot(csv: &str, kind: PlotKind, out: &Path) -> Result<(), PlotError> {
    let svg = render_svg(csv, kind)?;
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(out, svg)?;
    Ok(())
}
