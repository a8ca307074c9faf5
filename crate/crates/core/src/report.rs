//! Box-plot statistics, kernel density curves, the summary table and static
//! SVG figures over per-iteration metrics.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::Metric;
use crate::harness::{BootstrapSummary, MetricRecord, SummaryRow, SummaryStats};
use crate::stats::{quantile_sorted, sample_sd, sorted_copy};

/// Table cell for a metric with no defined value.
pub const MISSING_CELL: &str = "\u{2014}";
pub const TABLE_DECIMALS: usize = 4;
pub const KDE_GRID_POINTS: usize = 512;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("box plot needs at least 5 samples, got {0}")]
    TooFewSamples(usize),
    #[error("bandwidth must be positive and finite, got {0}")]
    Bandwidth(f64),
    #[error("automatic bandwidth needs at least two distinct samples")]
    Degenerate,
    #[error("nothing to report")]
    Empty,
    #[error("malformed summary table: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub whisker_low: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Tukey box plot: whiskers reach the most extreme samples within 1.5·IQR of
/// the quartiles; anything beyond is an outlier.
pub fn boxplot_stats(samples: &[f64]) -> Result<BoxplotStats, ReportError> {
    if samples.len() < 5 {
        return Err(ReportError::TooFewSamples(samples.len()));
    }
    let s = sorted_copy(samples);
    let q1 = quantile_sorted(&s, 0.25);
    let median = quantile_sorted(&s, 0.5);
    let q3 = quantile_sorted(&s, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    let inside: Vec<f64> = s.iter().copied().filter(|&v| v >= lo_fence && v <= hi_fence).collect();
    let whisker_low = inside.first().copied().unwrap_or(q1).min(q1);
    let whisker_high = inside.last().copied().unwrap_or(q3).max(q3);
    let outliers = s.iter().copied().filter(|&v| v < lo_fence || v > hi_fence).collect();
    Ok(BoxplotStats {
        whisker_low,
        q1,
        median,
        q3,
        whisker_high,
        outliers,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub bandwidth: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

impl DensityCurve {
    pub fn trapezoid_integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(g, d)| 0.5 * (g[1] - g[0]) * (d[0] + d[1]))
            .sum()
    }
}

/// Silverman's rule `0.9·min(sd, IQR/1.34)·n^(−1/5)`, falling back to the sd
/// alone when the IQR is zero.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64, ReportError> {
    let sd = if samples.len() > 1 { sample_sd(samples) } else { 0.0 };
    if !(sd > 0.0) {
        return Err(ReportError::Degenerate);
    }
    let s = sorted_copy(samples);
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * (samples.len() as f64).powf(-0.2))
}

/// Gaussian kernel density on a 512-point grid spanning the data ± 3
/// bandwidths.
pub fn kde(samples: &[f64], bandwidth: Option<f64>) -> Result<DensityCurve, ReportError> {
    if samples.is_empty() {
        return Err(ReportError::Degenerate);
    }
    let h = match bandwidth {
        Some(b) if b > 0.0 && b.is_finite() => b,
        Some(b) => return Err(ReportError::Bandwidth(b)),
        None => silverman_bandwidth(samples)?,
    };
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * PI).sqrt());
    let grid: Vec<f64> = (0..KDE_GRID_POINTS).map(|i| lo + i as f64 * step).collect();
    let density = grid
        .iter()
        .map(|&g| {
            norm * samples
                .iter()
                .map(|&x| {
                    let u = (g - x) / h;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
        })
        .collect();
    Ok(DensityCurve {
        bandwidth: h,
        grid,
        density,
    })
}

/// Defined iteration values of one model × metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSamples {
    pub model: String,
    pub metric: Metric,
    pub values: Vec<f64>,
}

/// Groups records by metric (reporting order) and model (first appearance).
pub fn group_samples(records: &[MetricRecord]) -> Vec<MetricSamples> {
    let mut models: Vec<&str> = Vec::new();
    let mut by_key: BTreeMap<(Metric, &str), Vec<(usize, f64)>> = BTreeMap::new();
    for r in records {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
        if let Some(v) = r.value {
            by_key.entry((r.metric, &r.model)).or_default().push((r.iteration, v));
        }
    }
    let mut out = Vec::new();
    for metric in Metric::ALL {
        for &model in &models {
            let mut v = by_key.remove(&(metric, model)).unwrap_or_default();
            v.sort_by_key(|(it, _)| *it);
            out.push(MetricSamples {
                model: model.to_string(),
                metric,
                values: v.into_iter().map(|(_, x)| x).collect(),
            });
        }
    }
    out
}

fn fmt_cell(v: f64) -> String {
    format!("{v:.TABLE_DECIMALS$}")
}

const TABLE_HEADER: [&str; 9] = [
    "Model",
    "Metric",
    "Mean",
    "Median",
    "SD",
    "Lower Bound",
    "Upper Bound",
    "P2.5",
    "P97.5",
];

fn stat_cells(stats: Option<&SummaryStats>) -> Vec<String> {
    match stats {
        Some(s) => [
            s.mean,
            s.median,
            s.sd,
            s.lower_bound,
            s.upper_bound,
            s.percentile_low,
            s.percentile_high,
        ]
        .iter()
        .map(|&v| fmt_cell(v))
        .collect(),
        None => vec![MISSING_CELL.to_string(); 7],
    }
}

/// Fixed-width table grouped by model. Rows with skipped iterations carry a
/// footnote marker.
pub fn render_table3_text(summary: &BootstrapSummary) -> String {
    let mut rows: Vec<Vec<String>> = vec![TABLE_HEADER.iter().map(|s| s.to_string()).collect()];
    let mut notes = Vec::new();
    let mut last_model = "";
    for r in &summary.rows {
        let model = if r.model == last_model { String::new() } else { r.model.clone() };
        last_model = &r.model;
        let mut metric = r.metric.title().to_string();
        if r.n_missing > 0 {
            notes.push(format!(
                "[{}] {} {}: {} of {} iterations undefined and excluded",
                notes.len() + 1,
                r.model,
                r.metric.title(),
                r.n_missing,
                summary.n_iterations
            ));
            metric.push_str(&format!(" [{}]", notes.len()));
        }
        let mut row = vec![model, metric];
        row.extend(stat_cells(r.stats.as_ref()));
        rows.push(row);
    }
    let widths: Vec<usize> = (0..TABLE_HEADER.len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    let _ = writeln!(out, "\nN = {} iterations; bounds are mean \u{b1} 1.96\u{b7}SD/\u{221a}N; P2.5/P97.5 are percentiles of the iteration values.", summary.n_iterations);
    for n in notes {
        out.push_str(&n);
        out.push('\n');
    }
    out
}

const CSV_HEADER: [&str; 11] = [
    "model",
    "metric",
    "mean",
    "median",
    "sd",
    "lower_bound",
    "upper_bound",
    "percentile_2_5",
    "percentile_97_5",
    "n",
    "n_missing",
];

/// CSV with the same 4-decimal values as the text table.
pub fn write_table3_csv<W: Write>(summary: &BootstrapSummary, sink: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(CSV_HEADER)?;
    for r in &summary.rows {
        let mut row = vec![r.model.clone(), r.metric.as_str().to_string()];
        row.extend(stat_cells(r.stats.as_ref()));
        row.push(r.stats.map_or(0, |s| s.n).to_string());
        row.push(r.n_missing.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses [`write_table3_csv`] output. The result equals the source summary
/// rounded to 4 decimals; the iteration count is recovered as the largest
/// `n + n_missing`.
pub fn parse_table3_csv<R: Read>(source: R) -> Result<BootstrapSummary, ReportError> {
    let mut rdr = csv::Reader::from_reader(source);
    let bad = |m: String| ReportError::Malformed(m);
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(bad(format!("unexpected header {headers:?}")));
    }
    let mut rows = Vec::new();
    let mut n_iterations = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let metric = Metric::parse(&rec[1]).ok_or_else(|| bad(format!("metric {:?}", &rec[1])))?;
        let int = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(format!("integer {:?}", &rec[i])));
        let n = int(9)?;
        let n_missing = int(10)?;
        n_iterations = n_iterations.max(n + n_missing);
        let stats = if rec[2] == *MISSING_CELL {
            None
        } else {
            let mut v = [0.0; 7];
            for (k, slot) in v.iter_mut().enumerate() {
                *slot = rec[2 + k].parse().map_err(|_| bad(format!("number {:?}", &rec[2 + k])))?;
            }
            Some(SummaryStats {
                mean: v[0],
                median: v[1],
                sd: v[2],
                lower_bound: v[3],
                upper_bound: v[4],
                percentile_low: v[5],
                percentile_high: v[6],
                n,
                n_missing,
            })
        };
        rows.push(SummaryRow {
            model: rec[0].to_string(),
            metric,
            stats,
            n_missing,
        });
    }
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    Ok(BootstrapSummary { n_iterations, rows })
}

/// Full-precision JSON form of the summary with run metadata.
pub fn table3_json(summary: &BootstrapSummary, metadata: &serde_json::Value) -> serde_json::Value {
    serde_json::json!({
        "metadata": metadata,
        "n_iterations": summary.n_iterations,
        "rows": summary.rows,
    })
}

// SVG layout, in pixels.
const PANEL_W: f64 = 150.0;
const PANEL_H: f64 = 120.0;
const MARGIN_LEFT: f64 = 110.0;
const MARGIN_TOP: f64 = 40.0;
const PAD: f64 = 12.0;

fn px(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
        .collect()
}

struct Grid {
    models: Vec<String>,
    metrics: Vec<Metric>,
}

impl Grid {
    fn of<T>(panels: &[(String, Metric, T)]) -> Self {
        let mut models: Vec<String> = Vec::new();
        let mut metrics: Vec<Metric> = Vec::new();
        for (m, metric, _) in panels {
            if !models.contains(m) {
                models.push(m.clone());
            }
            if !metrics.contains(metric) {
                metrics.push(*metric);
            }
        }
        Self { models, metrics }
    }

    fn size(&self) -> (f64, f64) {
        (
            MARGIN_LEFT + self.models.len() as f64 * PANEL_W + PAD,
            MARGIN_TOP + self.metrics.len() as f64 * PANEL_H + PAD,
        )
    }

    fn origin(&self, model: &str, metric: Metric) -> (f64, f64) {
        let c = self.models.iter().position(|m| m == model).unwrap_or(0);
        let r = self.metrics.iter().position(|m| *m == metric).unwrap_or(0);
        (MARGIN_LEFT + c as f64 * PANEL_W, MARGIN_TOP + r as f64 * PANEL_H)
    }

    fn header(&self, title: &str, out: &mut String) {
        let (w, h) = self.size();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="11">"#,
            px(w),
            px(h),
            px(w),
            px(h)
        );
        let _ = writeln!(out, r#"<title>{}</title>"#, escape(title));
        let _ = writeln!(out, r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##, px(w), px(h));
        for (c, m) in self.models.iter().enumerate() {
            let x = MARGIN_LEFT + (c as f64 + 0.5) * PANEL_W;
            let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, px(x), px(MARGIN_TOP - 14.0), escape(m));
        }
        for (r, metric) in self.metrics.iter().enumerate() {
            let y = MARGIN_TOP + (r as f64 + 0.5) * PANEL_H;
            let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, px(MARGIN_LEFT - 8.0), px(y), escape(metric.title()));
        }
    }
}

fn panel_open(out: &mut String, kind: &str, model: &str, metric: Metric, x0: f64, y0: f64) {
    let _ = writeln!(
        out,
        r##"<g id="{kind}-{}-{}" class="panel"><rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#cccccc"/>"##,
        metric.as_str(),
        slug(model),
        px(x0 + 4.0),
        px(y0 + 4.0),
        px(PANEL_W - 8.0),
        px(PANEL_H - 8.0)
    );
}

fn empty_panel(out: &mut String, x0: f64, y0: f64) {
    let _ = writeln!(
        out,
        r##"<text x="{}" y="{}" text-anchor="middle" fill="#999999">insufficient data</text>"##,
        px(x0 + PANEL_W / 2.0),
        px(y0 + PANEL_H / 2.0)
    );
}

/// Value range per metric row, shared by every model in that row.
fn row_ranges<T>(panels: &[(String, Metric, Option<T>)], extent: impl Fn(&T) -> (f64, f64)) -> BTreeMap<Metric, (f64, f64)> {
    let mut out: BTreeMap<Metric, (f64, f64)> = BTreeMap::new();
    for (_, metric, p) in panels {
        if let Some(p) = p {
            let (lo, hi) = extent(p);
            let e = out.entry(*metric).or_insert((lo, hi));
            e.0 = e.0.min(lo);
            e.1 = e.1.max(hi);
        }
    }
    for v in out.values_mut() {
        if v.1 - v.0 < 1e-9 {
            v.0 -= 0.01;
            v.1 += 0.01;
        }
    }
    out
}

/// One box per model × metric panel; metrics are rows, models columns.
pub fn render_boxplots_svg(panels: &[(String, Metric, Option<BoxplotStats>)]) -> String {
    let grid = Grid::of(panels);
    let ranges = row_ranges(panels, |b: &BoxplotStats| {
        let lo = b.outliers.iter().copied().fold(b.whisker_low, f64::min);
        let hi = b.outliers.iter().copied().fold(b.whisker_high, f64::max);
        (lo, hi)
    });
    let mut out = String::new();
    grid.header("Iteration metrics by model (box plots)", &mut out);
    for (model, metric, b) in panels {
        let (x0, y0) = grid.origin(model, *metric);
        panel_open(&mut out, "box", model, *metric, x0, y0);
        match (b, ranges.get(metric)) {
            (Some(b), Some(&(lo, hi))) => {
                let top = y0 + PAD;
                let span = PANEL_H - 2.0 * PAD;
                let y = |v: f64| top + span * (hi - v) / (hi - lo);
                let cx = x0 + PANEL_W / 2.0;
                let half = PANEL_W * 0.2;
                let _ = writeln!(
                    out,
                    r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#333333"/><line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#333333"/>"##,
                    px(cx),
                    px(y(b.whisker_high)),
                    px(cx),
                    px(y(b.q3)),
                    px(cx),
                    px(y(b.q1)),
                    px(cx),
                    px(y(b.whisker_low))
                );
                let _ = writeln!(
                    out,
                    r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#9ecae1" stroke="#333333"/>"##,
                    px(cx - half),
                    px(y(b.q3)),
                    px(2.0 * half),
                    px(y(b.q1) - y(b.q3))
                );
                let _ = writeln!(
                    out,
                    r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#08306b" stroke-width="2"/>"##,
                    px(cx - half),
                    px(y(b.median)),
                    px(cx + half),
                    px(y(b.median))
                );
                for v in &b.outliers {
                    let _ = writeln!(out, r##"<circle cx="{}" cy="{}" r="1.5" fill="#e6550d"/>"##, px(cx), px(y(*v)));
                }
            }
            _ => empty_panel(&mut out, x0, y0),
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// One density curve per model × metric panel.
pub fn render_densities_svg(panels: &[(String, Metric, Option<DensityCurve>)]) -> String {
    let grid = Grid::of(panels);
    let ranges = row_ranges(panels, |d: &DensityCurve| {
        (d.grid.first().copied().unwrap_or(0.0), d.grid.last().copied().unwrap_or(1.0))
    });
    let mut out = String::new();
    grid.header("Iteration metrics by model (densities)", &mut out);
    for (model, metric, d) in panels {
        let (x0, y0) = grid.origin(model, *metric);
        panel_open(&mut out, "density", model, *metric, x0, y0);
        match (d, ranges.get(metric)) {
            (Some(d), Some(&(lo, hi))) => {
                let peak = d.density.iter().copied().fold(0.0, f64::max).max(1e-300);
                let left = x0 + PAD;
                let width = PANEL_W - 2.0 * PAD;
                let bottom = y0 + PANEL_H - PAD;
                let height = PANEL_H - 2.0 * PAD;
                let points: Vec<String> = d
                    .grid
                    .iter()
                    .zip(&d.density)
                    .map(|(&g, &v)| {
                        format!(
                            "{},{}",
                            px(left + width * (g - lo) / (hi - lo)),
                            px(bottom - height * v / peak)
                        )
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    r##"<polyline fill="none" stroke="#3182bd" stroke-width="1.2" points="{}"/>"##,
                    points.join(" ")
                );
            }
            _ => empty_panel(&mut out, x0, y0),
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn write_boxplot_csv(panels: &[(String, Metric, Option<BoxplotStats>)]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "metric", "whisker_low", "q1", "median", "q3", "whisker_high", "outliers"])?;
    for (model, metric, b) in panels {
        let mut row = vec![model.clone(), metric.as_str().to_string()];
        match b {
            Some(b) => {
                row.extend([b.whisker_low, b.q1, b.median, b.q3, b.whisker_high].iter().map(|v| format!("{v:?}")));
                row.push(b.outliers.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(";"));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

fn write_density_csv(panels: &[(String, Metric, Option<DensityCurve>)]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "metric", "bandwidth", "x", "density"])?;
    for (model, metric, d) in panels {
        if let Some(d) = d {
            for (g, v) in d.grid.iter().zip(&d.density) {
                w.write_record([
                    model.as_str(),
                    metric.as_str(),
                    &format!("{:?}", d.bandwidth),
                    &format!("{g:?}"),
                    &format!("{v:?}"),
                ])?;
            }
        }
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

/// Named output files of a report.
pub struct ReportFiles {
    pub files: Vec<(String, Vec<u8>)>,
    pub panels: usize,
}

/// Renders every report artifact from per-iteration records.
pub fn build_report(
    records: &[MetricRecord],
    summary: &BootstrapSummary,
    metadata: &serde_json::Value,
) -> Result<ReportFiles, ReportError> {
    if records.is_empty() || summary.rows.is_empty() {
        return Err(ReportError::Empty);
    }
    let samples = group_samples(records);
    let boxes: Vec<(String, Metric, Option<BoxplotStats>)> = samples
        .iter()
        .map(|s| (s.model.clone(), s.metric, boxplot_stats(&s.values).ok()))
        .collect();
    let densities: Vec<(String, Metric, Option<DensityCurve>)> = samples
        .iter()
        .map(|s| (s.model.clone(), s.metric, kde(&s.values, None).ok()))
        .collect();
    let csv_err = |e: csv::Error| ReportError::Malformed(e.to_string());
    let mut table_csv = Vec::new();
    write_table3_csv(summary, &mut table_csv).map_err(csv_err)?;
    let json = serde_json::to_vec_pretty(&table3_json(summary, metadata)).expect("summary serializes");
    let files = vec![
        ("summary_table.txt".to_string(), render_table3_text(summary).into_bytes()),
        ("summary_table.csv".to_string(), table_csv),
        ("summary_table.json".to_string(), json),
        ("boxplots.svg".to_string(), render_boxplots_svg(&boxes).into_bytes()),
        ("densities.svg".to_string(), render_densities_svg(&densities).into_bytes()),
        ("boxplot_data.csv".to_string(), write_boxplot_csv(&boxes).map_err(csv_err)?),
        ("density_data.csv".to_string(), write_density_csv(&densities).map_err(csv_err)?),
    ];
    Ok(ReportFiles {
        files,
        panels: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boxplot_of_one_to_hundred() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let b = boxplot_stats(&v).unwrap();
        assert_eq!(b.median, 50.5);
        assert!(b.outliers.is_empty());
        assert_eq!((b.whisker_low, b.whisker_high), (1.0, 100.0));
    }

    #[test]
    fn boxplot_flags_extreme_point() {
        let mut v = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        v.push(100.0);
        let b = boxplot_stats(&v).unwrap();
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!(b.whisker_high, 6.0);
        let c = boxplot_stats(&[2.0; 6]).unwrap();
        assert!(c.outliers.is_empty());
        assert_eq!((c.q1, c.q3), (2.0, 2.0));
        assert_eq!(boxplot_stats(&[1.0; 4]), Err(ReportError::TooFewSamples(4)));
    }

    #[test]
    fn kde_two_points_is_symmetric_and_bimodal() {
        let d = kde(&[0.0, 1.0], Some(0.1)).unwrap();
        let n = d.density.len();
        for i in 0..n {
            assert!((d.density[i] - d.density[n - 1 - i]).abs() < 1e-12);
        }
        let mid = d.density[n / 2];
        let peak = d.density.iter().copied().fold(0.0, f64::max);
        assert!(mid < peak / 2.0);
        assert_eq!(kde(&[1.0, 2.0], Some(0.0)), Err(ReportError::Bandwidth(0.0)));
        assert_eq!(kde(&[1.0, 1.0], None), Err(ReportError::Degenerate));
    }

    #[test]
    fn em_dash_marks_missing_cells() {
        assert_eq!(MISSING_CELL.chars().count(), 1);
    }
}
