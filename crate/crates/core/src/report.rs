//! Multi-seed aggregation, result tables and SVG charts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trainer::{Method, Scheme};

/// Outcome of one (dataset, method, |S̄|, seed) trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub dataset: String,
    pub method: String,
    pub num_false: usize,
    pub seed: u64,
    pub test_mse: f64,
    pub validation_metric: f64,
    /// Hyperparameters picked on the validation set.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub selected: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

impl TrialResult {
    pub fn key(&self) -> CellKey {
        CellKey {
            dataset: self.dataset.clone(),
            method: self.method.clone(),
            num_false: self.num_false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.test_mse.is_finite() && self.test_mse >= 0.0) {
            return Err(Error::Aggregation(format!(
                "trial {}/{}/{}/{} has invalid test MSE {}",
                self.dataset, self.method, self.num_false, self.seed, self.test_mse
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub dataset: String,
    pub method: String,
    pub num_false: usize,
}

impl CellKey {
    fn sort_key(&self) -> (String, usize, usize, String) {
        let rank = method_rank(&self.method);
        (self.dataset.clone(), self.num_false, rank, self.method.clone())
    }
}

fn method_rank(name: &str) -> usize {
    name.parse::<Method>().map(|m| m.column_rank()).unwrap_or(usize::MAX)
}

/// Mean and sample standard deviation of the test MSE over the trials of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub key: CellKey,
    pub mean: f64,
    /// Zero when there is a single trial; check `n_trials`.
    pub std: f64,
    pub n_trials: usize,
    /// Trials sorted by seed, duplicates removed.
    pub trials: Vec<TrialResult>,
}

impl Cell {
    /// Builds a cell from trials that must all share one key. Exact duplicates
    /// are collapsed; two different results for the same seed are an error.
    pub fn from_trials(trials: &[TrialResult]) -> Result<Self> {
        let first = trials
            .first()
            .ok_or_else(|| Error::Aggregation("a cell needs at least one trial".into()))?;
        let key = first.key();
        let mut by_seed: BTreeMap<u64, &TrialResult> = BTreeMap::new();
        for t in trials {
            t.validate()?;
            if t.key() != key {
                return Err(Error::Aggregation(format!(
                    "mixed keys in one cell: {:?} and {:?}",
                    key,
                    t.key()
                )));
            }
            match by_seed.get(&t.seed) {
                Some(prev) if prev.test_mse.to_bits() != t.test_mse.to_bits() => {
                    return Err(Error::Aggregation(format!(
                        "conflicting results for {}/{}/{} seed {}: {} vs {}",
                        key.dataset, key.method, key.num_false, t.seed, prev.test_mse, t.test_mse
                    )));
                }
                Some(_) => {}
                None => {
                    by_seed.insert(t.seed, t);
                }
            }
        }
        let trials: Vec<TrialResult> = by_seed.into_values().cloned().collect();
        let values: Vec<f64> = trials.iter().map(|t| t.test_mse).collect();
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Cell {
            key,
            mean,
            std,
            n_trials: n,
            trials,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub git_hash: Option<String>,
    pub config_hash: Option<String>,
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    /// Sorted by (dataset, |S̄|, method column order).
    pub cells: Vec<Cell>,
    #[serde(default)]
    pub metadata: ReportMetadata,
}

impl BenchReport {
    pub fn cell(&self, dataset: &str, method: &str, num_false: usize) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.key.dataset == dataset && c.key.method == method && c.key.num_false == num_false)
    }

    /// Method names present in the report, in column order.
    pub fn methods(&self) -> Vec<String> {
        let mut m: Vec<&str> = self.cells.iter().map(|c| c.key.method.as_str()).collect();
        m.sort_by_key(|name| (method_rank(name), name.to_string()));
        m.dedup();
        m.into_iter().map(String::from).collect()
    }

    pub fn datasets(&self) -> Vec<String> {
        let mut d: Vec<String> = self.cells.iter().map(|c| c.key.dataset.clone()).collect();
        d.dedup();
        d
    }

    fn rows(&self) -> Vec<(String, usize)> {
        let mut rows: Vec<(String, usize)> = self
            .cells
            .iter()
            .map(|c| (c.key.dataset.clone(), c.key.num_false))
            .collect();
        rows.dedup();
        rows
    }
}

/// Groups trials into cells and computes per-cell statistics. The result does
/// not depend on the order of `trials`.
pub fn aggregate(trials: &[TrialResult]) -> Result<BenchReport> {
    if trials.is_empty() {
        return Err(Error::Aggregation("no trials to aggregate".into()));
    }
    let mut groups: BTreeMap<(String, usize, usize, String), Vec<TrialResult>> = BTreeMap::new();
    for t in trials {
        groups.entry(t.key().sort_key()).or_default().push(t.clone());
    }
    let cells = groups
        .values()
        .map(|g| Cell::from_trials(g))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchReport {
        cells,
        metadata: ReportMetadata::default(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

/// Rounds to two decimals, half to even, on the shortest decimal form of `x`.
///
/// ```
/// use plr_core::report::format_2dp;
/// assert_eq!(format_2dp(4.655), "4.66");
/// assert_eq!(format_2dp(4.645), "4.64");
/// assert_eq!(format_2dp(0.0), "0.00");
/// ```
pub fn format_2dp(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = x.abs().to_string();
    let (int_part, frac_part) = s.split_once('.').unwrap_or((&s, ""));
    let mut digits: Vec<u8> = int_part.bytes().map(|b| b - b'0').collect();
    let frac: Vec<u8> = frac_part.bytes().map(|b| b - b'0').collect();
    digits.extend((0..2).map(|i| frac.get(i).copied().unwrap_or(0)));
    let rest = frac.get(2..).unwrap_or(&[]);
    let round_up = match rest.first() {
        None => false,
        Some(&d) if d > 5 => true,
        Some(&d) if d < 5 => false,
        Some(_) => rest[1..].iter().any(|&d| d != 0) || digits.last().is_some_and(|d| d % 2 == 1),
    };
    if round_up {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - 2;
    let int_str: String = digits[..split].iter().map(|d| (b'0' + d) as char).collect();
    let frac_str: String = digits[split..].iter().map(|d| (b'0' + d) as char).collect();
    let negative = x < 0.0 && digits.iter().any(|&d| d != 0);
    format!("{}{}.{}", if negative { "-" } else { "" }, int_str, frac_str)
}

fn cell_text(c: &Cell) -> String {
    format!("{} ({})", format_2dp(c.mean), format_2dp(c.std))
}

fn is_baseline(method: &str) -> bool {
    method
        .parse::<Method>()
        .is_ok_and(|m| m.scheme == Scheme::Supervised)
}

/// One row per (dataset, |S̄|), one column per method, cells `mean (std)`.
///
/// In markdown the lowest mean in each row is bold, with ties all bold. The
/// fully supervised baseline is shown but does not compete unless it is the
/// only method in the row.
pub fn render_table(report: &BenchReport, format: TableFormat) -> Result<String> {
    if report.cells.is_empty() {
        return Err(Error::Aggregation("empty report".into()));
    }
    let methods = report.methods();
    let rows = report.rows();
    match format {
        TableFormat::Markdown => {
            let mut out = String::new();
            let _ = write!(out, "| Dataset | False labels |");
            for m in &methods {
                let _ = write!(out, " {m} |");
            }
            out.push('\n');
            out.push_str("|---|---:|");
            for _ in &methods {
                out.push_str("---:|");
            }
            out.push('\n');
            for (dataset, k) in rows {
                let cells: Vec<Option<&Cell>> = methods.iter().map(|m| report.cell(&dataset, m, k)).collect();
                let competing: Vec<&Cell> = cells
                    .iter()
                    .flatten()
                    .filter(|c| !is_baseline(&c.key.method))
                    .copied()
                    .collect();
                let pool: Vec<&Cell> = if competing.is_empty() {
                    cells.iter().flatten().copied().collect()
                } else {
                    competing
                };
                let best = pool.iter().map(|c| c.mean).fold(f64::INFINITY, f64::min);
                let _ = write!(out, "| {dataset} | {k} |");
                for c in cells {
                    match c {
                        Some(c) if pool.iter().any(|p| std::ptr::eq(*p, c)) && c.mean == best => {
                            let _ = write!(out, " **{}** |", cell_text(c));
                        }
                        Some(c) => {
                            let _ = write!(out, " {} |", cell_text(c));
                        }
                        None => out.push_str(" - |"),
                    }
                }
                out.push('\n');
            }
            Ok(out)
        }
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["dataset".to_string(), "num_false".to_string()];
            header.extend(methods.iter().cloned());
            w.write_record(&header)?;
            for (dataset, k) in rows {
                let mut rec = vec![dataset.clone(), k.to_string()];
                for m in &methods {
                    rec.push(report.cell(&dataset, m, k).map(cell_text).unwrap_or_default());
                }
                w.write_record(&rec)?;
            }
            csv_string(w)
        }
    }
}

/// Long-form CSV with full-precision statistics, one line per cell.
pub fn cells_csv(report: &BenchReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["dataset", "method", "num_false", "n_trials", "mean", "std"])?;
    for c in &report.cells {
        w.write_record([
            c.key.dataset.clone(),
            c.key.method.clone(),
            c.key.num_false.to_string(),
            c.n_trials.to_string(),
            c.mean.to_string(),
            c.std.to_string(),
        ])?;
    }
    csv_string(w)
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub fraction: f64,
    pub mean_mse: f64,
    pub std: f64,
}

fn check_scaling(points: &[ScalingPoint]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Order("no scaling points".into()));
    }
    for p in points {
        if !(p.fraction > 0.0 && p.fraction <= 1.0) {
            return Err(Error::Domain(format!("fraction {} outside (0, 1]", p.fraction)));
        }
        if !(p.mean_mse.is_finite() && p.std.is_finite()) {
            return Err(Error::NonFinite(format!("scaling point at fraction {}", p.fraction)));
        }
    }
    for w in points.windows(2) {
        if w[1].fraction <= w[0].fraction {
            return Err(Error::Order(format!(
                "fractions must be strictly increasing: {} then {}",
                w[0].fraction, w[1].fraction
            )));
        }
    }
    Ok(())
}

pub fn scaling_csv(points: &[ScalingPoint]) -> Result<String> {
    check_scaling(points)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in points {
        w.serialize(p)?;
    }
    csv_string(w)
}

pub fn parse_scaling_csv(text: &str) -> Result<Vec<ScalingPoint>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<ScalingPoint>, _>>()
        .map_err(Error::from)
}

pub fn scaling_svg(points: &[ScalingPoint]) -> Result<String> {
    check_scaling(points)?;
    let series = Series {
        label: "test MSE".into(),
        points: points.iter().map(|p| (p.fraction, p.mean_mse, p.std)).collect(),
    };
    Ok(line_chart(&[series], "fraction of training data", "test MSE"))
}

/// Writes `<stem>.csv` and `<stem>.svg` into `dir` and returns both paths.
pub fn emit_scaling_curve(points: &[ScalingPoint], dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    let csv = scaling_csv(points)?;
    let svg = scaling_svg(points)?;
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let svg_path = dir.join(format!("{stem}.svg"));
    std::fs::write(&csv_path, csv)?;
    std::fs::write(&svg_path, svg)?;
    Ok((csv_path, svg_path))
}

/// Mean test MSE against |S̄|, one line per method, for one dataset.
pub fn degradation_svg(report: &BenchReport, dataset: &str) -> Option<String> {
    let series: Vec<Series> = report
        .methods()
        .into_iter()
        .filter_map(|m| {
            let points: Vec<(f64, f64, f64)> = report
                .cells
                .iter()
                .filter(|c| c.key.dataset == dataset && c.key.method == m)
                .map(|c| (c.key.num_false as f64, c.mean, c.std))
                .collect();
            (!points.is_empty()).then_some(Series { label: m, points })
        })
        .collect();
    (!series.is_empty()).then(|| line_chart(&series, "number of false labels", "test MSE"))
}

struct Series {
    label: String,
    points: Vec<(f64, f64, f64)>,
}

const WIDTH: f64 = 560.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 9] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf",
];

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

/// Line chart with a ±std band per series.
fn line_chart(series: &[Series], x_label: &str, y_label: &str) -> String {
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, m, s) in all {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(m - s);
        y_hi = y_hi.max(m + s);
    }
    let (x_lo, x_hi) = span(x_lo, x_hi);
    let (y_lo, y_hi) = span(y_lo, y_hi);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for (v, anchor_y) in [(y_lo, py(y_lo)), (y_hi, py(y_hi))] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            anchor_y + 4.0,
            format_2dp(v)
        );
    }
    for v in [x_lo, x_hi] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            px(v),
            TOP + plot_h + 16.0,
            format_2dp(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{y_label}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut band = String::new();
        for &(x, m, sd) in &s.points {
            let _ = write!(band, "{:.2},{:.2} ", px(x), py(m + sd));
        }
        for &(x, m, sd) in s.points.iter().rev() {
            let _ = write!(band, "{:.2},{:.2} ", px(x), py(m - sd));
        }
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            band.trim_end()
        );
        let mut d = String::new();
        for (j, &(x, m, _)) in s.points.iter().enumerate() {
            let _ = write!(d, "{}{:.2} {:.2} ", if j == 0 { 'M' } else { 'L' }, px(x), py(m));
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            d.trim_end()
        );
        for &(x, m, _) in &s.points {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(x), py(m));
        }
        let ly = TOP + 14.0 * i as f64 + 8.0;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 18.0,
            lx + 24.0,
            ly + 4.0,
            s.label
        );
    }
    out.push_str("</svg>\n");
    out
}
