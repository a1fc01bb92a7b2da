//! Accuracy evaluation of a reader against manual measurements. Error
//! metrics cover each direction; hysteresis and Bland–Altman agreement
//! compare aspirating with dispensing. Results export as CSV plus SVG.
//!
//! The bundled syringe benchmark (24 truth points from 0 to 4.6 ml, read
//! while aspirating and while dispensing) is available as [`benchmark`].

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("series is empty")]
    Empty,
    #[error("truth value {0} is not finite")]
    NonFiniteTruth(f64),
    #[error("need at least {need} pairs, got {got}")]
    TooFewPairs { need: usize, got: usize },
    #[error("all truth values are equal; R² is undefined")]
    ConstantTruth,
    #[error("series are not on the same truth grid")]
    GridMismatch,
    #[error("malformed measurements: {0}")]
    Malformed(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

/// Whether the indicator was moving up the scale or back down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Aspirating,
    Dispensing,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Aspirating => "aspirating",
            Direction::Dispensing => "dispensing",
        }
    }
}

/// `(truth, measured)` pairs. Never empty; truths are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSeries {
    direction: Direction,
    pairs: Vec<(f64, f64)>,
}

impl MeasurementSeries {
    pub fn new(direction: Direction, pairs: Vec<(f64, f64)>) -> Result<Self, EvalError> {
        if pairs.is_empty() {
            return Err(EvalError::Empty);
        }
        if let Some(&(t, _)) = pairs.iter().find(|(t, _)| !t.is_finite()) {
            return Err(EvalError::NonFiniteTruth(t));
        }
        Ok(Self { direction, pairs })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().map(|(t, m)| m - t)
    }
}

const BENCHMARK: [(f64, f64, f64); 24] = [
    (0.00, 0.00, 0.00),
    (0.20, 0.20, 0.26),
    (0.40, 0.36, 0.49),
    (0.60, 0.59, 0.56),
    (0.80, 0.86, 0.75),
    (1.00, 1.08, 0.99),
    (1.20, 1.21, 1.12),
    (1.40, 1.46, 1.49),
    (1.60, 1.63, 1.58),
    (1.80, 1.82, 1.70),
    (2.00, 1.94, 1.89),
    (2.20, 2.07, 2.07),
    (2.40, 2.38, 2.35),
    (2.60, 2.55, 2.54),
    (2.80, 2.74, 2.72),
    (3.00, 2.90, 2.92),
    (3.20, 3.11, 3.05),
    (3.40, 3.33, 3.34),
    (3.60, 3.46, 3.49),
    (3.80, 3.86, 3.64),
    (4.00, 3.92, 3.81),
    (4.20, 3.97, 3.99),
    (4.40, 4.30, 4.22),
    (4.60, 4.43, 4.46),
];

/// The syringe benchmark: `(aspirating, dispensing)` in ml.
pub fn benchmark() -> (MeasurementSeries, MeasurementSeries) {
    let asp = BENCHMARK.iter().map(|&(t, a, _)| (t, a)).collect();
    let disp = BENCHMARK.iter().map(|&(t, _, d)| (t, d)).collect();
    (
        MeasurementSeries::new(Direction::Aspirating, asp).expect("fixture is valid"),
        MeasurementSeries::new(Direction::Dispensing, disp).expect("fixture is valid"),
    )
}

/// Error summary of one series. `std_abs_err` is the population standard
/// deviation of |e|, the definition that matches the published benchmark
/// figures; `std_signed_err` (population sd of e) is kept alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mae: f64,
    pub rmse: f64,
    pub bias: f64,
    pub std_abs_err: f64,
    pub std_signed_err: f64,
    pub r2: f64,
    pub max_abs_err: f64,
}

impl EvalReport {
    pub fn rounded(&self, decimals: i32) -> Self {
        let r = |v: f64| crate::calib::round_decimals(v, decimals);
        Self {
            mae: r(self.mae),
            rmse: r(self.rmse),
            bias: r(self.bias),
            std_abs_err: r(self.std_abs_err),
            std_signed_err: r(self.std_signed_err),
            r2: r(self.r2),
            max_abs_err: r(self.max_abs_err),
        }
    }
}

/// Full-precision metrics.
pub fn error_metrics_exact(s: &MeasurementSeries) -> Result<EvalReport, EvalError> {
    if s.len() < 2 {
        return Err(EvalError::TooFewPairs { need: 2, got: s.len() });
    }
    let n = s.len() as f64;
    let errs: Vec<f64> = s.errors().collect();
    let mean = |it: &mut dyn Iterator<Item = f64>| it.sum::<f64>() / n;
    let mae = mean(&mut errs.iter().map(|e| e.abs()));
    let mse = mean(&mut errs.iter().map(|e| e * e));
    let bias = mean(&mut errs.iter().copied());
    let var_abs = mean(&mut errs.iter().map(|e| (e.abs() - mae).powi(2)));
    let var_signed = mean(&mut errs.iter().map(|e| (e - bias).powi(2)));
    let t_mean = mean(&mut s.pairs.iter().map(|p| p.0));
    let ss_tot: f64 = s.pairs.iter().map(|(t, _)| (t - t_mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(EvalError::ConstantTruth);
    }
    Ok(EvalReport {
        mae,
        rmse: mse.sqrt(),
        bias,
        std_abs_err: var_abs.sqrt(),
        std_signed_err: var_signed.sqrt(),
        r2: 1.0 - mse * n / ss_tot,
        max_abs_err: errs.iter().fold(0.0, |m, e| m.max(e.abs())),
    })
}

/// Metrics rounded to 3 decimals, as reported.
pub fn error_metrics(s: &MeasurementSeries) -> Result<EvalReport, EvalError> {
    Ok(error_metrics_exact(s)?.rounded(3))
}

fn check_grid(a: &MeasurementSeries, b: &MeasurementSeries) -> Result<(), EvalError> {
    if a.len() != b.len() || a.pairs.iter().zip(&b.pairs).any(|(p, q)| p.0 != q.0) {
        return Err(EvalError::GridMismatch);
    }
    Ok(())
}

/// Area enclosed by the loop that runs along `asp` in truth order and
/// back along `disp`.
pub fn hysteresis_area(asp: &MeasurementSeries, disp: &MeasurementSeries) -> Result<f64, EvalError> {
    check_grid(asp, disp)?;
    let ring: Vec<(f64, f64)> = asp.pairs.iter().chain(disp.pairs.iter().rev()).copied().collect();
    let twice: f64 = (0..ring.len())
        .map(|i| {
            let (x0, y0) = ring[i];
            let (x1, y1) = ring[(i + 1) % ring.len()];
            x0 * y1 - x1 * y0
        })
        .sum();
    Ok(twice.abs() / 2.0)
}

/// Limits of agreement use the sample (n−1) sd; a single pair has sd 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlandAltman {
    pub mean_diff: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
    pub outlier_count: usize,
    /// `(pair mean, asp − disp)` per truth point.
    pub points: Vec<(f64, f64)>,
}

/// Agreement between the two directions, with limits at the mean
/// difference ± 1.96 sample standard deviations.
///
/// On the benchmark data two differences fall outside the limits:
/// −0.13 at 0.4 ml and +0.22 at 3.8 ml.
pub fn bland_altman(asp: &MeasurementSeries, disp: &MeasurementSeries) -> Result<BlandAltman, EvalError> {
    check_grid(asp, disp)?;
    let points: Vec<(f64, f64)> = asp
        .pairs
        .iter()
        .zip(&disp.pairs)
        .map(|(a, d)| ((a.1 + d.1) / 2.0, a.1 - d.1))
        .collect();
    let n = points.len() as f64;
    let mean_diff = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sd = if points.len() < 2 {
        0.0
    } else {
        (points.iter().map(|p| (p.1 - mean_diff).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let (lower, upper) = (mean_diff - 1.96 * sd, mean_diff + 1.96 * sd);
    let outlier_count = points.iter().filter(|p| p.1 < lower || p.1 > upper).count();
    Ok(BlandAltman {
        mean_diff,
        sd,
        lower,
        upper,
        outlier_count,
        points,
    })
}

/// Reads `truth,asp,disp` rows (header required, extra columns ignored).
/// Stops at the first blank record, so an exported `metrics.csv` reads
/// back as its per-point block.
pub fn read_measurements<R: Read>(reader: R) -> Result<(MeasurementSeries, MeasurementSeries), EvalError> {
    #[derive(Deserialize)]
    struct Row {
        truth: f64,
        asp: f64,
        disp: f64,
    }
    let bad = |e: csv::Error| EvalError::Malformed(e.to_string());
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers().map_err(bad)?.clone();
    let (mut asp, mut disp) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(bad)?;
        if rec.iter().all(str::is_empty) {
            break;
        }
        let row: Row = rec.deserialize(Some(&headers)).map_err(bad)?;
        asp.push((row.truth, row.asp));
        disp.push((row.truth, row.disp));
    }
    Ok((
        MeasurementSeries::new(Direction::Aspirating, asp)?,
        MeasurementSeries::new(Direction::Dispensing, disp)?,
    ))
}

/// Reads one direction from `truth,measured` rows (header required).
pub fn read_series<R: Read>(reader: R, direction: Direction) -> Result<MeasurementSeries, EvalError> {
    #[derive(Deserialize)]
    struct Row {
        truth: f64,
        measured: f64,
    }
    let bad = |e: csv::Error| EvalError::Malformed(e.to_string());
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let pairs = rdr
        .deserialize::<Row>()
        .map(|r| r.map(|r| (r.truth, r.measured)).map_err(bad))
        .collect::<Result<Vec<_>, _>>()?;
    MeasurementSeries::new(direction, pairs)
}

/// The six report panels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plot {
    MeasuredVsTruthAsp,
    MeasuredVsTruthDisp,
    ErrorVsTruth,
    Hysteresis,
    AspVsDisp,
    BlandAltman,
}

impl Plot {
    pub const ALL: [Plot; 6] = [
        Plot::MeasuredVsTruthAsp,
        Plot::MeasuredVsTruthDisp,
        Plot::ErrorVsTruth,
        Plot::Hysteresis,
        Plot::AspVsDisp,
        Plot::BlandAltman,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            Plot::MeasuredVsTruthAsp => "a_measured_vs_truth_aspirating.svg",
            Plot::MeasuredVsTruthDisp => "b_measured_vs_truth_dispensing.svg",
            Plot::ErrorVsTruth => "c_error_vs_truth.svg",
            Plot::Hysteresis => "d_hysteresis.svg",
            Plot::AspVsDisp => "e_aspirating_vs_dispensing.svg",
            Plot::BlandAltman => "f_bland_altman.svg",
        }
    }
}

/// Everything the report needs, computed once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub asp: MeasurementSeries,
    pub disp: MeasurementSeries,
    pub asp_report: EvalReport,
    pub disp_report: EvalReport,
    pub hysteresis_area: f64,
    pub bland_altman: BlandAltman,
}

impl Evaluation {
    pub fn new(asp: MeasurementSeries, disp: MeasurementSeries) -> Result<Self, EvalError> {
        Ok(Self {
            asp_report: error_metrics_exact(&asp)?,
            disp_report: error_metrics_exact(&disp)?,
            hysteresis_area: hysteresis_area(&asp, &disp)?,
            bland_altman: bland_altman(&asp, &disp)?,
            asp,
            disp,
        })
    }

    /// Fixed-width metric table, values at 3 decimals.
    pub fn summary_table(&self) -> String {
        let (a, d) = (self.asp_report.rounded(3), self.disp_report.rounded(3));
        let mut s = format!("{:<12}{:>12}{:>12}\n", "metric", "aspirating", "dispensing");
        for (name, x, y) in metric_rows(&a, &d) {
            let _ = writeln!(s, "{name:<12}{x:>12.3}{y:>12.3}");
        }
        let ba = &self.bland_altman;
        let _ = writeln!(s, "hysteresis area {:.4}", self.hysteresis_area);
        let _ = writeln!(
            s,
            "bland-altman mean {:.3} limits [{:.3}, {:.3}] outliers {}",
            ba.mean_diff, ba.lower, ba.upper, ba.outlier_count
        );
        s
    }

    pub fn csv(&self) -> Result<String, EvalError> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        let io = |e: csv::Error| EvalError::Io(std::io::Error::other(e));
        w.write_record(["truth", "asp", "disp", "err_asp", "err_disp", "diff"]).map_err(io)?;
        for ((t, a), (_, d)) in self.asp.pairs.iter().zip(&self.disp.pairs) {
            let row = [*t, *a, *d, a - t, d - t, a - d].map(|v| format!("{v:.6}"));
            w.write_record(&row).map_err(io)?;
        }
        w.write_record([""; 0]).map_err(io)?;
        w.write_record(["metric", "aspirating", "dispensing"]).map_err(io)?;
        for (name, x, y) in metric_rows(&self.asp_report, &self.disp_report) {
            w.write_record([name.to_string(), format!("{x:.6}"), format!("{y:.6}")]).map_err(io)?;
        }
        let ba = &self.bland_altman;
        let extra = [
            ("hysteresis_area", self.hysteresis_area),
            ("ba_mean_diff", ba.mean_diff),
            ("ba_sd", ba.sd),
            ("ba_lower", ba.lower),
            ("ba_upper", ba.upper),
            ("ba_outlier_count", ba.outlier_count as f64),
        ];
        for (name, v) in extra {
            w.write_record([name.to_string(), format!("{v:.6}")]).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| EvalError::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn svg(&self, plot: Plot) -> String {
        let asp = self.asp.pairs();
        let disp = self.disp.pairs();
        let errs = |s: &[(f64, f64)]| s.iter().map(|(t, m)| (*t, m - t)).collect::<Vec<_>>();
        let identity = |s: &[(f64, f64)]| {
            let lo = s.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let hi = s.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
            Series::line("ideal", "#999999", vec![(lo, lo), (hi, hi)])
        };
        match plot {
            Plot::MeasuredVsTruthAsp => Chart::new("Measured vs truth (aspirating)", "truth", "measured")
                .with(identity(asp))
                .with(Series::points("aspirating", BLUE, asp.to_vec()))
                .render(),
            Plot::MeasuredVsTruthDisp => Chart::new("Measured vs truth (dispensing)", "truth", "measured")
                .with(identity(disp))
                .with(Series::points("dispensing", ORANGE, disp.to_vec()))
                .render(),
            Plot::ErrorVsTruth => Chart::new("Error vs truth", "truth", "measured - truth")
                .with(Series::line("zero", "#999999", vec![(asp[0].0, 0.0), (asp[asp.len() - 1].0, 0.0)]))
                .with(Series::points("aspirating", BLUE, errs(asp)))
                .with(Series::points("dispensing", ORANGE, errs(disp)))
                .render(),
            Plot::Hysteresis => Chart::new("Hysteresis", "truth", "measured")
                .with(Series::line("aspirating", BLUE, asp.to_vec()))
                .with(Series::line("dispensing", ORANGE, disp.to_vec()))
                .render(),
            Plot::AspVsDisp => {
                let pts: Vec<(f64, f64)> = asp.iter().zip(disp).map(|(a, d)| (a.1, d.1)).collect();
                Chart::new("Aspirating vs dispensing", "aspirating", "dispensing")
                    .with(identity(&pts))
                    .with(Series::points("readings", BLUE, pts))
                    .render()
            }
            Plot::BlandAltman => {
                let ba = &self.bland_altman;
                let xs = ba.points.iter().map(|p| p.0);
                let lo = xs.clone().fold(f64::INFINITY, f64::min);
                let hi = xs.fold(f64::NEG_INFINITY, f64::max);
                let hline = |name: &'static str, y: f64| Series::line(name, "#999999", vec![(lo, y), (hi, y)]);
                Chart::new("Bland-Altman", "mean of pair", "aspirating - dispensing")
                    .with(hline("mean", ba.mean_diff))
                    .with(hline("-1.96 sd", ba.lower))
                    .with(hline("+1.96 sd", ba.upper))
                    .with(Series::points("difference", BLUE, ba.points.clone()))
                    .render()
            }
        }
    }
}

fn metric_rows(a: &EvalReport, d: &EvalReport) -> [(&'static str, f64, f64); 7] {
    [
        ("mae", a.mae, d.mae),
        ("rmse", a.rmse, d.rmse),
        ("bias", a.bias, d.bias),
        ("std_abs_err", a.std_abs_err, d.std_abs_err),
        ("std_err", a.std_signed_err, d.std_signed_err),
        ("r2", a.r2, d.r2),
        ("max_abs_err", a.max_abs_err, d.max_abs_err),
    ]
}

/// Writes `metrics.csv` and one SVG per requested plot into `dir`,
/// overwriting existing files. Returns the written paths.
pub fn export_report(eval: &Evaluation, plots: &[Plot], dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(plots.len() + 1);
    let csv_path = dir.join("metrics.csv");
    fs::write(&csv_path, eval.csv()?)?;
    written.push(csv_path);
    for &p in plots {
        let path = dir.join(p.file_name());
        fs::write(&path, eval.svg(p))?;
        written.push(path);
    }
    Ok(written)
}

const BLUE: &str = "#1f5fbf";
const ORANGE: &str = "#d9731a";

struct Series {
    name: &'static str,
    color: &'static str,
    joined: bool,
    pts: Vec<(f64, f64)>,
}

impl Series {
    fn points(name: &'static str, color: &'static str, pts: Vec<(f64, f64)>) -> Self {
        Self { name, color, joined: false, pts }
    }
    fn line(name: &'static str, color: &'static str, pts: Vec<(f64, f64)>) -> Self {
        Self { name, color, joined: true, pts }
    }
}

/// Minimal self-contained scatter/line chart.
struct Chart {
    title: &'static str,
    xlabel: &'static str,
    ylabel: &'static str,
    series: Vec<Series>,
}

const W: f64 = 480.0;
const H: f64 = 360.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;

impl Chart {
    fn new(title: &'static str, xlabel: &'static str, ylabel: &'static str) -> Self {
        Self {
            title,
            xlabel,
            ylabel,
            series: Vec::new(),
        }
    }

    fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let all = self.series.iter().flat_map(|s| s.pts.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let pad = |lo: f64, hi: f64| {
            let span = if hi > lo { hi - lo } else { 1.0 };
            (lo - 0.05 * span, hi + 0.05 * span)
        };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        (x0, x1, y0, y1)
    }

    fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
        let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            self.title
        );
        let (bx0, by0, bx1, by1) = (LEFT, TOP, W - RIGHT, H - BOTTOM);
        let _ = writeln!(
            s,
            r#"<rect x="{bx0}" y="{by0}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
            bx1 - bx0,
            by1 - by0
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xv:.2}</text>"#,
                px(xv),
                by1 + 16.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{yv:.2}</text>"#,
                bx0 - 6.0,
                py(yv) + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            (bx0 + bx1) / 2.0,
            H - 10.0,
            self.xlabel
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
            (by0 + by1) / 2.0,
            (by0 + by1) / 2.0,
            self.ylabel
        );
        for (k, ser) in self.series.iter().enumerate() {
            if ser.joined {
                let pts: Vec<String> = ser.pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                    pts.join(" "),
                    ser.color
                );
            } else {
                for &(x, y) in &ser.pts {
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                        px(x),
                        py(y),
                        ser.color
                    );
                }
            }
            let ly = by0 + 14.0 + 14.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                bx0 + 8.0,
                ly - 9.0,
                ser.color,
                bx0 + 22.0,
                ly,
                ser.name
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
