//! Type coverage of prompts, least-squares regression with F-test and
//! Pearson p-values, and the incomplete beta function behind them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompts::{count_prompt_tokens, Prompt};
use crate::textproc::{extract_types, TypeSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("test set has no word types")]
    EmptyTestSet,
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("argument out of domain: {0}")]
    Domain(String),
}

// ---------------------------------------------------------------------------
// Special functions

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64, AnalysisError> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(AnalysisError::Domain(format!("a={a}, b={b}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(AnalysisError::Domain(format!("x={x}")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // the continued fraction converges quickly for x < (a+1)/(a+b+2)
    let value = if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Upper tail P(F > f) of the F(d1, d2) distribution.
pub fn f_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    reg_inc_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f)).expect("valid F arguments")
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    reg_inc_beta(df / 2.0, 0.5, df / (df + t * t)).expect("valid t arguments")
}

/// Quantile of the t distribution for `prob` in (0, 1), by bisection.
pub fn t_quantile(prob: f64, df: f64) -> f64 {
    assert!(prob > 0.0 && prob < 1.0, "probability out of range");
    if prob < 0.5 {
        return -t_quantile(1.0 - prob, df);
    }
    let cdf = |t: f64| 1.0 - t_two_sided_p(t, df) / 2.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    while cdf(hi) < prob {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------------
// Regression

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub f_stat: f64,
    pub f_p_value: f64,
    pub n: usize,
    pub pearson_r: f64,
    /// Two-sided.
    pub pearson_p: f64,
    pub x_mean: f64,
    pub sxx: f64,
    /// Residual standard error, sqrt(SSE / (n - 2)).
    pub residual_se: f64,
}

impl RegressionResult {
    pub fn df(&self) -> (usize, usize) {
        (1, self.n - 2)
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    /// One-sided Pearson p-value in the direction of the observed sign.
    pub fn pearson_p_one_sided(&self) -> f64 {
        self.pearson_p / 2.0
    }
}

struct Moments {
    n: usize,
    x_mean: f64,
    y_mean: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

fn moments(x: &[f64], y: &[f64]) -> Result<Moments, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::Degenerate("x and y differ in length"));
    }
    let n = x.len();
    if n < 3 {
        return Err(AnalysisError::Degenerate("fewer than 3 points"));
    }
    let x_mean = x.iter().sum::<f64>() / n as f64;
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let (dx, dy) = (xi - x_mean, yi - y_mean);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(AnalysisError::Degenerate("x is constant"));
    }
    if syy == 0.0 {
        return Err(AnalysisError::Degenerate("y is constant"));
    }
    Ok(Moments {
        n,
        x_mean,
        y_mean,
        sxx,
        syy,
        sxy,
    })
}

/// Sample correlation and its two-sided p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64), AnalysisError> {
    let m = moments(x, y)?;
    Ok(pearson_from(&m))
}

fn pearson_from(m: &Moments) -> (f64, f64) {
    let r = (m.sxy / (m.sxx * m.syy).sqrt()).clamp(-1.0, 1.0);
    let df = (m.n - 2) as f64;
    if 1.0 - r * r <= f64::EPSILON {
        return (r, 0.0);
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    (r, t_two_sided_p(t, df))
}

/// Univariate ordinary least squares with F-test and Pearson correlation.
pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<RegressionResult, AnalysisError> {
    let m = moments(x, y)?;
    let slope = m.sxy / m.sxx;
    let intercept = m.y_mean - slope * m.x_mean;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    let sst = m.syy;
    let df2 = (m.n - 2) as f64;
    let r_squared = (1.0 - sse / sst).clamp(0.0, 1.0);
    let (f_stat, f_p_value) = if sse <= sst * 1e-15 {
        (f64::INFINITY, 0.0)
    } else {
        let f = (sst - sse) / (sse / df2);
        (f, f_sf(f, 1.0, df2))
    };
    let (pearson_r, pearson_p) = pearson_from(&m);
    Ok(RegressionResult {
        slope,
        intercept,
        r_squared,
        f_stat,
        f_p_value,
        n: m.n,
        pearson_r,
        pearson_p,
        x_mean: m.x_mean,
        sxx: m.sxx,
        residual_se: (sse / df2).sqrt(),
    })
}

/// Regression of ChrF++ on prompt token counts.
pub fn token_regression(points: &[(f64, f64)]) -> Result<RegressionResult, AnalysisError> {
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    ols_fit(&x, &y)
}

/// One row of a fitted line with its confidence band for the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub x: f64,
    pub fit: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn confidence_band(fit: &RegressionResult, xs: &[f64], level: f64) -> Vec<BandPoint> {
    let t = t_quantile(0.5 + level / 2.0, (fit.n - 2) as f64);
    xs.iter()
        .map(|&x| {
            let y = fit.predict(x);
            let half = t
                * fit.residual_se
                * (1.0 / fit.n as f64 + (x - fit.x_mean).powi(2) / fit.sxx).sqrt();
            BandPoint {
                x,
                fit: y,
                lower: y - half,
                upper: y + half,
            }
        })
        .collect()
}

/// Scatter data for external plotting: observed points, then `steps + 1`
/// grid rows spanning the x range with the fit and its 95% band.
pub fn scatter_csv(points: &[(f64, f64)], fit: &RegressionResult, steps: usize) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "x", "y", "fit", "lower", "upper"]).unwrap();
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    for (b, &(_, y)) in confidence_band(fit, &xs, 0.95).iter().zip(points) {
        w.serialize(("point", b.x, Some(y), b.fit, b.lower, b.upper)).unwrap();
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let steps = steps.max(1);
    let grid: Vec<f64> = (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .collect();
    for b in confidence_band(fit, &grid, 0.95) {
        w.serialize(("line", b.x, None::<f64>, b.fit, b.lower, b.upper)).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

/// Scientific notation with two significant digits, e.g. `2.3e-7`.
pub fn format_p(p: f64) -> String {
    format!("{p:.1e}")
}

pub fn describe_regression(fit: &RegressionResult) -> String {
    let (d1, d2) = fit.df();
    format!(
        "F({d1},{d2})={:.1}, R^2={:.2}, p={}; r={:.2}, p={} (two-sided), {} (one-sided)",
        fit.f_stat,
        fit.r_squared,
        format_p(fit.f_p_value),
        fit.pearson_r,
        format_p(fit.pearson_p),
        format_p(fit.pearson_p_one_sided()),
    )
}

// ---------------------------------------------------------------------------
// Coverage

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub setting: String,
    pub direction: String,
    pub oov_count: usize,
    pub coverage_pct: f64,
    /// Mean data-token count over the prompts.
    pub prompt_tokens: usize,
    pub test_types: usize,
}

/// Coverage of the test-set target types by the data in `prompts`.
///
/// Settings with one prompt per example (retrieval) pass all prompts; their
/// covered types are the union and the token count is the mean.
pub fn coverage_of<S: AsRef<str>>(
    setting: &str,
    direction: &str,
    prompts: &[&Prompt],
    test_targets: &[S],
) -> Result<CoverageReport, AnalysisError> {
    let test_types = extract_types(test_targets);
    if test_types.is_empty() {
        return Err(AnalysisError::EmptyTestSet);
    }
    let mut prompt_types = TypeSet::new();
    let mut tokens = 0usize;
    for p in prompts {
        let content: Vec<&str> = p.coverage_content().collect();
        prompt_types.extend(extract_types(&content));
        tokens += count_prompt_tokens(p);
    }
    let covered = test_types.intersection(&prompt_types).count();
    Ok(CoverageReport {
        setting: setting.to_string(),
        direction: direction.to_string(),
        oov_count: test_types.len() - covered,
        coverage_pct: 100.0 * covered as f64 / test_types.len() as f64,
        prompt_tokens: if prompts.is_empty() {
            0
        } else {
            (tokens as f64 / prompts.len() as f64).round() as usize
        },
        test_types: test_types.len(),
    })
}

pub fn coverage<S: AsRef<str>>(prompt: &Prompt, test_targets: &[S]) -> Result<CoverageReport, AnalysisError> {
    coverage_of(&prompt.setting, &prompt.direction.label(), &[prompt], test_targets)
}

// ---------------------------------------------------------------------------
// Published reference points

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionPoint {
    pub oov: usize,
    pub coverage: f64,
    pub chrf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub setting: String,
    pub label: String,
    pub tokens: usize,
    #[serde(rename = "eng-kgv")]
    pub eng_kgv: DirectionPoint,
    #[serde(rename = "kgv-eng")]
    pub kgv_eng: DirectionPoint,
}

impl ReferenceRow {
    pub fn point(&self, direction: &str) -> Option<&DirectionPoint> {
        match direction {
            "eng-kgv" => Some(&self.eng_kgv),
            "kgv-eng" => Some(&self.kgv_eng),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct ReferenceFile {
    rows: Vec<ReferenceRow>,
}

/// The published eng<->kgv rows: ChrF++, OOV, coverage and prompt tokens.
pub fn reference_rows() -> Vec<ReferenceRow> {
    let file: ReferenceFile = serde_json::from_str(include_str!("../data/reference_points.json"))
        .expect("bundled reference points");
    file.rows
}

/// (coverage, ChrF++) for every published setting in `direction`.
pub fn coverage_points(rows: &[ReferenceRow], direction: &str) -> Vec<(f64, f64)> {
    rows.iter()
        .filter_map(|r| r.point(direction).map(|p| (p.coverage, p.chrf)))
        .collect()
}

pub const BOOK_SETTINGS: [&str; 3] = ["book_all", "book_para", "book_non_para"];

/// (tokens, ChrF++) for the three book subsets.
pub fn token_points(rows: &[ReferenceRow], direction: &str) -> Vec<(f64, f64)> {
    BOOK_SETTINGS
        .iter()
        .filter_map(|s| rows.iter().find(|r| r.setting == *s))
        .filter_map(|r| r.point(direction).map(|p| (r.tokens as f64, p.chrf)))
        .collect()
}

// ---------------------------------------------------------------------------
// Text tables

/// Plain-text table with aligned columns; the first column is left-aligned,
/// the rest right-aligned.
#[derive(Debug, Clone, Default)]
pub struct TextTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl TextTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        TextTable {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) {
        self.rows.push(cells.into_iter().map(Into::into).collect());
    }

    pub fn render(&self) -> String {
        let ncol = self.header.len();
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (i, c) in row.iter().enumerate().take(ncol) {
                widths[i] = widths[i].max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let mut out = String::new();
            for (i, w) in widths.iter().enumerate() {
                let cell = cells.get(i).map(String::as_str).unwrap_or("");
                if i > 0 {
                    out.push_str("  ");
                }
                if i == 0 {
                    let _ = write!(out, "{cell:<w$}");
                } else {
                    let _ = write!(out, "{cell:>w$}");
                }
            }
            out.trim_end().to_string()
        };
        let mut out = line(&self.header);
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (ncol.saturating_sub(1))));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}

/// Coverage table: OOV and coverage per direction plus
/// prompt tokens, one row per setting in first-seen order.
pub fn render_coverage_table(reports: &[CoverageReport], directions: &[&str]) -> String {
    let mut header = vec!["Setting".to_string()];
    for d in directions {
        header.push(format!("{d} OOV"));
        header.push(format!("{d} Cov%"));
    }
    header.push("Tokens".into());
    let mut table = TextTable::new(header);
    let mut settings: Vec<&str> = Vec::new();
    for r in reports {
        if !settings.contains(&r.setting.as_str()) {
            settings.push(&r.setting);
        }
    }
    for s in settings {
        let mut row = vec![s.to_string()];
        let mut tokens = None;
        for d in directions {
            match reports.iter().find(|r| r.setting == s && r.direction == *d) {
                Some(r) => {
                    row.push(r.oov_count.to_string());
                    row.push(format!("{:.1}", r.coverage_pct));
                    tokens.get_or_insert(r.prompt_tokens);
                }
                None => {
                    row.push("--".into());
                    row.push("--".into());
                }
            }
        }
        row.push(tokens.map_or("--".into(), |t| t.to_string()));
        table.row(row);
    }
    table.render()
}
