//! Tabular property reports with pass/fail verdicts.

use serde::Serialize;

/// Ratio `max/min` below which a finite-window sequence counts as bounded.
pub const BOUNDED_RATIO: f64 = 10.0;

/// Floor for quantities that must stay bounded away from zero.
pub const POSITIVE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    /// Which statement the check exercises, e.g. "Lemma 1.1".
    pub anchor: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub title: String,
    pub anchor: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub verdicts: Vec<Verdict>,
    /// Observations that are reported but do not gate `passed()`.
    pub notes: Vec<String>,
}

impl PropertyReport {
    pub fn new(title: impl Into<String>, anchor: impl Into<String>, columns: Vec<String>) -> Self {
        Self {
            title: title.into(),
            anchor: anchor.into(),
            columns,
            rows: Vec::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn push(&mut self, verdict: Verdict) {
        self.verdicts.push(verdict);
    }

    /// Verdict `max/min < BOUNDED_RATIO` over the last `tail` entries of a column.
    pub fn bounded_tail(&mut self, column: &str, tail: usize, anchor: &str) {
        let values = self.column(column).unwrap_or_default();
        let ratio = tail_ratio(&values, tail);
        self.push(Verdict {
            name: format!("bounded:{column}"),
            anchor: anchor.into(),
            passed: ratio.is_finite() && ratio < BOUNDED_RATIO,
            value: ratio,
            threshold: BOUNDED_RATIO,
            detail: format!("max/min of |{column}| over last {tail} values"),
        });
    }

    /// Verdict `min ≥ floor` over the last `tail` entries of a column.
    pub fn bounded_below(&mut self, column: &str, tail: usize, floor: f64, anchor: &str) {
        let values = self.column(column).unwrap_or_default();
        let start = values.len().saturating_sub(tail);
        let min = values[start..].iter().cloned().fold(f64::INFINITY, f64::min);
        self.push(Verdict {
            name: format!("positive:{column}"),
            anchor: anchor.into(),
            passed: min.is_finite() && min >= floor,
            value: min,
            threshold: floor,
            detail: format!("min of {column} over last {tail} values"),
        });
    }
}

/// `max|x| / min|x|` over the last `tail` values; infinite for empty or zero entries.
pub fn tail_ratio(values: &[f64], tail: usize) -> f64 {
    let start = values.len().saturating_sub(tail);
    let window = &values[start..];
    if window.is_empty() {
        return f64::INFINITY;
    }
    let max = window.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let min = window.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Least-squares slope of `log|y|` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && b.abs() > 0.0)
        .map(|(a, b)| (a.ln(), b.abs().ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
