//! Relative error of reassembled energies against whole-molecule references.

use std::io::Write;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("{0}: reference energy is zero")]
    ZeroReference(String),
    #[error("{0}: non-finite energy")]
    NonFinite(String),
    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },
}

/// |Em − GT| / |GT| · 100.
pub fn relative_error_pct(gt: f64, em: f64) -> Result<f64, MetricsError> {
    if !gt.is_finite() || !em.is_finite() {
        return Err(MetricsError::NonFinite(format!("GT={gt} Em={em}")));
    }
    if gt == 0.0 {
        return Err(MetricsError::ZeroReference(format!("Em={em}")));
    }
    Ok((em - gt).abs() / gt.abs() * 100.0)
}

pub fn mean(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::TooFew { needed: 1, got: 0 });
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary, MetricsError> {
    let n = values.len();
    if n < 2 {
        return Err(MetricsError::TooFew { needed: 2, got: n });
    }
    let m = mean(values)?;
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(Summary { n, mean: m, std: var.sqrt() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub label: String,
    pub gt: f64,
    pub em: f64,
    pub re_pct: f64,
}

impl ErrorRow {
    pub fn new(label: impl Into<String>, gt: f64, em: f64) -> Result<Self, MetricsError> {
        let label = label.into();
        let re_pct = relative_error_pct(gt, em).map_err(|e| match e {
            MetricsError::ZeroReference(_) => MetricsError::ZeroReference(label.clone()),
            MetricsError::NonFinite(_) => MetricsError::NonFinite(label.clone()),
            other => other,
        })?;
        Ok(Self { label, gt, em, re_pct })
    }
}

/// A reassembled energy with no reference to compare against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnreferencedRow {
    pub label: String,
    pub em: f64,
}

/// Per-molecule errors plus their mean and sample deviation. Rows are kept
/// sorted by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    /// Absent for fewer than two rows.
    pub summary: Option<Summary>,
    /// Rows marked GT-unavailable; excluded from the summary.
    #[serde(default)]
    pub unreferenced: Vec<UnreferencedRow>,
}

impl ErrorReport {
    pub fn new(rows: Vec<ErrorRow>) -> Self {
        Self::with_unreferenced(rows, Vec::new())
    }

    pub fn with_unreferenced(mut rows: Vec<ErrorRow>, mut unreferenced: Vec<UnreferencedRow>) -> Self {
        rows.sort_by(|a, b| a.label.cmp(&b.label));
        unreferenced.sort_by(|a, b| a.label.cmp(&b.label));
        let re: Vec<f64> = rows.iter().map(|r| r.re_pct).collect();
        let summary = summarize(&re).ok();
        Self { rows, summary, unreferenced }
    }

    /// CSV with columns label, GT_Ha, Em_Ha, RE_pct; five decimals. Rows
    /// without a reference print `GT-unavailable` in both GT and RE columns.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut lines: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.label.clone(),
                    format!("{:.5}", r.gt),
                    format!("{:.5}", r.em),
                    format!("{:.5}", r.re_pct),
                ]
            })
            .collect();
        lines.extend(self.unreferenced.iter().map(|r| {
            [
                r.label.clone(),
                "GT-unavailable".to_string(),
                format!("{:.5}", r.em),
                "GT-unavailable".to_string(),
            ]
        }));
        lines.sort_by(|a, b| a[0].cmp(&b[0]));
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["label", "GT_Ha", "Em_Ha", "RE_pct"])?;
        for l in &lines {
            out.write_record(l)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
