use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::run::EvalRun;
use super::EvalError;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One method's row. Values are percentages rounded to one decimal; deltas
/// are differences of the rounded values, so a row always reads consistently
/// (16.0 and 18.3 give +2.3).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub pass_at_1: f64,
    pub pass_at_1_delta: Option<f64>,
    pub similarity: Option<f64>,
    pub similarity_delta: Option<f64>,
    pub best_pass_at_1: bool,
    pub best_similarity: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub suite_id: String,
    pub baseline: String,
    /// Baseline first, then variants in the given order.
    pub rows: Vec<ReportRow>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

/// A ratio as tenths of a percent.
fn tenths(ratio: f64) -> i64 {
    (ratio * 1000.0).round() as i64
}

fn from_tenths(t: i64) -> f64 {
    t as f64 / 10.0
}

/// Signed percentage-point delta with one decimal: `+2.3`, `-1.4`, `0.0`.
pub fn format_delta(delta: f64) -> String {
    let t = (delta * 10.0).round() as i64;
    match t {
        0 => "0.0".into(),
        t if t > 0 => format!("+{:.1}", from_tenths(t)),
        t => format!("-{:.1}", from_tenths(-t)),
    }
}

/// Compares every variant with `baseline`. All runs must come from the same
/// suite. Per-column maxima (ties included, baseline included) are marked.
pub fn build_report(baseline: &EvalRun, variants: &[EvalRun]) -> Result<EvalReport, EvalError> {
    if let Some(v) = variants.iter().find(|v| v.suite_id != baseline.suite_id) {
        return Err(EvalError::SuiteMismatch {
            expected: baseline.suite_id.clone(),
            found: v.suite_id.clone(),
        });
    }
    let base_pass = tenths(baseline.pass_at_1);
    let base_sim = baseline.mean_similarity.map(tenths);
    let runs: Vec<&EvalRun> = std::iter::once(baseline).chain(variants).collect();
    let max_pass = runs.iter().map(|r| tenths(r.pass_at_1)).max();
    let max_sim = runs.iter().filter_map(|r| r.mean_similarity.map(tenths)).max();

    let rows = runs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let pass = tenths(r.pass_at_1);
            let sim = r.mean_similarity.map(tenths);
            let is_variant = i > 0;
            ReportRow {
                method: r.label.clone(),
                pass_at_1: from_tenths(pass),
                pass_at_1_delta: is_variant.then(|| from_tenths(pass - base_pass)),
                similarity: sim.map(from_tenths),
                similarity_delta: match (is_variant, sim, base_sim) {
                    (true, Some(s), Some(b)) => Some(from_tenths(s - b)),
                    _ => None,
                },
                best_pass_at_1: Some(pass) == max_pass,
                best_similarity: sim.is_some() && sim == max_sim,
            }
        })
        .collect();
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        suite_id: baseline.suite_id.clone(),
        baseline: baseline.label.clone(),
        rows,
        metadata: BTreeMap::new(),
    })
}

fn cell(value: Option<f64>, delta: Option<f64>, best: bool) -> String {
    let Some(v) = value else {
        return "-".into();
    };
    let mut s = format!("{v:.1}");
    if let Some(d) = delta {
        s += &format!(" ({})", format_delta(d));
    }
    if best {
        s.push('*');
    }
    s
}

impl EvalReport {
    /// Aligned plain-text table; `*` marks the best value in each column.
    pub fn to_text(&self) -> String {
        let mut table = vec![["method".to_string(), "Pass@1".into(), "Sim.".into()]];
        for r in &self.rows {
            table.push([
                r.method.clone(),
                cell(Some(r.pass_at_1), r.pass_at_1_delta, r.best_pass_at_1),
                cell(r.similarity, r.similarity_delta, r.best_similarity),
            ]);
        }
        let widths: Vec<usize> = (0..3)
            .map(|c| table.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &table {
            let line: String = row
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}  "))
                .collect();
            out += line.trim_end();
            out.push('\n');
        }
        out
    }

    /// One row per method, deltas empty for the baseline.
    pub fn to_csv(&self) -> Result<String, EvalError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.1}")).unwrap_or_default();
        w.write_record([
            "method",
            "pass_at_1",
            "pass_at_1_delta",
            "similarity",
            "similarity_delta",
            "best_pass_at_1",
            "best_similarity",
        ])
        .map_err(|e| EvalError::Config(e.to_string()))?;
        for r in &self.rows {
            w.write_record([
                r.method.clone(),
                format!("{:.1}", r.pass_at_1),
                opt(r.pass_at_1_delta),
                opt(r.similarity),
                opt(r.similarity_delta),
                r.best_pass_at_1.to_string(),
                r.best_similarity.to_string(),
            ])
            .map_err(|e| EvalError::Config(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| EvalError::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
