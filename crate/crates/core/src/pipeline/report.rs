use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::metrics::{compute_metrics, ConfusionCounts, Percent};
use crate::symbolizer::SymbolizationGroup;

pub const TIMING_NOTE: &str =
    "times are wall-clock seconds of model training and batch detection only; corpus parsing, symbolization and vectorization are excluded";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub label: String,
    pub group: SymbolizationGroup,
    pub feature_dim: usize,
    pub counts: ConfusionCounts,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub training_time_seconds: f64,
    pub detection_time_seconds: f64,
    pub train_count: usize,
    pub test_count: usize,
}

impl EvaluationReport {
    pub fn from_counts(
        label: String,
        group: SymbolizationGroup,
        feature_dim: usize,
        counts: ConfusionCounts,
        timings: (f64, f64),
        sizes: (usize, usize),
    ) -> Self {
        let m = compute_metrics(&counts);
        EvaluationReport {
            label,
            group,
            feature_dim,
            counts,
            fpr: m.fpr,
            fnr: m.fnr,
            precision: m.precision,
            f1: m.f1,
            training_time_seconds: timings.0,
            detection_time_seconds: timings.1,
            train_count: sizes.0,
            test_count: sizes.1,
        }
    }

    /// The report with both timing fields zeroed, for comparing runs.
    pub fn without_timings(&self) -> Self {
        EvaluationReport {
            training_time_seconds: 0.0,
            detection_time_seconds: 0.0,
            ..self.clone()
        }
    }
}

/// Aligned table with columns FPR(%) FNR(%) P(%) F1(%) followed by the timings.
pub fn render_table(reports: &[EvaluationReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.label.len())
        .chain(["Config".len()])
        .max()
        .unwrap_or(6);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:<5}  {:>7}  {:>7}  {:>7}  {:>7}  {:>11}  {:>12}",
        "Config", "Group", "FPR(%)", "FNR(%)", "P(%)", "F1(%)", "Training(s)", "Detection(s)"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$}  {:<5}  {:>7}  {:>7}  {:>7}  {:>7}  {:>11.3}  {:>12.3}",
            r.label,
            r.group.label(),
            Percent(r.fpr),
            Percent(r.fnr),
            Percent(r.precision),
            Percent(r.f1),
            r.training_time_seconds,
            r.detection_time_seconds,
        );
    }
    let _ = writeln!(out, "({TIMING_NOTE})");
    out
}

/// Cosine similarity of gadget pairs under each compared embedder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineReport {
    /// Column headers, one per embedder.
    pub embedders: Vec<String>,
    pub rows: Vec<CosineRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineRow {
    pub a: u64,
    pub b: u64,
    /// `None` where the cosine is undefined (a zero vector).
    pub values: Vec<Option<f64>>,
}

pub fn render_cosine(report: &CosineReport) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<16}", "Pair");
    for e in &report.embedders {
        let _ = write!(out, "  {e:>10}");
    }
    out.push('\n');
    for row in &report.rows {
        let _ = write!(out, "{:<16}", format!("{} vs {}", row.a, row.b));
        for v in &row.values {
            match v {
                Some(v) => {
                    let _ = write!(out, "  {v:>10.3}");
                }
                None => {
                    let _ = write!(out, "  {:>10}", "n/a");
                }
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(label: &str, counts: ConfusionCounts) -> EvaluationReport {
        EvaluationReport::from_counts(label.into(), SymbolizationGroup::FV, 250, counts, (1.5, 0.25), (8, 2))
    }

    #[test]
    fn table_layout() {
        let a = report("d+R", ConfusionCounts { tp: 90, fp: 10, tn: 90, fn_: 10 });
        let b = report("w+B", ConfusionCounts { tp: 0, fp: 0, tn: 5, fn_: 5 });
        let t = render_table(&[a, b]);
        let lines: Vec<&str> = t.lines().collect();
        assert!(lines[0].starts_with("Config  Group   FPR(%)   FNR(%)     P(%)    F1(%)"), "{t}");
        assert!(lines[1].contains("   10.0     10.0     90.0     90.0"), "{t}");
        assert!(lines[2].contains("n/a"), "{t}");
        assert!(lines[3].contains("excluded"));
    }

    #[test]
    fn report_fields_follow_counts() {
        let r = report("x", ConfusionCounts { tp: 3, fp: 1, tn: 4, fn_: 2 });
        let m = compute_metrics(&r.counts);
        assert_eq!((r.fpr, r.fnr, r.precision, r.f1), (m.fpr, m.fnr, m.precision, m.f1));
        assert_eq!(r.without_timings().training_time_seconds, 0.0);
    }

    #[test]
    fn cosine_layout() {
        let rep = CosineReport {
            embedders: vec!["word2vec".into(), "doc2vec".into()],
            rows: vec![CosineRow { a: 1, b: 2, values: vec![Some(0.83234), None] }],
        };
        let t = render_cosine(&rep);
        assert!(t.contains("1 vs 2"));
        assert!(t.contains("0.832"));
        assert!(t.contains("n/a"));
    }
}
