//! Report formatting: aligned text tables on stdout and versioned JSON files.

use csi2q::learn::EvalReport;
use csi2q::pipeline::AblationReport;
use serde::Serialize;

pub const REPORT_VERSION: u32 = 1;

/// Evaluation report file contents.
#[derive(Debug, Serialize)]
pub struct EvalReportFile<'a> {
    pub version: u32,
    #[serde(flatten)]
    pub eval: &'a EvalReport,
}

/// Ablation report file contents.
#[derive(Debug, Serialize)]
pub struct AblationReportFile<'a> {
    pub version: u32,
    pub seed: u64,
    pub epochs: usize,
    #[serde(flatten)]
    pub report: &'a AblationReport,
}

/// Render the four-arm comparison as an aligned table, arms as columns.
pub fn ablation_table(report: &AblationReport) -> String {
    let mut columns = vec!["Method".to_string()];
    let mut acc_row = vec!["Accuracy".to_string()];
    let mut f1_row = vec!["F1 Score".to_string()];
    for arm in &report.arms {
        columns.push(arm.name.clone());
        acc_row.push(format!("{:.2}%", arm.eval.accuracy * 100.0));
        f1_row.push(format!("{:.2}", arm.eval.macro_f1));
    }

    let widths: Vec<usize> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.len()
                .max(acc_row[i].len())
                .max(f1_row[i].len())
        })
        .collect();
    let render = |row: &[String]| {
        row.iter()
            .enumerate()
            .map(|(i, cell)| format!("{:>width$}", cell, width = widths[i]))
            .collect::<Vec<_>>()
            .join("  ")
    };
    format!(
        "{}\n{}\n{}",
        render(&columns),
        render(&acc_row),
        render(&f1_row)
    )
}

/// Render per-class accuracy and headline metrics.
pub fn eval_text(report: &EvalReport) -> String {
    let mut out = format!(
        "accuracy: {:.4}\nmacro-F1: {:.4}\nsamples:  {}\nper-class accuracy:",
        report.accuracy, report.macro_f1, report.n_samples
    );
    for (i, acc) in report.per_class_accuracy.iter().enumerate() {
        out.push_str(&format!("\n  device {:>3}: {:.4}", i + 1, acc));
    }
    out
}
