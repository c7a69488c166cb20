//! Combined benchmark report: one block of rows per model, failures included.

use hourcast_core::metrics::{report_csv, report_table, EvalReport, ReportRow};

/// Outcome of one model in the benchmark.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelOutcome {
    Evaluated(EvalReport),
    Failed { model: String, reason: String },
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r', ','], " ")
}

/// `(report.csv, report.txt)` contents.
pub fn render(outcomes: &[ModelOutcome]) -> (String, String) {
    let rows: Vec<ReportRow> = outcomes
        .iter()
        .filter_map(|o| match o {
            ModelOutcome::Evaluated(r) => Some(r.rows()),
            ModelOutcome::Failed { .. } => None,
        })
        .flatten()
        .collect();
    let mut csv = report_csv(&rows);
    let mut txt = report_table(&rows);
    let failed: Vec<(&String, &String)> = outcomes
        .iter()
        .filter_map(|o| match o {
            ModelOutcome::Failed { model, reason } => Some((model, reason)),
            ModelOutcome::Evaluated(_) => None,
        })
        .collect();
    if !failed.is_empty() {
        txt.push('\n');
    }
    for (model, reason) in failed {
        let reason = one_line(reason);
        csv.push_str(&format!("{model},failed,{reason},,,,\n"));
        txt.push_str(&format!("{model}: failed: {reason}\n"));
    }
    (csv, txt)
}
