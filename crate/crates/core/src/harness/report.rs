use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::aggregate::{AggregateReport, ConfigReport};
use crate::domain::TechnicalErrorClass;

pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_MD: &str = "report.md";

#[derive(Debug, Error)]
#[error("writing {path}: {message}")]
pub struct WriteFailure {
    pub path: String,
    pub message: String,
}

fn csv_header() -> Vec<String> {
    let mut cols: Vec<String> = [
        "config_id",
        "backend",
        "commands",
        "demo",
        "instances",
        "scored",
        "technical_failures",
        "correct",
        "accuracy_all_pct",
        "accuracy_scored_pct",
        "before_cutoff_correct",
        "before_cutoff_total",
        "before_cutoff_pct",
        "after_cutoff_correct",
        "after_cutoff_total",
        "after_cutoff_pct",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend(TechnicalErrorClass::ALL.iter().map(|c| format!("error_{}", c.as_str())));
    cols.extend(
        ["label_type1", "label_type2", "label_type3", "total_cost_usd", "mean_cost_usd", "total_duration_s", "mean_duration_s"]
            .iter()
            .map(|s| s.to_string()),
    );
    cols
}

fn csv_row(c: &ConfigReport) -> Vec<String> {
    use crate::domain::ErrorLabel::*;
    let mut row = vec![
        c.config_id.clone(),
        c.backend_id.clone(),
        c.command_class.as_str().to_string(),
        c.with_demo.to_string(),
        c.instance_count.to_string(),
        c.scored_count.to_string(),
        c.technical_failure_count.to_string(),
        c.correct_count.to_string(),
        format!("{:.2}", c.accuracy_all().pct()),
        format!("{:.2}", c.accuracy_scored().pct()),
        c.before_cutoff.correct.to_string(),
        c.before_cutoff.total.to_string(),
        format!("{:.2}", c.before_cutoff.pct()),
        c.after_cutoff.correct.to_string(),
        c.after_cutoff.total.to_string(),
        format!("{:.2}", c.after_cutoff.pct()),
    ];
    row.extend(TechnicalErrorClass::ALL.iter().map(|k| c.technical_errors.get(k).copied().unwrap_or(0).to_string()));
    row.extend([Type1, Type2, Type3].iter().map(|l| c.error_labels.get(l).copied().unwrap_or(0).to_string()));
    row.extend([
        c.total_cost.to_string(),
        c.mean_cost().to_string(),
        format!("{:.3}", c.total_duration_ms as f64 / 1000.0),
        format!("{:.3}", c.mean_duration_secs()),
    ]);
    row
}

pub fn render_csv(report: &AggregateReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(csv_header()).expect("in-memory csv");
    for c in &report.configs {
        w.write_record(csv_row(c)).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is UTF-8")
}

pub fn render_markdown(report: &AggregateReport) -> String {
    let runs: usize = report.configs.iter().map(|c| c.instance_count).sum();
    let mut out = format!(
        "# Evaluation report\n\n{} configuration(s), {} run(s). Year split at {}.\n\n",
        report.configs.len(),
        runs,
        report.cutoff_year
    );
    out.push_str(&format!(
        "| Backend | Commands | Demo | Accuracy (all) | Accuracy (scored) | Before {y} | {y} and later | Technical errors | Mean cost ($) | Mean duration (s) |\n",
        y = report.cutoff_year
    ));
    out.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
    for c in &report.configs {
        out.push_str(&format!(
            "| {} | {} | {} | {:.1}% ({}/{}) | {:.1}% ({}/{}) | {:.1}% ({}/{}) | {:.1}% ({}/{}) | {} ({:.1}%) | {} | {:.1} |\n",
            c.backend_id,
            c.command_class.label(),
            if c.with_demo { "yes" } else { "no" },
            c.accuracy_all().pct(),
            c.correct_count,
            c.instance_count,
            c.accuracy_scored().pct(),
            c.correct_count,
            c.scored_count,
            c.before_cutoff.pct(),
            c.before_cutoff.correct,
            c.before_cutoff.total,
            c.after_cutoff.pct(),
            c.after_cutoff.correct,
            c.after_cutoff.total,
            c.technical_failure_count,
            c.technical_error_pct(),
            c.mean_cost(),
            c.mean_duration_secs(),
        ));
    }
    let with_errors: Vec<&ConfigReport> = report.configs.iter().filter(|c| !c.technical_errors.is_empty()).collect();
    if !with_errors.is_empty() {
        out.push_str("\n## Technical errors\n\n");
        for c in with_errors {
            let parts: Vec<String> = c.technical_errors.iter().map(|(k, v)| format!("{} {}", k.as_str(), v)).collect();
            out.push_str(&format!("- {}: {}\n", c.config_id, parts.join(", ")));
        }
    }
    out
}

/// Writes `report.csv` and `report.md` into `dir`.
pub fn emit_report(report: &AggregateReport, dir: &Path) -> Result<(PathBuf, PathBuf), WriteFailure> {
    let fail = |path: &Path, e: std::io::Error| WriteFailure { path: path.display().to_string(), message: e.to_string() };
    fs::create_dir_all(dir).map_err(|e| fail(dir, e))?;
    let csv_path = dir.join(REPORT_CSV);
    let md_path = dir.join(REPORT_MD);
    fs::write(&csv_path, render_csv(report)).map_err(|e| fail(&csv_path, e))?;
    fs::write(&md_path, render_markdown(report)).map_err(|e| fail(&md_path, e))?;
    Ok((csv_path, md_path))
}
