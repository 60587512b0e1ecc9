use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{BenchmarkInstance, CommandClass, Cost, ErrorLabel, EvalRecord, RunConfig, TechnicalErrorClass};

pub const DEFAULT_CUTOFF_YEAR: i32 = 2024;

/// One scored run, the unit `aggregate` consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRun {
    pub config: RunConfig,
    pub instance: BenchmarkInstance,
    pub record: EvalRecord,
    pub cost: Cost,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub correct: usize,
    pub total: usize,
}

impl Ratio {
    pub fn pct(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.correct as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigReport {
    pub config_id: String,
    pub backend_id: String,
    pub command_class: CommandClass,
    pub with_demo: bool,
    pub instance_count: usize,
    pub scored_count: usize,
    pub technical_failure_count: usize,
    pub correct_count: usize,
    /// Instances with target year before the cutoff.
    pub before_cutoff: Ratio,
    pub after_cutoff: Ratio,
    pub technical_errors: BTreeMap<TechnicalErrorClass, usize>,
    pub error_labels: BTreeMap<ErrorLabel, usize>,
    pub total_cost: Cost,
    pub total_duration_ms: u64,
    pub records: Vec<EvalRecord>,
}

impl ConfigReport {
    /// Correct over runs without a technical failure.
    pub fn accuracy_scored(&self) -> Ratio {
        Ratio { correct: self.correct_count, total: self.scored_count }
    }

    /// Correct over every instance, technical failures counted as wrong.
    pub fn accuracy_all(&self) -> Ratio {
        Ratio { correct: self.correct_count, total: self.instance_count }
    }

    pub fn mean_cost(&self) -> Cost {
        self.total_cost.mean(self.instance_count)
    }

    pub fn mean_duration_secs(&self) -> f64 {
        if self.instance_count == 0 {
            0.0
        } else {
            self.total_duration_ms as f64 / 1000.0 / self.instance_count as f64
        }
    }

    pub fn technical_error_pct(&self) -> f64 {
        Ratio { correct: self.technical_failure_count, total: self.instance_count }.pct()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub cutoff_year: i32,
    pub configs: Vec<ConfigReport>,
}

fn class_rank(class: CommandClass) -> usize {
    CommandClass::ALL.iter().position(|c| *c == class).unwrap_or(usize::MAX)
}

/// Groups runs by configuration. Rows are ordered by command class, then
/// without/with demo, then backend and config id.
pub fn aggregate(runs: &[ScoredRun], cutoff_year: i32) -> AggregateReport {
    let mut groups: BTreeMap<&str, Vec<&ScoredRun>> = BTreeMap::new();
    for run in runs {
        groups.entry(run.config.config_id.as_str()).or_default().push(run);
    }
    let mut configs: Vec<ConfigReport> = groups
        .into_values()
        .map(|group| {
            let config = &group[0].config;
            let mut report = ConfigReport {
                config_id: config.config_id.clone(),
                backend_id: config.backend_id.clone(),
                command_class: config.command_class,
                with_demo: config.with_demo,
                instance_count: 0,
                scored_count: 0,
                technical_failure_count: 0,
                correct_count: 0,
                before_cutoff: Ratio::default(),
                after_cutoff: Ratio::default(),
                technical_errors: BTreeMap::new(),
                error_labels: BTreeMap::new(),
                total_cost: Cost::ZERO,
                total_duration_ms: 0,
                records: Vec::with_capacity(group.len()),
            };
            let mut sorted = group;
            sorted.sort_by(|a, b| a.instance.instance_id.cmp(&b.instance.instance_id));
            for run in sorted {
                report.instance_count += 1;
                match run.record.technical_error {
                    Some(class) => {
                        report.technical_failure_count += 1;
                        *report.technical_errors.entry(class).or_default() += 1;
                    }
                    None => report.scored_count += 1,
                }
                let split = if run.instance.target_year < cutoff_year {
                    &mut report.before_cutoff
                } else {
                    &mut report.after_cutoff
                };
                split.total += 1;
                if run.record.correct {
                    report.correct_count += 1;
                    split.correct += 1;
                }
                if let Some(label) = run.record.error_label {
                    *report.error_labels.entry(label).or_default() += 1;
                }
                report.total_cost += run.cost;
                report.total_duration_ms += run.duration_ms;
                report.records.push(run.record.clone());
            }
            report
        })
        .collect();
    configs.sort_by(|a, b| {
        (class_rank(a.command_class), a.with_demo, &a.backend_id, &a.config_id)
            .cmp(&(class_rank(b.command_class), b.with_demo, &b.backend_id, &b.config_id))
    });
    AggregateReport { cutoff_year, configs }
}
