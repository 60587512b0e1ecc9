use serde::{Deserialize, Serialize};

use super::score::score_selection;
use crate::agent::{run_instance, LogicalClock};
use crate::backend::Backend;
use crate::domain::{BenchmarkInstance, CommandClass, Outcome, RunConfig, TechnicalErrorClass};

pub const DEFAULT_REPEATS: u32 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunVerdict {
    pub run: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub technical_error: Option<TechnicalErrorClass>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateVerdict {
    pub instance_id: String,
    pub runs: Vec<RunVerdict>,
    pub removed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterOutcome {
    pub kept: Vec<BenchmarkInstance>,
    pub removed: Vec<BenchmarkInstance>,
    pub verdicts: Vec<CandidateVerdict>,
}

/// Config id of the `run`-th tool-less attempt (1-based). Scripted backends
/// key replies on it.
pub fn memorize_config_id(run: u32) -> String {
    format!("memorize-{run}")
}

/// Asks the backend for each candidate's cited title `repeats` times without
/// tools and removes every candidate answered correctly at least once.
pub fn memorization_filter(candidates: &[BenchmarkInstance], backend: &dyn Backend, repeats: u32) -> FilterOutcome {
    let mut out = FilterOutcome { kept: Vec::new(), removed: Vec::new(), verdicts: Vec::new() };
    for candidate in candidates {
        let runs: Vec<RunVerdict> = (1..=repeats)
            .map(|run| {
                let mut config = RunConfig::new(memorize_config_id(run), backend.id(), CommandClass::NoCommands, false);
                config.seed = Some(u64::from(run));
                let result = run_instance(&config, candidate, backend, None, &LogicalClock::default());
                let record = score_selection(&result.trajectory.outcome, candidate, &config.config_id, None);
                let answer = match &result.trajectory.outcome {
                    Outcome::Answered { title } => Some(title.clone()),
                    _ => None,
                };
                RunVerdict { run, answer, correct: record.correct, technical_error: record.technical_error }
            })
            .collect();
        let removed = runs.iter().any(|r| r.correct);
        out.verdicts.push(CandidateVerdict { instance_id: candidate.instance_id.clone(), runs, removed });
        if removed {
            out.removed.push(candidate.clone());
        } else {
            out.kept.push(candidate.clone());
        }
    }
    out
}
