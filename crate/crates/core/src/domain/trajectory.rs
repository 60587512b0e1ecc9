use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::action::{Action, Observation};
use super::cost::Cost;
use super::eval::TechnicalErrorClass;

/// One think-act-observe step. Timestamps are milliseconds since the Unix
/// epoch (or since the start of a logical clock).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub index: u32,
    pub thought: String,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<Observation>,
    pub started_at_ms: u64,
    pub ended_at_ms: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub cost: Cost,
    /// Completions spent on this step, including rejected attempts.
    #[serde(default = "one")]
    pub attempts: u32,
    /// Provider results seen before leakage filtering, for searches.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_result_count: Option<usize>,
    /// The forced-select prompt was shown after this step's observation.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub forced_select_prompt: bool,
}

fn one() -> u32 {
    1
}

impl TrajectoryStep {
    pub fn duration_ms(&self) -> u64 {
        self.ended_at_ms.saturating_sub(self.started_at_ms)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Selected { paper_id: String },
    Answered { title: String },
    TechnicalFailure { error_class: TechnicalErrorClass },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub instance_id: String,
    pub config_id: String,
    pub steps: Vec<TrajectoryStep>,
    pub outcome: Outcome,
    pub total_cost: Cost,
    pub total_duration_ms: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrajectoryError {
    #[error("{steps} steps exceed the budget of {max}")]
    TooManySteps { steps: usize, max: u32 },
    #[error("outcome is Selected but the final step is not a select action")]
    SelectedWithoutSelect,
    #[error("total cost {total} differs from the sum of step costs {sum}")]
    CostMismatch { total: Cost, sum: Cost },
    #[error("step {0} ends before it starts")]
    NegativeDuration(u32),
    #[error("step {index} lasts longer than the whole run")]
    StepLongerThanRun { index: u32 },
    #[error("step indices are not 1, 2, 3, ...")]
    BadIndices,
}

impl Trajectory {
    pub fn total_duration_secs(&self) -> f64 {
        self.total_duration_ms as f64 / 1000.0
    }

    pub fn is_technical_failure(&self) -> bool {
        matches!(self.outcome, Outcome::TechnicalFailure { .. })
    }

    /// Verifies the structural invariants against an action budget.
    pub fn check(&self, max_actions: u32) -> Result<(), TrajectoryError> {
        if self.steps.len() > max_actions as usize {
            return Err(TrajectoryError::TooManySteps { steps: self.steps.len(), max: max_actions });
        }
        if self.steps.iter().enumerate().any(|(i, s)| s.index as usize != i + 1) {
            return Err(TrajectoryError::BadIndices);
        }
        if let Outcome::Selected { paper_id } = &self.outcome {
            match self.steps.last().map(|s| &s.action) {
                Some(Action::Select { paper_id: p }) if p == paper_id => {}
                _ => return Err(TrajectoryError::SelectedWithoutSelect),
            }
        }
        let sum: Cost = self.steps.iter().map(|s| s.cost).sum();
        if sum != self.total_cost {
            return Err(TrajectoryError::CostMismatch { total: self.total_cost, sum });
        }
        for step in &self.steps {
            if step.ended_at_ms < step.started_at_ms {
                return Err(TrajectoryError::NegativeDuration(step.index));
            }
            if step.duration_ms() > self.total_duration_ms {
                return Err(TrajectoryError::StepLongerThanRun { index: step.index });
            }
        }
        Ok(())
    }
}
