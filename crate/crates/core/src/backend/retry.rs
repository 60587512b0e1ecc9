use serde::{Deserialize, Serialize};

use super::grammar::{corrective_message, parse_action_with, ActionRules};
use super::{Backend, BackendError, ChatMessage, CompletionRequest};
use crate::domain::{Action, Cost, TechnicalErrorClass};

/// One completion made while trying to obtain a parseable turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub raw: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub cost: Cost,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedTurn {
    pub thought: String,
    pub action: Action,
    /// The accepted assistant text.
    pub raw: String,
    pub attempts: Vec<Attempt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryFailure {
    pub class: TechnicalErrorClass,
    pub message: String,
    pub attempts: Vec<Attempt>,
}

fn totals(attempts: &[Attempt]) -> (u64, u64, Cost) {
    attempts.iter().fold((0, 0, Cost::ZERO), |(i, o, c), a| (i + a.tokens_in, o + a.tokens_out, c + a.cost))
}

impl ParsedTurn {
    pub fn tokens_in(&self) -> u64 {
        totals(&self.attempts).0
    }
    pub fn tokens_out(&self) -> u64 {
        totals(&self.attempts).1
    }
    pub fn cost(&self) -> Cost {
        totals(&self.attempts).2
    }
}

impl RetryFailure {
    pub fn tokens_in(&self) -> u64 {
        totals(&self.attempts).0
    }
    pub fn tokens_out(&self) -> u64 {
        totals(&self.attempts).1
    }
    pub fn cost(&self) -> Cost {
        totals(&self.attempts).2
    }
}

/// Completes and parses a turn, re-prompting with a corrective message up to
/// `parse_retries` times. Backend errors end the loop immediately.
pub fn complete_with_retries(
    backend: &dyn Backend,
    request: &CompletionRequest,
    rules: impl Into<ActionRules>,
    parse_retries: u32,
) -> Result<ParsedTurn, RetryFailure> {
    let rules = rules.into();
    let mut request = request.clone();
    let mut attempts = Vec::new();
    for attempt in 0..=parse_retries {
        let result = match backend.complete(&request) {
            Ok(r) => r,
            Err(BackendError { class, message }) => {
                return Err(RetryFailure { class, message, attempts })
            }
        };
        let mut record = Attempt {
            raw: result.text.clone(),
            tokens_in: result.tokens_in,
            tokens_out: result.tokens_out,
            cost: result.cost,
            error: None,
        };
        match parse_action_with(&result.text, rules) {
            Ok((thought, action)) => {
                attempts.push(record);
                return Ok(ParsedTurn { thought, action, raw: result.text, attempts });
            }
            Err(err) => {
                record.error = Some(err.to_string());
                attempts.push(record);
                if attempt < parse_retries {
                    let echoed = if result.text.trim().is_empty() {
                        "(empty reply)".to_string()
                    } else {
                        result.text
                    };
                    request.messages.push(ChatMessage::assistant(echoed));
                    request.messages.push(ChatMessage::user(corrective_message(&err, rules)));
                }
            }
        }
    }
    let message = attempts
        .last()
        .and_then(|a| a.error.clone())
        .unwrap_or_else(|| "no parseable reply".into());
    Err(RetryFailure { class: TechnicalErrorClass::UnparseableResponse, message, attempts })
}
