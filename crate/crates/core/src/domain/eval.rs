use std::fmt;

use serde::{Deserialize, Serialize};

/// Run-level failures that are not reasoning mistakes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechnicalErrorClass {
    UnparseableResponse,
    ContextLengthExceeded,
    ContentFilter,
    ProviderFailure,
    MissingFullText,
}

impl TechnicalErrorClass {
    pub const ALL: [TechnicalErrorClass; 5] = [
        TechnicalErrorClass::UnparseableResponse,
        TechnicalErrorClass::ContextLengthExceeded,
        TechnicalErrorClass::ContentFilter,
        TechnicalErrorClass::ProviderFailure,
        TechnicalErrorClass::MissingFullText,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TechnicalErrorClass::UnparseableResponse => "unparseable_response",
            TechnicalErrorClass::ContextLengthExceeded => "context_length_exceeded",
            TechnicalErrorClass::ContentFilter => "content_filter",
            TechnicalErrorClass::ProviderFailure => "provider_failure",
            TechnicalErrorClass::MissingFullText => "missing_full_text",
        }
    }
}

impl fmt::Display for TechnicalErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a correct answer was matched to the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    ById,
    ByTitle,
    None,
}

/// Manually annotated failure category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorLabel {
    /// Misunderstands the excerpt.
    Type1,
    /// Understands the excerpt but stops prematurely.
    Type2,
    /// Finds the right concept but selects the wrong paper.
    Type3,
}

impl std::str::FromStr for ErrorLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace([' ', '_', '-'], "").as_str() {
            "type1" | "1" => Ok(ErrorLabel::Type1),
            "type2" | "2" => Ok(ErrorLabel::Type2),
            "type3" | "3" => Ok(ErrorLabel::Type3),
            _ => Err(format!("unknown error label `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub instance_id: String,
    pub config_id: String,
    pub correct: bool,
    pub match_kind: MatchKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_label: Option<ErrorLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub technical_error: Option<TechnicalErrorClass>,
}

impl EvalRecord {
    /// `correct` implies a match kind other than `None`.
    pub fn is_consistent(&self) -> bool {
        !self.correct || self.match_kind != MatchKind::None
    }
}
