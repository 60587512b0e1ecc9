use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::date::PaperDate;

/// The single mask token an excerpt must contain.
pub const MASK_TOKEN: &str = "[CITATION]";

const MAX_TAGS: usize = 3;

/// One benchmark excerpt with its masked citation and ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkInstance {
    pub instance_id: String,
    pub excerpt: String,
    pub target_title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_paper_id: Option<String>,
    pub source_paper_id: String,
    pub source_date: PaperDate,
    pub target_year: i32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
}

/// A dataset record as decoded, before any invariant is checked.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct RawInstance {
    pub instance_id: Option<String>,
    pub excerpt: Option<String>,
    pub target_title: Option<String>,
    pub target_paper_id: Option<String>,
    pub source_paper_id: Option<String>,
    pub source_date: Option<serde_json::Value>,
    pub target_year: Option<i64>,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValidationError {
    #[error("excerpt does not contain the mask token {MASK_TOKEN}")]
    MissingMask,
    #[error("excerpt contains the mask token {count} times; exactly one is allowed")]
    DuplicateMask { count: usize },
    #[error("bad date: {0}")]
    BadDate(String),
    #[error("target title is empty")]
    EmptyTarget,
    #[error("missing or empty field `{0}`")]
    MissingField(&'static str),
    #[error("target year {target_year} is after the source paper's year {source_year}")]
    TargetAfterSource { target_year: i64, source_year: i32 },
    #[error("{0} tags given; at most {MAX_TAGS} are allowed")]
    TooManyTags(usize),
}

fn required(field: &'static str, value: Option<String>) -> Result<String, ValidationError> {
    match value {
        Some(v) if !v.trim().is_empty() => Ok(v),
        _ => Err(ValidationError::MissingField(field)),
    }
}

/// Checks every instance invariant and builds the typed record.
pub fn validate_instance(raw: RawInstance) -> Result<BenchmarkInstance, ValidationError> {
    let instance_id = required("instance_id", raw.instance_id)?;
    let excerpt = required("excerpt", raw.excerpt)?;
    match excerpt.matches(MASK_TOKEN).count() {
        0 => return Err(ValidationError::MissingMask),
        1 => {}
        count => return Err(ValidationError::DuplicateMask { count }),
    }
    let target_title = raw.target_title.unwrap_or_default();
    if target_title.trim().is_empty() {
        return Err(ValidationError::EmptyTarget);
    }
    let source_paper_id = required("source_paper_id", raw.source_paper_id)?;
    let source_date = match raw.source_date {
        Some(serde_json::Value::String(s)) => {
            s.parse::<PaperDate>().map_err(|e| ValidationError::BadDate(e.to_string()))?
        }
        Some(serde_json::Value::Number(n)) => n
            .as_i64()
            .and_then(|y| i32::try_from(y).ok())
            .and_then(PaperDate::from_year)
            .ok_or_else(|| ValidationError::BadDate(n.to_string()))?,
        Some(other) => return Err(ValidationError::BadDate(other.to_string())),
        None => return Err(ValidationError::MissingField("source_date")),
    };
    let target_year = raw.target_year.ok_or(ValidationError::MissingField("target_year"))?;
    if target_year > source_date.year() as i64 {
        return Err(ValidationError::TargetAfterSource {
            target_year,
            source_year: source_date.year(),
        });
    }
    if raw.tags.len() > MAX_TAGS {
        return Err(ValidationError::TooManyTags(raw.tags.len()));
    }
    let target_paper_id = raw.target_paper_id.filter(|id| !id.trim().is_empty());
    Ok(BenchmarkInstance {
        instance_id,
        excerpt,
        target_title,
        target_paper_id,
        source_paper_id,
        source_date,
        target_year: target_year as i32,
        tags: raw.tags,
    })
}

impl BenchmarkInstance {
    /// Re-validates an already typed instance (e.g. one built in code).
    pub fn check(&self) -> Result<(), ValidationError> {
        let raw = RawInstance {
            instance_id: Some(self.instance_id.clone()),
            excerpt: Some(self.excerpt.clone()),
            target_title: Some(self.target_title.clone()),
            target_paper_id: self.target_paper_id.clone(),
            source_paper_id: Some(self.source_paper_id.clone()),
            source_date: Some(serde_json::Value::String(self.source_date.to_string())),
            target_year: Some(self.target_year as i64),
            tags: self.tags.clone(),
        };
        validate_instance(raw).map(|_| ())
    }
}
