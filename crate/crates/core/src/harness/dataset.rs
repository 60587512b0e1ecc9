use std::collections::HashSet;
use std::fs;
use std::path::Path;

use log::warn;
use thiserror::Error;

use crate::domain::{validate_instance, BenchmarkInstance, RawInstance, ValidationError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {error}")]
    Validation { line: usize, error: ValidationError },
    #[error("line {line}: duplicate instance id `{id}`")]
    DuplicateId { line: usize, id: String },
}

impl DatasetError {
    pub fn line(&self) -> Option<usize> {
        match self {
            DatasetError::Io { .. } => None,
            DatasetError::Parse { line, .. }
            | DatasetError::Validation { line, .. }
            | DatasetError::DuplicateId { line, .. } => Some(*line),
        }
    }
}

/// Parses line-delimited instance records. Blank lines are skipped; unknown
/// fields are ignored.
pub fn parse_dataset(text: &str) -> Result<Vec<BenchmarkInstance>, DatasetError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawInstance = serde_json::from_str(line)
            .map_err(|e| DatasetError::Parse { line: line_no, message: e.to_string() })?;
        let instance =
            validate_instance(raw).map_err(|error| DatasetError::Validation { line: line_no, error })?;
        if !seen.insert(instance.instance_id.clone()) {
            return Err(DatasetError::DuplicateId { line: line_no, id: instance.instance_id });
        }
        out.push(instance);
    }
    Ok(out)
}

pub fn load_dataset(path: &Path) -> Result<Vec<BenchmarkInstance>, DatasetError> {
    let text = fs::read_to_string(path)
        .map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    let instances = parse_dataset(&text)?;
    if instances.is_empty() {
        warn!("dataset {} contains no instances", path.display());
    }
    Ok(instances)
}

/// Writes instances in the format `load_dataset` reads.
pub fn write_dataset(path: &Path, instances: &[BenchmarkInstance]) -> std::io::Result<()> {
    let mut text = String::new();
    for instance in instances {
        text.push_str(&serde_json::to_string(instance).expect("instance serializes"));
        text.push('\n');
    }
    fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{"instance_id":"a","excerpt":"x [CITATION] y","target_title":"T","source_paper_id":"s","source_date":"2015-12-10","target_year":2015,"extra":1}"#;

    #[test]
    fn reads_good_lines_and_ignores_unknown_fields() {
        let text = format!("{GOOD}\n\n{}\n", GOOD.replace("\"a\"", "\"b\""));
        assert_eq!(parse_dataset(&text).unwrap().len(), 2);
    }

    #[test]
    fn bad_line_is_named() {
        let text = format!("{GOOD}\n{}\n", GOOD.replace("\"a\"", "\"b\"").replace("[CITATION]", ""));
        let err = parse_dataset(&text).unwrap_err();
        assert!(matches!(err, DatasetError::Validation { line: 2, error: ValidationError::MissingMask }));
        assert_eq!(parse_dataset("{oops").unwrap_err().line(), Some(1));
        assert!(matches!(parse_dataset(&format!("{GOOD}\n{GOOD}")), Err(DatasetError::DuplicateId { line: 2, .. })));
    }

    #[test]
    fn empty_is_empty() {
        assert!(parse_dataset("").unwrap().is_empty());
    }
}
