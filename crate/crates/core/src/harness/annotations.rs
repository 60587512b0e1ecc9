use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::domain::ErrorLabel;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

#[derive(Deserialize)]
struct Row {
    instance_id: String,
    config_id: String,
    label: String,
}

pub type Annotations = BTreeMap<(String, String), ErrorLabel>;

/// Reads a CSV with header `instance_id,config_id,label`.
pub fn parse_annotations(text: &str) -> Result<Annotations, AnnotationError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| AnnotationError::Row { row: row_no, message: e.to_string() })?;
        let label = row.label.parse().map_err(|message| AnnotationError::Row { row: row_no, message })?;
        out.insert((row.instance_id, row.config_id), label);
    }
    Ok(out)
}

pub fn load_annotations(path: &Path) -> Result<Annotations, AnnotationError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AnnotationError::Read { path: path.display().to_string(), message: e.to_string() })?;
    parse_annotations(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_labels() {
        let a = parse_annotations("instance_id,config_id,label\ni1, c/x ,type3\ni2,c/x,1\n").unwrap();
        assert_eq!(a[&("i1".to_string(), "c/x".to_string())], ErrorLabel::Type3);
        assert_eq!(a.len(), 2);
        assert!(matches!(parse_annotations("instance_id,config_id,label\ni,c,type9\n"), Err(AnnotationError::Row { row: 1, .. })));
    }
}
