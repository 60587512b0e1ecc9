use serde::{Deserialize, Serialize};

use super::date::PaperDate;

/// A scholarly record as returned by a search provider.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperMeta {
    pub paper_id: String,
    pub title: String,
    #[serde(default)]
    pub r#abstract: String,
    #[serde(default)]
    pub citation_count: u64,
    pub pub_date: PaperDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fulltext_locator: Option<String>,
}

impl PaperMeta {
    pub fn is_valid(&self) -> bool {
        !self.paper_id.trim().is_empty()
    }
}
