use serde::{Deserialize, Serialize};

use super::config::CommandClass;
use super::paper::PaperMeta;

/// A move made by the agent.
///
/// The serialized form is the `action` object of the message grammar:
/// `{"name": "search_relevance", "query": "..."}` and so on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Action {
    SearchRelevance { query: String },
    SearchCitations { query: String },
    Read { paper_id: String },
    Select { paper_id: String },
    #[serde(rename = "answer")]
    DirectAnswer { title: String },
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::SearchRelevance { .. } => "search_relevance",
            Action::SearchCitations { .. } => "search_citations",
            Action::Read { .. } => "read",
            Action::Select { .. } => "select",
            Action::DirectAnswer { .. } => "answer",
        }
    }

    pub fn is_search(&self) -> bool {
        matches!(self, Action::SearchRelevance { .. } | Action::SearchCitations { .. })
    }

    pub fn is_legal_for(&self, class: CommandClass) -> bool {
        match class {
            CommandClass::NoCommands => matches!(self, Action::DirectAnswer { .. }),
            CommandClass::SearchOnly => self.is_search() || matches!(self, Action::Select { .. }),
            CommandClass::SearchAndRead => !matches!(self, Action::DirectAnswer { .. }),
        }
    }

    /// Field-level invariants: non-empty query / id / title.
    pub fn is_well_formed(&self) -> bool {
        let field = match self {
            Action::SearchRelevance { query } | Action::SearchCitations { query } => query,
            Action::Read { paper_id } | Action::Select { paper_id } => paper_id,
            Action::DirectAnswer { title } => title,
        };
        !field.trim().is_empty()
    }
}

/// What the environment shows the agent after an action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observation {
    SearchResults { results: Vec<PaperMeta> },
    PaperText { paper_id: String, text: String, truncated: bool },
    Notice { message: String },
    ForcedSelectPrompt,
}
