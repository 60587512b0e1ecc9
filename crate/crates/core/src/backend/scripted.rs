//! Deterministic replay backend driven by a fixture of
//! (conversation key, response) pairs.
//!
//! Each conversation keeps its own cursor into the script resolved for it.
//! A request's script is looked up by its full conversation key, then by the
//! part after the last `/` (usually the instance id), then by `*`. Results are
//! memoized by a digest of the conversation key and message history, so an
//! identical history always yields an identical result.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{
    check_context_window, Backend, BackendError, ChatMessage, CompletionRequest, CompletionResult,
};
use crate::domain::{Cost, TechnicalErrorClass};
use crate::tokens::{Tokenizer, WordTokenizer};

/// One line of a fixture file. Exactly one of `response` / `error` is set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<TechnicalErrorClass>,
}

impl ScriptEntry {
    pub fn reply(key: impl Into<String>, response: impl Into<String>) -> Self {
        Self { key: key.into(), response: Some(response.into()), error: None }
    }

    pub fn failure(key: impl Into<String>, error: TechnicalErrorClass) -> Self {
        Self { key: key.into(), response: None, error: Some(error) }
    }
}

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("reading script {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("script line {line}: {message}")]
    Line { line: usize, message: String },
}

#[derive(Default)]
struct ReplayState {
    cursors: HashMap<String, usize>,
    memo: HashMap<[u8; 32], Result<CompletionResult, BackendError>>,
}

pub struct ScriptedBackend {
    id: String,
    window: usize,
    price_in_per_1k: f64,
    price_out_per_1k: f64,
    scripts: HashMap<String, Vec<ScriptEntry>>,
    state: Mutex<ReplayState>,
}

pub const DEFAULT_SCRIPTED_WINDOW: usize = 128_000;

impl ScriptedBackend {
    pub fn new(id: impl Into<String>, entries: impl IntoIterator<Item = ScriptEntry>) -> Self {
        let mut scripts: HashMap<String, Vec<ScriptEntry>> = HashMap::new();
        for entry in entries {
            scripts.entry(entry.key.clone()).or_default().push(entry);
        }
        Self {
            id: id.into(),
            window: DEFAULT_SCRIPTED_WINDOW,
            price_in_per_1k: 0.0,
            price_out_per_1k: 0.0,
            scripts,
            state: Mutex::new(ReplayState::default()),
        }
    }

    pub fn from_file(id: impl Into<String>, path: &Path) -> Result<Self, ScriptError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ScriptError::Io { path: path.display().to_string(), source })?;
        Ok(Self::new(id, parse_script(&text)?))
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn with_prices(mut self, input_per_1k: f64, output_per_1k: f64) -> Self {
        self.price_in_per_1k = input_per_1k;
        self.price_out_per_1k = output_per_1k;
        self
    }

    fn resolve(&self, conversation: Option<&str>) -> Option<&Vec<ScriptEntry>> {
        let mut keys = Vec::with_capacity(3);
        if let Some(c) = conversation {
            keys.push(c);
            if let Some((_, tail)) = c.rsplit_once('/') {
                keys.push(tail);
            }
        }
        keys.push("*");
        keys.into_iter().find_map(|k| self.scripts.get(k))
    }
}

pub fn parse_script(text: &str) -> Result<Vec<ScriptEntry>, ScriptError> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ScriptEntry = serde_json::from_str(line)
            .map_err(|e| ScriptError::Line { line: i + 1, message: e.to_string() })?;
        if entry.response.is_some() == entry.error.is_some() {
            return Err(ScriptError::Line {
                line: i + 1,
                message: "exactly one of `response` and `error` must be set".into(),
            });
        }
        entries.push(entry);
    }
    Ok(entries)
}

fn history_digest(conversation: Option<&str>, messages: &[ChatMessage]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(conversation.unwrap_or("").as_bytes());
    hasher.update([0u8]);
    for m in messages {
        hasher.update(format!("{:?}", m.role).as_bytes());
        hasher.update([0u8]);
        hasher.update((m.content.len() as u64).to_le_bytes());
        hasher.update(m.content.as_bytes());
    }
    hasher.finalize().into()
}

impl Backend for ScriptedBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn context_window(&self) -> usize {
        self.window
    }

    fn tokenizer(&self) -> &dyn Tokenizer {
        &WordTokenizer
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        request.validate()?;
        let tokens_in = check_context_window(self, request)? as u64;
        let conversation = request.conversation.as_deref();
        let digest = history_digest(conversation, &request.messages);

        let mut state = self.state.lock().expect("scripted backend state poisoned");
        if let Some(hit) = state.memo.get(&digest) {
            return hit.clone();
        }
        let cursor_key = conversation.unwrap_or("*").to_string();
        let index = *state.cursors.get(&cursor_key).unwrap_or(&0);
        let result = match self.resolve(conversation).and_then(|s| s.get(index)) {
            None => Err(BackendError::new(
                TechnicalErrorClass::ProviderFailure,
                format!("script exhausted for conversation `{cursor_key}` at turn {}", index + 1),
            )),
            Some(ScriptEntry { error: Some(class), .. }) => {
                Err(BackendError::new(*class, "scripted failure"))
            }
            Some(ScriptEntry { response, .. }) => {
                let text = response.clone().unwrap_or_default();
                let tokens_out = WordTokenizer.count(&text) as u64;
                Ok(CompletionResult {
                    cost: Cost::for_tokens(tokens_in, self.price_in_per_1k)
                        + Cost::for_tokens(tokens_out, self.price_out_per_1k),
                    text,
                    tokens_in,
                    tokens_out,
                    provider_flags: Default::default(),
                })
            }
        };
        state.cursors.insert(cursor_key, index + 1);
        state.memo.insert(digest, result.clone());
        result
    }
}
