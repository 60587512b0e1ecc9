//! Chat-style language model backends, the action message grammar, and the
//! parse-retry policy.

mod grammar;
mod http;
mod registry;
mod retry;
mod scripted;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Cost, TechnicalErrorClass};
use crate::tokens::Tokenizer;

pub use grammar::{
    command_descriptions, corrective_message, extract_json_object, parse_action, reply_format,
    parse_action_with, render_action, ActionRules, ParseError,
};
pub use http::{ApiFlavor, HttpChatBackend};
pub use registry::{BackendRegistry, BackendSpec, RegistryError};
pub use retry::{complete_with_retries, Attempt, ParsedTurn, RetryFailure};
pub use scripted::{ScriptEntry, ScriptError, ScriptedBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }
    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }
    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub backend_id: String,
    /// Identifies the conversation this request belongs to, e.g.
    /// `config_id/instance_id`. Scripted backends key their fixtures on it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conversation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 1024;

impl CompletionRequest {
    pub fn new(backend_id: impl Into<String>, messages: Vec<ChatMessage>, temperature: f64) -> Self {
        Self {
            messages,
            temperature,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            backend_id: backend_id.into(),
            conversation: None,
            seed: None,
        }
    }

    pub fn with_conversation(mut self, key: impl Into<String>) -> Self {
        self.conversation = Some(key.into());
        self
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        let invalid = |msg: &str| BackendError::new(TechnicalErrorClass::ProviderFailure, msg);
        match self.messages.first() {
            None => return Err(invalid("request has no messages")),
            Some(m) if m.role != Role::System => {
                return Err(invalid("first message must be the system message"))
            }
            _ => {}
        }
        if self
            .messages
            .iter()
            .any(|m| m.role != Role::System && m.content.trim().is_empty())
        {
            return Err(invalid("user and assistant messages must not be empty"));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(invalid("temperature outside [0, 2]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderFlag {
    ContentFiltered,
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub cost: Cost,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub provider_flags: BTreeSet<ProviderFlag>,
}

/// A failed completion, classified for technical-error accounting.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct BackendError {
    pub class: TechnicalErrorClass,
    pub message: String,
}

impl BackendError {
    pub fn new(class: TechnicalErrorClass, message: impl Into<String>) -> Self {
        Self { class, message: message.into() }
    }
}

impl fmt::Display for BackendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.class, self.message)
    }
}

/// A chat model. Implementations must be safe to call from many threads.
pub trait Backend: Send + Sync {
    fn id(&self) -> &str;

    /// Declared context window in tokens.
    fn context_window(&self) -> usize;

    fn tokenizer(&self) -> &dyn Tokenizer;

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError>;

    fn count_message_tokens(&self, messages: &[ChatMessage]) -> usize {
        messages.iter().map(|m| self.tokenizer().count(&m.content)).sum()
    }
}

/// Rejects requests whose messages alone exceed the backend's window.
pub fn check_context_window(
    backend: &dyn Backend,
    request: &CompletionRequest,
) -> Result<usize, BackendError> {
    let used = backend.count_message_tokens(&request.messages);
    let window = backend.context_window();
    if used > window {
        return Err(BackendError::new(
            TechnicalErrorClass::ContextLengthExceeded,
            format!("request uses {used} tokens, window is {window}"),
        ));
    }
    Ok(used)
}
