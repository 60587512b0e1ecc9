//! Live chat backends over HTTPS.

use std::collections::BTreeSet;
use std::thread;
use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    check_context_window, Backend, BackendError, CompletionRequest, CompletionResult, ProviderFlag,
    Role,
};
use crate::domain::{Cost, TechnicalErrorClass};
use crate::tokens::{Tokenizer, WordTokenizer};

/// Wire format spoken by the endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApiFlavor {
    /// `/v1/chat/completions`-style APIs.
    OpenAi,
    /// `/v1/messages`.
    Anthropic,
}

const ATTEMPTS: u32 = 3;
const ANTHROPIC_VERSION: &str = "2023-06-01";

pub struct HttpChatBackend {
    id: String,
    flavor: ApiFlavor,
    endpoint: String,
    model: String,
    window: usize,
    price_in_per_1k: f64,
    price_out_per_1k: f64,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    backoff: Duration,
}

impl HttpChatBackend {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        flavor: ApiFlavor,
        endpoint: impl Into<String>,
        model: impl Into<String>,
        window: usize,
        price_in_per_1k: f64,
        price_out_per_1k: f64,
        api_key: Option<String>,
    ) -> Result<Self, reqwest::Error> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(300))
            .build()?;
        Ok(Self {
            id: id.into(),
            flavor,
            endpoint: endpoint.into(),
            model: model.into(),
            window,
            price_in_per_1k,
            price_out_per_1k,
            api_key,
            client,
            backoff: Duration::from_secs(1),
        })
    }

    fn body(&self, request: &CompletionRequest) -> Value {
        match self.flavor {
            ApiFlavor::OpenAi => {
                let messages: Vec<Value> = request
                    .messages
                    .iter()
                    .map(|m| json!({"role": role_name(m.role), "content": m.content}))
                    .collect();
                let mut body = json!({
                    "model": self.model,
                    "messages": messages,
                    "temperature": request.temperature,
                    "max_tokens": request.max_output_tokens,
                });
                if let Some(seed) = request.seed {
                    body["seed"] = json!(seed);
                }
                body
            }
            ApiFlavor::Anthropic => {
                let system: Vec<&str> = request
                    .messages
                    .iter()
                    .filter(|m| m.role == Role::System)
                    .map(|m| m.content.as_str())
                    .collect();
                let messages: Vec<Value> = request
                    .messages
                    .iter()
                    .filter(|m| m.role != Role::System)
                    .map(|m| json!({"role": role_name(m.role), "content": m.content}))
                    .collect();
                json!({
                    "model": self.model,
                    "system": system.join("\n\n"),
                    "messages": messages,
                    "temperature": request.temperature.min(1.0),
                    "max_tokens": request.max_output_tokens,
                })
            }
        }
    }

    fn send(&self, body: &Value) -> Result<(u16, Value), BackendError> {
        let mut builder = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            builder = match self.flavor {
                ApiFlavor::OpenAi => builder.bearer_auth(key),
                ApiFlavor::Anthropic => builder
                    .header("x-api-key", key)
                    .header("anthropic-version", ANTHROPIC_VERSION),
            };
        }
        let response = builder.send().map_err(|e| {
            BackendError::new(TechnicalErrorClass::ProviderFailure, format!("transport: {e}"))
        })?;
        let status = response.status().as_u16();
        let text = response.text().map_err(|e| {
            BackendError::new(TechnicalErrorClass::ProviderFailure, format!("reading body: {e}"))
        })?;
        let value = serde_json::from_str(&text).unwrap_or(Value::String(text));
        Ok((status, value))
    }

    fn decode(&self, value: &Value) -> Result<CompletionResult, BackendError> {
        let mut flags = BTreeSet::new();
        let (text, tokens_in, tokens_out) = match self.flavor {
            ApiFlavor::OpenAi => {
                let choice = &value["choices"][0];
                match choice["finish_reason"].as_str() {
                    Some("content_filter") => flags.insert(ProviderFlag::ContentFiltered),
                    Some("length") => flags.insert(ProviderFlag::Truncated),
                    _ => false,
                };
                (
                    choice["message"]["content"].as_str().unwrap_or_default().to_string(),
                    value["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
                    value["usage"]["completion_tokens"].as_u64().unwrap_or(0),
                )
            }
            ApiFlavor::Anthropic => {
                match value["stop_reason"].as_str() {
                    Some("refusal") => flags.insert(ProviderFlag::ContentFiltered),
                    Some("max_tokens") => flags.insert(ProviderFlag::Truncated),
                    _ => false,
                };
                let text: String = value["content"]
                    .as_array()
                    .map(|blocks| blocks.iter().filter_map(|b| b["text"].as_str()).collect())
                    .unwrap_or_default();
                (
                    text,
                    value["usage"]["input_tokens"].as_u64().unwrap_or(0),
                    value["usage"]["output_tokens"].as_u64().unwrap_or(0),
                )
            }
        };
        if flags.contains(&ProviderFlag::ContentFiltered) {
            return Err(BackendError::new(TechnicalErrorClass::ContentFilter, "response filtered"));
        }
        Ok(CompletionResult {
            text,
            tokens_in,
            tokens_out,
            cost: Cost::for_tokens(tokens_in, self.price_in_per_1k)
                + Cost::for_tokens(tokens_out, self.price_out_per_1k),
            provider_flags: flags,
        })
    }
}

fn role_name(role: Role) -> &'static str {
    match role {
        Role::System => "system",
        Role::User => "user",
        Role::Assistant => "assistant",
    }
}

/// Maps an error response body to a technical error class.
pub(crate) fn classify_error(status: u16, body: &Value) -> TechnicalErrorClass {
    let text = body.to_string().to_ascii_lowercase();
    if text.contains("context_length_exceeded")
        || text.contains("maximum context length")
        || text.contains("prompt is too long")
    {
        TechnicalErrorClass::ContextLengthExceeded
    } else if text.contains("content_filter") || text.contains("content_policy") {
        TechnicalErrorClass::ContentFilter
    } else if status == 413 {
        TechnicalErrorClass::ContextLengthExceeded
    } else {
        TechnicalErrorClass::ProviderFailure
    }
}

impl Backend for HttpChatBackend {
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
        check_context_window(self, request)?;
        let body = self.body(request);
        let mut last = None;
        for attempt in 0..ATTEMPTS {
            if attempt > 0 {
                thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            match self.send(&body) {
                Ok((200..=299, value)) => return self.decode(&value),
                Ok((status, value)) if status == 429 || status >= 500 => {
                    warn!("{}: HTTP {status}, retrying", self.id);
                    last = Some(BackendError::new(
                        TechnicalErrorClass::ProviderFailure,
                        format!("HTTP {status}: {value}"),
                    ));
                }
                Ok((status, value)) => {
                    return Err(BackendError::new(
                        classify_error(status, &value),
                        format!("HTTP {status}: {value}"),
                    ))
                }
                Err(e) => last = Some(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }
}
