//! Backend registry file: one `[[backend]]` table per model.
//!
//! ```toml
//! [[backend]]
//! id = "gpt-4o"
//! kind = "openai"
//! endpoint = "https://api.openai.com/v1/chat/completions"
//! model = "gpt-4o-2024-05-13"
//! context_window = 128000
//! input_price_per_1k = 0.005
//! output_price_per_1k = 0.015
//! api_key_env = "OPENAI_API_KEY"
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::http::{ApiFlavor, HttpChatBackend};
use super::scripted::{ScriptError, ScriptedBackend, DEFAULT_SCRIPTED_WINDOW};
use super::Backend;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    OpenAi,
    Anthropic,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub id: String,
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default = "default_window")]
    pub context_window: usize,
    #[serde(default)]
    pub input_price_per_1k: f64,
    #[serde(default)]
    pub output_price_per_1k: f64,
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// Fixture path for scripted backends, relative to the registry file.
    #[serde(default)]
    pub script: Option<PathBuf>,
}

fn default_window() -> usize {
    DEFAULT_SCRIPTED_WINDOW
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("reading registry {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("registry syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("duplicate backend id `{0}`")]
    Duplicate(String),
    #[error("unknown backend `{0}`")]
    Unknown(String),
    #[error("backend `{id}`: {message}")]
    Incomplete { id: String, message: String },
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("http client: {0}")]
    Http(#[from] reqwest::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BackendRegistry {
    #[serde(default, rename = "backend")]
    pub backends: Vec<BackendSpec>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl BackendRegistry {
    pub fn parse(text: &str) -> Result<Self, RegistryError> {
        let registry: BackendRegistry = toml::from_str(text)?;
        let mut seen = std::collections::HashSet::new();
        for spec in &registry.backends {
            if !seen.insert(spec.id.as_str()) {
                return Err(RegistryError::Duplicate(spec.id.clone()));
            }
        }
        Ok(registry)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let text = fs::read_to_string(path)
            .map_err(|source| RegistryError::Io { path: path.display().to_string(), source })?;
        let mut registry = Self::parse(&text)?;
        registry.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(registry)
    }

    /// Commonly used hosted models with list prices per 1K tokens.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("builtin registry parses")
    }

    pub fn get(&self, id: &str) -> Result<&BackendSpec, RegistryError> {
        self.backends
            .iter()
            .find(|b| b.id == id)
            .ok_or_else(|| RegistryError::Unknown(id.to_string()))
    }

    pub fn build(&self, id: &str) -> Result<Arc<dyn Backend>, RegistryError> {
        let spec = self.get(id)?;
        let incomplete =
            |message: &str| RegistryError::Incomplete { id: spec.id.clone(), message: message.into() };
        match spec.kind {
            BackendKind::Scripted => {
                let script = spec.script.as_ref().ok_or_else(|| incomplete("missing `script`"))?;
                let path = self.base_dir.join(script);
                Ok(Arc::new(
                    ScriptedBackend::from_file(&spec.id, &path)?
                        .with_window(spec.context_window)
                        .with_prices(spec.input_price_per_1k, spec.output_price_per_1k),
                ))
            }
            BackendKind::OpenAi | BackendKind::Anthropic => {
                let flavor = if spec.kind == BackendKind::OpenAi {
                    ApiFlavor::OpenAi
                } else {
                    ApiFlavor::Anthropic
                };
                let endpoint = spec.endpoint.clone().ok_or_else(|| incomplete("missing `endpoint`"))?;
                let model = spec.model.clone().ok_or_else(|| incomplete("missing `model`"))?;
                let api_key = spec.api_key_env.as_deref().and_then(|var| std::env::var(var).ok());
                Ok(Arc::new(HttpChatBackend::new(
                    &spec.id,
                    flavor,
                    endpoint,
                    model,
                    spec.context_window,
                    spec.input_price_per_1k,
                    spec.output_price_per_1k,
                    api_key,
                )?))
            }
        }
    }
}

const BUILTIN: &str = r#"
[[backend]]
id = "gpt-4o"
kind = "openai"
endpoint = "https://api.openai.com/v1/chat/completions"
model = "gpt-4o-2024-05-13"
context_window = 128000
input_price_per_1k = 0.005
output_price_per_1k = 0.015
api_key_env = "OPENAI_API_KEY"

[[backend]]
id = "claude-3-opus"
kind = "anthropic"
endpoint = "https://api.anthropic.com/v1/messages"
model = "claude-3-opus-20240229"
context_window = 200000
input_price_per_1k = 0.015
output_price_per_1k = 0.075
api_key_env = "ANTHROPIC_API_KEY"

[[backend]]
id = "claude-3.5-sonnet"
kind = "anthropic"
endpoint = "https://api.anthropic.com/v1/messages"
model = "claude-3-5-sonnet-20240620"
context_window = 200000
input_price_per_1k = 0.003
output_price_per_1k = 0.015
api_key_env = "ANTHROPIC_API_KEY"

[[backend]]
id = "llama-3-70b"
kind = "openai"
endpoint = "http://localhost:8000/v1/chat/completions"
model = "meta-llama/Meta-Llama-3-70B-Instruct"
context_window = 8192
api_key_env = "LLAMA_API_KEY"
"#;
