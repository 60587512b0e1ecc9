use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which tools the agent may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CommandClass {
    #[serde(rename = "none")]
    NoCommands,
    #[serde(rename = "search_only")]
    SearchOnly,
    #[serde(rename = "search_read")]
    SearchAndRead,
}

impl CommandClass {
    pub const ALL: [CommandClass; 3] =
        [CommandClass::NoCommands, CommandClass::SearchOnly, CommandClass::SearchAndRead];

    pub fn as_str(&self) -> &'static str {
        match self {
            CommandClass::NoCommands => "none",
            CommandClass::SearchOnly => "search_only",
            CommandClass::SearchAndRead => "search_read",
        }
    }

    /// Human-readable label matching the usual results-table rows.
    pub fn label(&self) -> &'static str {
        match self {
            CommandClass::NoCommands => "No Commands",
            CommandClass::SearchOnly => "Search Only",
            CommandClass::SearchAndRead => "Search and Read",
        }
    }
}

impl fmt::Display for CommandClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CommandClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(CommandClass::NoCommands),
            "search_only" => Ok(CommandClass::SearchOnly),
            "search_read" => Ok(CommandClass::SearchAndRead),
            other => Err(format!(
                "unknown command class `{other}` (expected none, search_only or search_read)"
            )),
        }
    }
}

/// Everything that determines one cell of a run matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub config_id: String,
    pub backend_id: String,
    pub command_class: CommandClass,
    pub with_demo: bool,
    #[serde(default = "defaults::max_actions")]
    pub max_actions: u32,
    #[serde(default = "defaults::force_select_at")]
    pub force_select_at: u32,
    #[serde(default = "defaults::top_k")]
    pub top_k: usize,
    #[serde(default = "defaults::temperature")]
    pub temperature: f64,
    #[serde(default = "defaults::read_text_budget")]
    pub read_text_budget: usize,
    #[serde(default = "defaults::parse_retries")]
    pub parse_retries: u32,
    #[serde(default)]
    pub seed: Option<u64>,
}

pub mod defaults {
    pub const MAX_ACTIONS: u32 = 15;
    pub const FORCE_SELECT_AT: u32 = 14;
    pub const TOP_K: usize = 10;
    pub const TEMPERATURE: f64 = 0.95;
    pub const READ_TEXT_BUDGET: usize = 60_000;
    pub const PARSE_RETRIES: u32 = 2;

    pub fn max_actions() -> u32 {
        MAX_ACTIONS
    }
    pub fn force_select_at() -> u32 {
        FORCE_SELECT_AT
    }
    pub fn top_k() -> usize {
        TOP_K
    }
    pub fn temperature() -> f64 {
        TEMPERATURE
    }
    pub fn read_text_budget() -> usize {
        READ_TEXT_BUDGET
    }
    pub fn parse_retries() -> u32 {
        PARSE_RETRIES
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("force_select_at ({force_select_at}) must satisfy 1 <= force_select_at < max_actions ({max_actions})")]
    ForceSelect { force_select_at: u32, max_actions: u32 },
    #[error("top_k must be at least 1")]
    TopK,
    #[error("temperature {0} outside [0, 2]")]
    Temperature(f64),
    #[error("read_text_budget must be positive")]
    ReadBudget,
    #[error("config_id must not be empty")]
    EmptyId,
}

impl RunConfig {
    /// A config with every knob at its default.
    pub fn new(
        config_id: impl Into<String>,
        backend_id: impl Into<String>,
        command_class: CommandClass,
        with_demo: bool,
    ) -> Self {
        RunConfig {
            config_id: config_id.into(),
            backend_id: backend_id.into(),
            command_class,
            with_demo,
            max_actions: defaults::MAX_ACTIONS,
            force_select_at: defaults::FORCE_SELECT_AT,
            top_k: defaults::TOP_K,
            temperature: defaults::TEMPERATURE,
            read_text_budget: defaults::READ_TEXT_BUDGET,
            parse_retries: defaults::PARSE_RETRIES,
            seed: None,
        }
    }

    /// Conventional id for a (backend, class, demo) cell, e.g. `gpt-4o/search_read/demo`.
    pub fn cell_id(backend_id: &str, class: CommandClass, with_demo: bool) -> String {
        format!("{backend_id}/{}/{}", class, if with_demo { "demo" } else { "nodemo" })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.config_id.trim().is_empty() {
            return Err(ConfigError::EmptyId);
        }
        if self.force_select_at < 1 || self.force_select_at >= self.max_actions {
            return Err(ConfigError::ForceSelect {
                force_select_at: self.force_select_at,
                max_actions: self.max_actions,
            });
        }
        if self.top_k < 1 {
            return Err(ConfigError::TopK);
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ConfigError::Temperature(self.temperature));
        }
        if self.read_text_budget == 0 {
            return Err(ConfigError::ReadBudget);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::new("c", "b", CommandClass::SearchAndRead, true);
        assert_eq!((c.max_actions, c.force_select_at, c.top_k), (15, 14, 10));
        assert_eq!(c.temperature, 0.95);
        c.validate().unwrap();
    }

    #[test]
    fn force_select_bounds() {
        let mut c = RunConfig::new("c", "b", CommandClass::SearchOnly, false);
        c.force_select_at = 15;
        assert!(matches!(c.validate(), Err(ConfigError::ForceSelect { .. })));
        c.force_select_at = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn command_class_spelling() {
        for class in CommandClass::ALL {
            assert_eq!(class.as_str().parse::<CommandClass>().unwrap(), class);
        }
        assert!("read_only".parse::<CommandClass>().is_err());
    }
}
