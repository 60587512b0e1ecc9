//! Trajectory log files: one JSON record per line, one file per
//! (config, instance) run.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{Attempt, ChatMessage};
use crate::domain::{BenchmarkInstance, Cost, EvalRecord, Outcome, RunConfig, Trajectory, TrajectoryStep};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Header {
        instance: BenchmarkInstance,
        config: RunConfig,
        provider: String,
    },
    Prompt {
        messages: Vec<ChatMessage>,
    },
    Attempt {
        step: u32,
        attempt: Attempt,
    },
    ContextTrim {
        step: u32,
        paper_id: String,
    },
    Step {
        step: TrajectoryStep,
    },
    Outcome {
        outcome: Outcome,
        total_cost: Cost,
        total_duration_ms: u64,
        /// Spend on a final turn that never produced a step.
        #[serde(default)]
        failed_turn_cost: Cost,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        message: Option<String>,
    },
    Score {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resolved_title: Option<String>,
        record: EvalRecord,
    },
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path} line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}: {message}")]
    Incomplete { path: String, message: String },
}

/// A run reassembled from its log.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub instance: BenchmarkInstance,
    pub config: RunConfig,
    pub trajectory: Trajectory,
    pub failed_turn_cost: Cost,
    pub resolved_title: Option<String>,
    pub record: Option<EvalRecord>,
}

fn safe_component(s: &str) -> String {
    let cleaned: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    match cleaned.trim_matches('.') {
        "" => "_".to_string(),
        trimmed => trimmed.to_string(),
    }
}

/// `<root>/<config id segments>/<instance id>.jsonl`.
pub fn log_path(root: &Path, config_id: &str, instance_id: &str) -> PathBuf {
    let mut path = root.to_path_buf();
    for segment in config_id.split('/') {
        path.push(safe_component(segment));
    }
    path.push(format!("{}.jsonl", safe_component(instance_id)));
    path
}

pub fn write_log(path: &Path, records: &[LogRecord]) -> Result<(), LogError> {
    let io = |source| LogError::Io { path: path.display().to_string(), source };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    let mut buf = Vec::new();
    for record in records {
        serde_json::to_writer(&mut buf, record).expect("log record serializes");
        buf.push(b'\n');
    }
    fs::File::create(path).and_then(|mut f| f.write_all(&buf)).map_err(io)
}

pub fn read_records(path: &Path) -> Result<Vec<LogRecord>, LogError> {
    let p = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| LogError::Io { path: p.clone(), source })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| LogError::Parse {
                path: p.clone(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_log(path: &Path) -> Result<RunLog, LogError> {
    let incomplete = |message: &str| LogError::Incomplete {
        path: path.display().to_string(),
        message: message.to_string(),
    };
    let mut header = None;
    let mut steps = Vec::new();
    let mut end = None;
    let mut score = None;
    for record in read_records(path)? {
        match record {
            LogRecord::Header { instance, config, .. } => header = Some((instance, config)),
            LogRecord::Step { step } => steps.push(step),
            LogRecord::Outcome { outcome, total_cost, total_duration_ms, failed_turn_cost, .. } => {
                end = Some((outcome, total_cost, total_duration_ms, failed_turn_cost))
            }
            LogRecord::Score { resolved_title, record } => score = Some((resolved_title, record)),
            LogRecord::Prompt { .. } | LogRecord::Attempt { .. } | LogRecord::ContextTrim { .. } => {}
        }
    }
    let (instance, config) = header.ok_or_else(|| incomplete("no header record"))?;
    let (outcome, total_cost, total_duration_ms, failed_turn_cost) =
        end.ok_or_else(|| incomplete("no outcome record"))?;
    let (resolved_title, record) = match score {
        Some((title, record)) => (title, Some(record)),
        None => (None, None),
    };
    Ok(RunLog {
        trajectory: Trajectory {
            instance_id: instance.instance_id.clone(),
            config_id: config.config_id.clone(),
            steps,
            outcome,
            total_cost,
            total_duration_ms,
        },
        instance,
        config,
        failed_turn_cost,
        resolved_title,
        record,
    })
}

/// Every `.jsonl` file below `root`, in path order.
pub fn find_logs(root: &Path) -> Result<Vec<PathBuf>, LogError> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let entries =
            fs::read_dir(&dir).map_err(|source| LogError::Io { path: dir.display().to_string(), source })?;
        for entry in entries {
            let path = entry.map_err(|source| LogError::Io { path: dir.display().to_string(), source })?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "jsonl") {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}
