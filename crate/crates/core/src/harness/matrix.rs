use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::aggregate::{aggregate, AggregateReport, ScoredRun};
use super::report::{emit_report, WriteFailure};
use super::score::{resolve_selected_title, score_selection};
use crate::agent::{log_path, run_instance, write_log, ClockKind, LogError, LogRecord, RunLog};
use crate::backend::Backend;
use crate::domain::{BenchmarkInstance, CommandClass, ConfigError, RunConfig};
use crate::gateway::Gateway;

pub const DEFAULT_CONCURRENCY: usize = 4;
pub const TRAJECTORY_DIR: &str = "trajectories";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMatrix {
    pub configs: Vec<RunConfig>,
    pub dataset: PathBuf,
    pub out_dir: PathBuf,
    pub concurrency_limit: usize,
}

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("duplicate config id `{0}`")]
    DuplicateConfig(String),
    #[error("config `{id}`: {error}")]
    InvalidConfig { id: String, error: ConfigError },
    #[error("no backend named `{0}`")]
    UnknownBackend(String),
    #[error("config `{0}` uses commands but no search gateway is configured")]
    NoGateway(String),
    #[error("concurrency limit must be at least 1")]
    Concurrency,
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Write(#[from] WriteFailure),
}

impl RunMatrix {
    pub fn validate(&self) -> Result<(), MatrixError> {
        if self.concurrency_limit == 0 {
            return Err(MatrixError::Concurrency);
        }
        let mut ids = HashSet::new();
        for c in &self.configs {
            if !ids.insert(c.config_id.as_str()) {
                return Err(MatrixError::DuplicateConfig(c.config_id.clone()));
            }
            c.validate().map_err(|error| MatrixError::InvalidConfig { id: c.config_id.clone(), error })?;
        }
        Ok(())
    }

    /// The standard grid for one backend: every command class without and
    /// with a demonstration.
    pub fn grid(backend_id: &str, classes: &[CommandClass], demos: &[bool]) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for class in classes {
            for demo in demos {
                out.push(RunConfig::new(RunConfig::cell_id(backend_id, *class, *demo), backend_id, *class, *demo));
            }
        }
        out
    }
}

/// What a matrix run produced, in (config, instance) order.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOutput {
    pub runs: Vec<RunLog>,
    pub report: AggregateReport,
}

pub fn to_scored(runs: &[RunLog]) -> Vec<ScoredRun> {
    runs.iter()
        .map(|r| ScoredRun {
            config: r.config.clone(),
            instance: r.instance.clone(),
            record: r.record.clone().expect("scored run"),
            cost: r.trajectory.total_cost + r.failed_turn_cost,
            duration_ms: r.trajectory.total_duration_ms,
        })
        .collect()
}

/// Runs every (config, instance) pair on a bounded worker pool, writes one
/// trajectory log per run under `<out>/trajectories`, then the report.
pub fn run_matrix(
    matrix: &RunMatrix,
    instances: &[BenchmarkInstance],
    backends: &BTreeMap<String, Arc<dyn Backend>>,
    gateway: Option<&Gateway>,
    clock: ClockKind,
    cutoff_year: i32,
) -> Result<MatrixOutput, MatrixError> {
    matrix.validate()?;
    for c in &matrix.configs {
        if !backends.contains_key(&c.backend_id) {
            return Err(MatrixError::UnknownBackend(c.backend_id.clone()));
        }
        if c.command_class != CommandClass::NoCommands && gateway.is_none() {
            return Err(MatrixError::NoGateway(c.config_id.clone()));
        }
    }
    let jobs: Vec<(&RunConfig, &BenchmarkInstance)> =
        matrix.configs.iter().flat_map(|c| instances.iter().map(move |i| (c, i))).collect();
    let results: Mutex<Vec<Option<Result<RunLog, MatrixError>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let log_root = matrix.out_dir.join(TRAJECTORY_DIR);
    std::thread::scope(|scope| {
        for _ in 0..matrix.concurrency_limit.min(jobs.len().max(1)) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some((config, instance)) = jobs.get(k) else { break };
                let backend = backends[&config.backend_id].as_ref();
                let result = run_one(config, instance, backend, gateway, clock, &log_root);
                results.lock().expect("results lock")[k] = Some(result);
            });
        }
    });
    let runs = results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect::<Result<Vec<_>, _>>()?;
    let report = aggregate(&to_scored(&runs), cutoff_year);
    emit_report(&report, &matrix.out_dir)?;
    Ok(MatrixOutput { runs, report })
}

fn run_one(
    config: &RunConfig,
    instance: &BenchmarkInstance,
    backend: &dyn Backend,
    gateway: Option<&Gateway>,
    clock: ClockKind,
    log_root: &Path,
) -> Result<RunLog, MatrixError> {
    let clock = clock.make();
    let mut output = run_instance(config, instance, backend, gateway, clock.as_ref());
    let resolved_title = resolve_selected_title(&output.trajectory, instance, gateway);
    let record = score_selection(&output.trajectory.outcome, instance, &config.config_id, resolved_title.as_deref());
    output.records.push(LogRecord::Score { resolved_title: resolved_title.clone(), record: record.clone() });
    write_log(&log_path(log_root, &config.config_id, &instance.instance_id), &output.records)?;
    Ok(RunLog {
        instance: instance.clone(),
        config: config.clone(),
        trajectory: output.trajectory,
        failed_turn_cost: output.failed_turn_cost,
        resolved_title,
        record: Some(record),
    })
}
