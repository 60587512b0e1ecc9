use std::collections::BTreeMap;
use std::path::Path;

use super::aggregate::{aggregate, AggregateReport};
use super::matrix::{to_scored, MatrixError, TRAJECTORY_DIR};
use super::score::score_selection;
use crate::agent::{find_logs, read_log, RunLog};
use crate::domain::ErrorLabel;

/// Rebuilds the report from trajectory logs alone. Selections are re-scored
/// from the titles recorded at run time; nothing is fetched.
///
/// `dir` may be a run's output directory or its `trajectories` subdirectory.
pub fn replay(
    dir: &Path,
    cutoff_year: i32,
    labels: Option<&BTreeMap<(String, String), ErrorLabel>>,
) -> Result<(Vec<RunLog>, AggregateReport), MatrixError> {
    let nested = dir.join(TRAJECTORY_DIR);
    let root = if nested.is_dir() { nested } else { dir.to_path_buf() };
    let mut runs = Vec::new();
    for path in find_logs(&root)? {
        let mut run = read_log(&path)?;
        let mut record = score_selection(
            &run.trajectory.outcome,
            &run.instance,
            &run.config.config_id,
            run.resolved_title.as_deref(),
        );
        if let Some(labels) = labels {
            record.error_label = labels.get(&(record.instance_id.clone(), record.config_id.clone())).copied();
        }
        run.record = Some(record);
        runs.push(run);
    }
    let report = aggregate(&to_scored(&runs), cutoff_year);
    Ok((runs, report))
}
