//! Benchmark harness: dataset loading, matrix runs, scoring, aggregation,
//! reporting, replay, and the curation tools.

mod aggregate;
mod ambiguity;
mod annotations;
mod dataset;
mod human;
mod matrix;
mod memorize;
mod replay;
mod report;
mod score;
mod tags;

pub use aggregate::{aggregate, AggregateReport, ConfigReport, Ratio, ScoredRun, DEFAULT_CUTOFF_YEAR};
pub use ambiguity::{
    ambiguity_stats, citation_groups, detect_multicite_ambiguity, AmbiguityError, AmbiguityLine, AmbiguityStats,
};
pub use annotations::{load_annotations, parse_annotations, AnnotationError, Annotations};
pub use dataset::{load_dataset, parse_dataset, write_dataset, DatasetError};
pub use human::{
    run_human_session, sample_instances, AnswerEvent, AnswerSource, HumanResult, ScriptedAnswers, TerminalSource,
    DEFAULT_TIME_LIMIT_SECS,
};
pub use matrix::{run_matrix, to_scored, MatrixError, MatrixOutput, RunMatrix, DEFAULT_CONCURRENCY, TRAJECTORY_DIR};
pub use memorize::{memorization_filter, memorize_config_id, CandidateVerdict, FilterOutcome, RunVerdict, DEFAULT_REPEATS};
pub use replay::replay;
pub use report::{emit_report, render_csv, render_markdown, WriteFailure, REPORT_CSV, REPORT_MD};
pub use score::{resolve_selected_title, score_selection, title_from_trajectory};
pub use tags::{generate_tags, parse_tags, TagError, DENY_LIST, TAG_COUNT};
