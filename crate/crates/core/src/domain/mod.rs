//! Shared data types for instances, papers, agent moves, trajectories and
//! evaluation records. Everything here is immutable once built.

mod action;
mod config;
mod cost;
mod date;
mod eval;
mod instance;
mod paper;
mod title;
mod trajectory;

pub use action::{Action, Observation};
pub use config::{CommandClass, ConfigError, RunConfig};
pub use cost::Cost;
pub use date::{DateError, PaperDate};
pub use eval::{ErrorLabel, EvalRecord, MatchKind, TechnicalErrorClass};
pub use instance::{validate_instance, BenchmarkInstance, RawInstance, ValidationError, MASK_TOKEN};
pub use paper::PaperMeta;
pub use title::normalize_title;
pub use trajectory::{Outcome, Trajectory, TrajectoryError, TrajectoryStep};
