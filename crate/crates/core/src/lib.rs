//! Citation attribution toolkit.
//!
//! An agent that searches for, reads, and selects scientific papers to
//! attribute a citation-masked excerpt, together with the pieces needed to
//! benchmark it: a scholarly search gateway, a document reader, an exact
//! nearest-neighbour retrieval baseline, and an evaluation harness.

pub mod agent;
pub mod backend;
pub mod baseline;
pub mod domain;
pub mod gateway;
pub mod harness;
pub mod reader;
pub mod testkit;
pub mod tokens;

pub use domain::{
    normalize_title, validate_instance, Action, BenchmarkInstance, CommandClass, Cost, EvalRecord,
    MatchKind, Observation, Outcome, PaperDate, PaperMeta, RunConfig, TechnicalErrorClass,
    Trajectory, TrajectoryStep,
};
