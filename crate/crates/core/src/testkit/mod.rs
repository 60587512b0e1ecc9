//! Fixture builders shared by unit tests, integration tests, the CLI tests
//! and the Python smoke test.

pub mod worked_example;
pub mod pdf;
pub mod world;
