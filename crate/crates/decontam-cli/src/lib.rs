//! Harness library behind the `decontam` command line: experiment
//! configuration, pipeline orchestration, recovery evaluation, and report
//! emission.

pub mod config;
pub mod experiment;
pub mod report;
