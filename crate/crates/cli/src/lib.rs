//! Batch front end for the curvature-flow scheme: configuration parsing,
//! preset registry, run orchestration, artifacts, and the verification suite.

pub mod artifacts;
pub mod config;
pub mod presets;
pub mod report;
pub mod runner;
pub mod suite;
