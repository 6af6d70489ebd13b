//! Config-driven batch runner for the qcgeom toolkit.

pub mod config;
pub mod jobs;

pub use config::{Command, JobConfig};
pub use jobs::{run, JobOutcome};
