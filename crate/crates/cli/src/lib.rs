//! Experiment runner for the `nodal-lab` binary: configuration, pipelines
//! from models to reports, and named suites.

pub mod app;
pub mod config;
pub mod experiments;
pub mod suite;
