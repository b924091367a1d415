//! Batch front end: run files, ensembles, artifacts.

pub mod artifacts;
pub mod commands;
pub mod config;
