//! File formats, configuration and the batch pipeline around [`tvar_core`].
//!
//! [`pipeline::run_pipeline`] takes a [`config::PipelineConfig`] and writes
//! `report.json` plus four CSV tables into the output directory. Replicate
//! loops (bootstrap, Monte Carlo recovery) run on a rayon pool whose size can
//! be capped with the `TVAR_THREADS` environment variable.

pub mod annotations;
pub mod config;
pub mod io;
pub mod parallel;
pub mod pipeline;
pub mod report;

pub use tvar_core;
