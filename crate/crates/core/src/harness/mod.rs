//! Trace-driven closed-loop simulation and its reports.

mod bandwidth;
mod config;
mod experiment;
mod report;
mod trace;

use std::path::PathBuf;

use thiserror::Error;

use crate::alloc::AllocError;
use crate::edge::EdgeError;
use crate::popularity::PopularityError;
use crate::stream::StreamError;

pub use bandwidth::{baseline_bandwidth, has_window, BandwidthRow, BandwidthScheme};
pub use config::{apply_override, BudgetConfig, ExperimentConfig, Scheme};
pub use experiment::{
    load_config_graph, load_config_traces, run_edge_only, run_experiment, run_with_traces, EdgeRun, ExperimentReport,
    StartupDelay,
};
pub use report::{cdf, emit_report, load_summary, Summary};
pub use trace::{
    gen_traces, load_traces, save_traces, switch_rate, BehaviorModel, Burst, DwellParams, Interactivity, ViewTrace,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid trace: {0}")]
    Validation(String),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Edge(#[from] EdgeError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error(transparent)]
    Popularity(#[from] PopularityError),
    #[error("user {user_id} received an undecodable stream ({detail}); dump at {dump:?}")]
    Decodability {
        user_id: u32,
        detail: String,
        dump: Option<PathBuf>,
    },
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}
