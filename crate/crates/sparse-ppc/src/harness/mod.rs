//! Closed-loop Monte-Carlo simulation engine and its file outputs.

mod config;
mod output;
mod sim;

pub use config::{
    ControllerChoice, ControllerKind, DropoutConfig, InitialStateSpec, PlantSpec, SimConfig,
    WeightSpec,
};
pub use output::{
    csv_file_name, emit_outputs, parse_series_csv, render_report, series_to_csv,
    STEADY_STATE_WINDOW,
};
pub use sim::{
    run_closed_loop, run_monte_carlo, AveragedSeries, ControllerRef, MonteCarloResults, RunSetup,
    TrajectoryRecord,
};

use std::path::PathBuf;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::controllers::ControllerError;
use crate::model::ModelError;
use crate::network::NetworkError;
use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("failed to parse config {path}: {source}")]
    ConfigParse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("run {run_index} aborted at step {step}: {reason}")]
    RunAborted {
        run_index: usize,
        step: usize,
        reason: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
