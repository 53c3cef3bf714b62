//! Experiment orchestration: configuration, dataset preparation, the
//! per-round protocol tying training, privacy, consensus, rewards, and the
//! network together, and artifact export.
//!
//! A run is fully determined by `(ExperimentConfig, master_seed)`: every
//! random stream is derived by hashing the master seed with a role tag, so
//! re-running a config reproduces the ledger and metrics byte for byte.

mod config;
mod data;
mod experiment;
mod round;
mod sweep;

pub use config::{DatasetConfig, ExperimentConfig};
pub use data::{generate_synthetic, load_idx, IdxData, IdxError};
pub use experiment::{
    metrics_csv, run_experiment, run_to_dir, write_artifacts, ClientSummary, ExperimentOutcome,
    OutputFormat, StopReason, Summary,
};
pub use round::RoundReport;
pub use sweep::{run_sweep, trend_csv, write_sweep, SweepArm, SweepReport, SweepRun};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Idx(#[from] IdxError),
    #[error(transparent)]
    Fl(#[from] crate::fl::FlError),
    #[error(transparent)]
    Privacy(#[from] crate::privacy::PrivacyError),
    #[error(transparent)]
    Ledger(#[from] crate::ledger::LedgerError),
    #[error(transparent)]
    Net(#[from] crate::netsim::NetSimError),
    #[error(transparent)]
    Incentive(#[from] crate::incentive::IncentiveError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
