//! Fixed-step simulation: trajectory, RK4 stepping, the dual-rate scheduler,
//! metrics and telemetry.

pub mod config;
pub mod engine;
pub mod metrics;
pub mod record;
pub mod rk4;
pub mod trajectory;

use thiserror::Error;

use crate::control::ControlError;
use crate::error::ConfigError;

pub use config::{RuleOutcome, Scenario, SimConfig};
pub use engine::{run_scenario, ScenarioResult, Simulation};
pub use metrics::{compute_metrics, rmse_mae, Metrics, MetricsAccumulator, MetricsError};
pub use record::{CsvSink, NullSink, RecordSink, SimRecord, CSV_HEADER};
pub use rk4::rk4_step;
pub use trajectory::{reference_trajectory, CircleTrajectory, TrajectoryConfig, TrajectoryKind};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid step size {dt}")]
    InvalidStep { dt: f64 },
    #[error("state became non-finite at t = {t:.3} s")]
    NonFinite { t: f64 },
    #[error("diverged at t = {t:.3} s: position error {position_error:.3} m")]
    Diverged { t: f64, position_error: f64 },
    #[error("controller failed at t = {t:.3} s: {source}")]
    Control { t: f64, source: ControlError },
    #[error("record output failed: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl SimError {
    /// Time of failure for errors raised while the simulation was running.
    pub fn failure_time(&self) -> Option<f64> {
        match self {
            SimError::NonFinite { t } | SimError::Diverged { t, .. } | SimError::Control { t, .. } => Some(*t),
            _ => None,
        }
    }

    /// The run blew up rather than being misconfigured or failing on I/O.
    pub fn is_divergence(&self) -> bool {
        self.failure_time().is_some()
    }
}
