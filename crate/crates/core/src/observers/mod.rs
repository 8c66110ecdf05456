//! Disturbance estimators: the voltage-drop observer, the momentum-based NDO
//! and position integrator used as baselines, and the fixed-time sliding-mode
//! observer for body torque.

pub mod integrator;
pub mod ndo;
pub mod smo;
pub mod vdo;

pub use integrator::IntegratorState;
pub use ndo::NdoState;
pub use smo::SmoState;
pub use vdo::VdoState;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ObserverError {
    #[error("observer gain condition violated: ζ·Θ = {value} must be positive")]
    GainCondition { value: f64 },
    #[error("observer step must be positive, got {dt}")]
    InvalidStep { dt: f64 },
}

pub(crate) fn check_dt(dt: f64) -> Result<(), ObserverError> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(ObserverError::InvalidStep { dt })
    }
}
