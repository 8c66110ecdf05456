//! Simulation of a coaxial octocopter flying through battery voltage sag,
//! with disturbance observers in both loops of a dual-rate cascade.
//!
//! - [`geom`]: frames, Euler machinery and the thrust-loss direction
//! - [`vehicle`]: rigid-body plant, battery sag, rotor allocation
//! - [`observers`]: voltage-drop observer, NDO, integrator, sliding-mode observer
//! - [`control`]: translational and rotational control laws and the cascade
//! - [`sim`]: trajectory, RK4 stepping, scheduler, metrics, CSV records
//! - [`analysis`]: Lyapunov tooling for the translational error system

// negated float comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod control;
pub mod error;
pub mod geom;
pub mod observers;
pub mod sim;
pub mod vehicle;

pub use error::ConfigError;
