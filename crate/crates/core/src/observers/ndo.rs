//! Momentum-based nonlinear disturbance observer for the full force vector.
//!
//! `ż = −L (z + L m v + F + G)`, `ΔF̂ = z + L m v`, so the estimate obeys
//! `ΔF̂̇ = −L (ΔF̂ − ΔF)` without any knowledge of the disturbance direction.

use super::{check_dt, ObserverError};
use crate::geom::{Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdoState {
    pub aux: Vec3,
    /// Diagonal observer gain L, 1/s.
    pub gain: Mat3,
    pub mass: f64,
    pub force_hat: Vec3,
}

impl NdoState {
    pub fn new(gain_diag: Vec3, mass: f64, velocity: &Vec3, initial_estimate: Vec3) -> Self {
        let gain = Mat3::from_diagonal(&gain_diag);
        let aux = initial_estimate - gain * velocity * mass;
        Self { aux, gain, mass, force_hat: initial_estimate }
    }

    pub fn estimate(&self, velocity: &Vec3) -> Vec3 {
        self.aux + self.gain * velocity * self.mass
    }

    /// One forward-Euler step; refreshes `force_hat` from `velocity` first.
    pub fn update(
        &mut self,
        velocity: &Vec3,
        thrust_force: &Vec3,
        gravity_force: &Vec3,
        dt: f64,
    ) -> Result<(), ObserverError> {
        check_dt(dt)?;
        self.force_hat = self.estimate(velocity);
        self.aux -= self.gain * (self.force_hat + thrust_force + gravity_force) * dt;
        Ok(())
    }
}
