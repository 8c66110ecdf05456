//! Fixed-time sliding-mode observer for the body torque disturbance.
//!
//! ```text
//! e₁  = μ − ω
//! μ̇   = −J⁻¹(ω× J ω) + J⁻¹ τ + ξ₁
//! ξ₁  = −l₁ e₁/‖e₁‖^½ − l₂ e₁‖e₁‖ + ξ₂
//! ξ̇₂  = −l₃ e₁/‖e₁‖
//! τ̂   = J ξ₂
//! ```
//!
//! In discrete time `‖e₁‖` hits zero, so both denominators use
//! `max(‖e₁‖, eps)`.

use super::{check_dt, ObserverError};
use crate::geom::{Mat3, Vec3};

pub const DEFAULT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoState {
    /// Angular-velocity estimate μ, rad/s.
    pub mu: Vec3,
    pub xi1: Vec3,
    /// Disturbance acceleration estimate ξ₂, rad/s².
    pub xi2: Vec3,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    /// Time after which the estimate is trusted, s.
    pub t0: f64,
    pub eps: f64,
}

impl SmoState {
    pub fn new(omega: &Vec3, l1: f64, l2: f64, l3: f64, t0: f64) -> Self {
        Self { mu: *omega, xi1: Vec3::zeros(), xi2: Vec3::zeros(), l1, l2, l3, t0, eps: DEFAULT_EPS }
    }

    /// Torque disturbance estimate `J ξ₂`, N·m.
    pub fn torque_estimate(&self, inertia: &Mat3) -> Vec3 {
        inertia * self.xi2
    }

    /// One forward-Euler step given measured body rate and the total torque
    /// applied by the rotors over the step.
    pub fn update(
        &mut self,
        omega: &Vec3,
        inertia: &Mat3,
        inertia_inv: &Mat3,
        torque: &Vec3,
        dt: f64,
    ) -> Result<(), ObserverError> {
        check_dt(dt)?;
        let e1 = self.mu - omega;
        let norm = e1.norm().max(self.eps);
        self.xi1 = -e1 * (self.l1 / norm.sqrt()) - e1 * (self.l2 * e1.norm()) + self.xi2;
        let gyro = omega.cross(&(inertia * omega));
        let mu_dot = inertia_inv * (torque - gyro) + self.xi1;
        let xi2_dot = -e1 * (self.l3 / norm);
        self.mu += mu_dot * dt;
        self.xi2 += xi2_dot * dt;
        Ok(())
    }
}
