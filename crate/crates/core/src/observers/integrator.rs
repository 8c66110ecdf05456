//! Position-error integrator with per-axis anti-windup clamp.

use super::{check_dt, ObserverError};
use crate::geom::{Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorState {
    /// ∫ e_p dt, m·s.
    pub integral: Vec3,
    /// Diagonal gain K_i, N/(m·s).
    pub gain: Mat3,
    /// Per-axis bound on |integral|, m·s.
    pub clamp: f64,
}

impl IntegratorState {
    pub fn new(gain_diag: Vec3, clamp: f64) -> Self {
        Self { integral: Vec3::zeros(), gain: Mat3::from_diagonal(&gain_diag), clamp }
    }

    pub fn update(&mut self, position_error: &Vec3, dt: f64) -> Result<(), ObserverError> {
        check_dt(dt)?;
        let c = self.clamp;
        self.integral = (self.integral + position_error * dt).map(|x| x.clamp(-c, c));
        Ok(())
    }

    /// Earth-frame compensation force `K_i ∫ e_p`, N.
    pub fn force(&self) -> Vec3 {
        self.gain * self.integral
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_error_zero_output() {
        let mut i = IntegratorState::new(Vec3::repeat(1.0), 1.0);
        for _ in 0..100 {
            i.update(&Vec3::zeros(), 0.01).unwrap();
        }
        assert_eq!(i.force(), Vec3::zeros());
    }

    #[test]
    fn accumulates_constant_error() {
        let mut i = IntegratorState::new(Vec3::repeat(1.0), 1.0);
        for _ in 0..100 {
            i.update(&Vec3::new(0.0, 0.0, 0.1), 0.01).unwrap();
        }
        assert_relative_eq!(i.integral.z, 0.1, epsilon = 1e-12);
        assert_relative_eq!(i.force().z, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn clamp_bounds_integral() {
        let mut i = IntegratorState::new(Vec3::repeat(1.0), 1.0);
        for _ in 0..10_000 {
            i.update(&Vec3::new(0.5, -0.5, 0.0), 0.01).unwrap();
            assert!(i.integral.x <= 1.0 && i.integral.y >= -1.0);
        }
        assert_eq!(i.integral.x, 1.0);
        assert_eq!(i.integral.y, -1.0);
    }
}
