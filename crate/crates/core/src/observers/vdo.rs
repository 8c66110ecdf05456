//! Voltage-drop observer.
//!
//! Estimates the scalar thrust shortfall `Δf` whose force acts along the
//! known direction `Θ(η)`:
//!
//! ```text
//! ℘̇  = −ζ (G + F + Θ Δf̂)
//! Δf̂ = ℘ + ζ m v
//! ```
//!
//! The estimation error then obeys `Δf̃̇ = −(ζ·Θ) Δf̃ − Δḟ`, which is stable
//! while `ζ·Θ > 0`.

use super::{check_dt, ObserverError};
use crate::geom::{theta_vector, EulerAngles, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VdoState {
    /// Auxiliary state ℘, N.
    pub aux: f64,
    /// Latest estimate Δf̂, N.
    pub delta_f_hat: f64,
    /// Row gain ζ, 1/s.
    pub gain: Vec3,
    pub mass: f64,
}

impl VdoState {
    /// Starts the observer so that its first output equals `initial_estimate`.
    pub fn new(gain: Vec3, mass: f64, velocity: &Vec3, initial_estimate: f64) -> Self {
        let aux = initial_estimate - mass * gain.dot(velocity);
        Self { aux, delta_f_hat: initial_estimate, gain, mass }
    }

    /// Current estimate for the measured velocity.
    pub fn estimate(&self, velocity: &Vec3) -> f64 {
        self.aux + self.mass * self.gain.dot(velocity)
    }

    /// `ζ·Θ(η)`, the error decay rate at attitude `η`.
    pub fn decay_rate(&self, eta: &EulerAngles) -> f64 {
        self.gain.dot(&theta_vector(eta))
    }

    /// One forward-Euler step.
    ///
    /// `thrust_force` is the earth-frame rotor force applied over the coming
    /// interval and `gravity_force` is `m g e_z`. Refreshes `delta_f_hat` from
    /// `velocity` before integrating ℘.
    pub fn update(
        &mut self,
        velocity: &Vec3,
        thrust_force: &Vec3,
        gravity_force: &Vec3,
        eta: &EulerAngles,
        dt: f64,
    ) -> Result<(), ObserverError> {
        check_dt(dt)?;
        let theta = theta_vector(eta);
        let rate = self.gain.dot(&theta);
        if !(rate > 0.0) {
            return Err(ObserverError::GainCondition { value: rate });
        }
        self.delta_f_hat = self.estimate(velocity);
        let aux_dot = -self.gain.dot(&(gravity_force + thrust_force + theta * self.delta_f_hat));
        self.aux += dt * aux_dot;
        Ok(())
    }

    /// Earth-frame force estimate `Δf̂ Θ(η)`.
    pub fn force_estimate(&self, eta: &EulerAngles) -> Vec3 {
        theta_vector(eta) * self.delta_f_hat
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const M: f64 = 2.0;
    const G: f64 = 9.81;

    /// Translational plant with thrust held over each observer step; the
    /// velocity update is exact for piecewise-constant forces.
    fn drive(
        vdo: &mut VdoState,
        eta: EulerAngles,
        thrust: f64,
        delta_f: impl Fn(f64) -> f64,
        dt: f64,
        steps: usize,
    ) -> Vec<(f64, f64, f64)> {
        let theta = theta_vector(&eta);
        let gravity = Vec3::new(0.0, 0.0, M * G);
        let force = -theta * thrust;
        let mut v = Vec3::zeros();
        let mut out = Vec::with_capacity(steps);
        let sub = 100;
        for k in 0..steps {
            let t = k as f64 * dt;
            vdo.update(&v, &force, &gravity, &eta, dt).unwrap();
            out.push((t, vdo.delta_f_hat, delta_f(t)));
            // midpoint quadrature of ∫Δf over the step
            let h = dt / sub as f64;
            let integral: f64 = (0..sub).map(|i| delta_f(t + (i as f64 + 0.5) * h) * h).sum();
            v += ((force + gravity) * dt + theta * integral) / M;
        }
        out
    }

    #[test]
    fn fixed_point_without_disturbance() {
        let mut vdo = VdoState::new(Vec3::new(0.0, 0.0, 2.0), M, &Vec3::zeros(), 0.0);
        let out = drive(&mut vdo, EulerAngles::ZERO, M * G, |_| 0.0, 0.01, 500);
        assert!(out.iter().all(|(_, est, _)| *est == 0.0));
    }

    #[test]
    fn constant_sag_decays_exponentially() {
        let mut vdo = VdoState::new(Vec3::new(0.0, 0.0, 2.0), M, &Vec3::zeros(), 0.0);
        let dt = 0.01;
        let out = drive(&mut vdo, EulerAngles::ZERO, M * G, |_| 4.0, dt, 300);
        // ζΘ = 2 s⁻¹: error halves every ln2/2 s once the discrete rate is used
        let rate_discrete = -(1.0 - 2.0 * dt).ln() / dt;
        for (t, est, truth) in out {
            let expected = -4.0 * (-rate_discrete * t).exp();
            assert_relative_eq!(est - truth, expected, max_relative = 1e-4);
        }
    }

    #[test]
    fn force_estimate_direction() {
        let mut vdo = VdoState::new(Vec3::new(0.0, 0.0, 2.0), M, &Vec3::zeros(), 5.0);
        assert_eq!(vdo.force_estimate(&EulerAngles::ZERO), Vec3::new(0.0, 0.0, 5.0));
        let eta = EulerAngles::new(0.2, -0.3, 1.0);
        assert_relative_eq!(vdo.force_estimate(&eta).norm(), 5.0, epsilon = 1e-12);
        vdo.delta_f_hat = 0.0;
        assert_eq!(vdo.force_estimate(&eta), Vec3::zeros());
    }

    #[test]
    fn negative_gain_violates_condition() {
        let mut vdo = VdoState::new(Vec3::new(0.0, 0.0, -2.0), M, &Vec3::zeros(), 0.0);
        let err = vdo
            .update(&Vec3::zeros(), &Vec3::zeros(), &Vec3::zeros(), &EulerAngles::ZERO, 0.01)
            .unwrap_err();
        assert!(matches!(err, ObserverError::GainCondition { .. }));
        assert!(vdo.update(&Vec3::zeros(), &Vec3::zeros(), &Vec3::zeros(), &EulerAngles::ZERO, 0.0).is_err());
    }

    #[test]
    fn ramp_steady_state_error() {
        let mu = 0.05;
        let mut vdo = VdoState::new(Vec3::new(0.0, 0.0, 2.0), M, &Vec3::zeros(), 0.0);
        let out = drive(&mut vdo, EulerAngles::ZERO, M * G, |t| mu * t, 0.01, 3000);
        let (_, est, truth) = out.last().copied().unwrap();
        let expected = mu / 2.0;
        assert!(((truth - est).abs() - expected).abs() < 0.05 * expected);
    }
}
