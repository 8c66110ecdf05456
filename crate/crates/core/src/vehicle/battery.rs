//! Battery voltage-sag model.
//!
//! The thrust shortfall follows an exponential approach
//! `Δf(t) = Δf₀ + k_d (1 − e^{−t/τ_b})`, whose slope never exceeds `k_d/τ_b`.
//! Motor mismatch adds a small body torque: a constant bias plus uniformly
//! driven low-pass noise, bounded in norm by `‖bias‖ + √3·amplitude`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{require_positive, ConfigError};
use crate::geom::{theta_vector, EulerAngles, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryModel {
    /// Pack voltage at full charge, V. Informational; the sag acts through `Δf`.
    pub nominal_voltage: f64,
    /// Thrust shortfall at t = 0, N.
    pub delta_f0: f64,
    /// Additional shortfall reached asymptotically, N.
    pub k_d: f64,
    /// Sag time constant, s.
    pub tau_b: f64,
    /// Bound on `|dΔf/dt|`, N/s.
    pub mu: f64,
    /// Constant motor-mismatch torque, N·m.
    pub torque_bias: Vec3,
    /// Per-axis peak of the filtered torque noise, N·m.
    pub torque_noise_amplitude: f64,
    pub torque_noise_cutoff_hz: f64,
    /// Strict upper bound on `‖τ_dis‖`, N·m.
    pub torque_bound: f64,
}

impl Default for BatteryModel {
    fn default() -> Self {
        Self {
            nominal_voltage: 22.2,
            delta_f0: 3.0,
            k_d: 6.0,
            tau_b: 90.0,
            mu: 0.1,
            torque_bias: Vec3::new(0.01, -0.008, 0.005),
            torque_noise_amplitude: 0.008,
            torque_noise_cutoff_hz: 2.0,
            torque_bound: 0.05,
        }
    }
}

impl BatteryModel {
    /// A battery that produces no force or torque disturbance.
    pub fn ideal() -> Self {
        Self {
            delta_f0: 0.0,
            k_d: 0.0,
            torque_bias: Vec3::zeros(),
            torque_noise_amplitude: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        require_positive("battery.nominal_voltage", self.nominal_voltage)?;
        require_positive("battery.tau_b", self.tau_b)?;
        require_positive("battery.mu", self.mu)?;
        require_positive("battery.torque_bound", self.torque_bound)?;
        require_positive("battery.torque_noise_cutoff_hz", self.torque_noise_cutoff_hz)?;
        if !(self.delta_f0.is_finite() && self.delta_f0 >= 0.0) {
            return Err(ConfigError::new("battery.delta_f0", "must be finite and non-negative"));
        }
        if !(self.k_d.is_finite() && self.k_d >= 0.0) {
            return Err(ConfigError::new("battery.k_d", "must be finite and non-negative"));
        }
        self.check_rate_bound()?;
        if !(self.torque_noise_amplitude.is_finite() && self.torque_noise_amplitude >= 0.0) {
            return Err(ConfigError::new(
                "battery.torque_noise_amplitude",
                "must be finite and non-negative",
            ));
        }
        let peak = self.torque_peak();
        if !(peak < self.torque_bound) {
            return Err(ConfigError::new(
                "battery.torque_bias",
                format!(
                    "worst-case torque disturbance {peak:.4} N·m must stay below the bound {} N·m",
                    self.torque_bound
                ),
            ));
        }
        Ok(())
    }

    /// The slope bound `|dΔf/dt| ≤ μ`: holds iff `k_d/τ_b ≤ μ`.
    pub fn check_rate_bound(&self) -> Result<(), ConfigError> {
        let peak = self.peak_rate();
        if peak > self.mu {
            Err(ConfigError::new(
                "battery.mu",
                format!("sag slope k_d/tau_b = {peak:.4} N/s exceeds the bound mu = {} N/s", self.mu),
            ))
        } else {
            Ok(())
        }
    }

    pub fn peak_rate(&self) -> f64 {
        self.k_d / self.tau_b
    }

    /// Largest `‖τ_dis‖` the torque model can produce.
    pub fn torque_peak(&self) -> f64 {
        self.torque_bias.norm() + 3f64.sqrt() * self.torque_noise_amplitude
    }

    /// Thrust lost to voltage sag at time `t`, N.
    pub fn delta_f(&self, t: f64) -> f64 {
        self.delta_f0 + self.k_d * (1.0 - (-t / self.tau_b).exp())
    }

    pub fn delta_f_rate(&self, t: f64) -> f64 {
        self.k_d / self.tau_b * (-t / self.tau_b).exp()
    }

    /// Earth-frame force disturbance `Δf(t)·Θ(η)`.
    pub fn disturbance_force(&self, t: f64, eta: &EulerAngles) -> Vec3 {
        theta_vector(eta) * self.delta_f(t)
    }

    /// Torque disturbance sampler advancing in steps of `dt`.
    pub fn torque_source(&self, seed: u64, dt: f64) -> TorqueDisturbance {
        let alpha = 1.0 - (-2.0 * std::f64::consts::PI * self.torque_noise_cutoff_hz * dt).exp();
        TorqueDisturbance {
            bias: self.torque_bias,
            amplitude: self.torque_noise_amplitude,
            alpha,
            filtered: Vec3::zeros(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

/// Seeded, piecewise-constant torque disturbance.
#[derive(Debug, Clone)]
pub struct TorqueDisturbance {
    bias: Vec3,
    amplitude: f64,
    alpha: f64,
    filtered: Vec3,
    rng: ChaCha8Rng,
}

impl TorqueDisturbance {
    /// Torque held over the next step.
    pub fn next_torque(&mut self) -> Vec3 {
        if self.amplitude == 0.0 {
            return self.bias;
        }
        let w = Vec3::new(
            self.rng.random_range(-1.0..=1.0),
            self.rng.random_range(-1.0..=1.0),
            self.rng.random_range(-1.0..=1.0),
        );
        // convex combination keeps every component inside [-1, 1]
        self.filtered += (w - self.filtered) * self.alpha;
        self.bias + self.filtered * self.amplitude
    }
}
