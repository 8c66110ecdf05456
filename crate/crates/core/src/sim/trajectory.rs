//! Reference trajectories with analytic derivatives.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::control::Setpoint;
use crate::error::{require_positive, ConfigError};
use crate::geom::Vec3;

/// Tilted circle `[r sin ωt, r cos ωt, −h − a sin ωt]` with `ω = 2π/T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircleTrajectory {
    pub radius: f64,
    pub period: f64,
    pub altitude: f64,
    pub z_amplitude: f64,
}

impl Default for CircleTrajectory {
    fn default() -> Self {
        Self { radius: 2.0, period: 30.0, altitude: 2.0, z_amplitude: 0.5 }
    }
}

impl CircleTrajectory {
    pub fn setpoint(&self, t: f64) -> Setpoint {
        let w = 2.0 * PI / self.period;
        let (s, c) = (w * t).sin_cos();
        let (r, a) = (self.radius, self.z_amplitude);
        Setpoint {
            position: Vec3::new(r * s, r * c, -self.altitude - a * s),
            velocity: Vec3::new(r * w * c, -r * w * s, -a * w * c),
            acceleration: Vec3::new(-r * w * w * s, -r * w * w * c, a * w * w * s),
            yaw: 0.0,
        }
    }
}

/// The flight-test reference: radius 2 m, height 2 m, vertical amplitude 0.5 m.
pub fn reference_trajectory(t: f64, period: f64) -> Setpoint {
    CircleTrajectory { period, ..CircleTrajectory::default() }.setpoint(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Circle,
    /// Hold `(0, 0, −altitude)`.
    Hover,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub kind: TrajectoryKind,
    pub radius: f64,
    pub period: f64,
    pub altitude: f64,
    pub z_amplitude: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        let c = CircleTrajectory::default();
        Self { kind: TrajectoryKind::Circle, radius: c.radius, period: c.period, altitude: c.altitude, z_amplitude: c.z_amplitude }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        require_positive("trajectory.period", self.period)?;
        for (name, v) in [("radius", self.radius), ("altitude", self.altitude), ("z_amplitude", self.z_amplitude)] {
            if !v.is_finite() {
                return Err(ConfigError::new(format!("trajectory.{name}"), "must be finite"));
            }
        }
        Ok(())
    }

    pub fn setpoint(&self, t: f64) -> Setpoint {
        match self.kind {
            TrajectoryKind::Circle => CircleTrajectory {
                radius: self.radius,
                period: self.period,
                altitude: self.altitude,
                z_amplitude: self.z_amplitude,
            }
            .setpoint(t),
            TrajectoryKind::Hover => Setpoint { position: Vec3::new(0.0, 0.0, -self.altitude), ..Setpoint::default() },
        }
    }
}
