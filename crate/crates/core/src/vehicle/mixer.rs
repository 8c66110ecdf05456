//! Coaxial X8 control allocation.
//!
//! Four arms at 45°, 135°, 225° and 315° from the nose each carry an upper and
//! a lower rotor spinning in opposite directions. Rotor `2k` is the upper
//! rotor of arm `k`, rotor `2k + 1` the lower one. Rows of the effectiveness
//! matrix are `[f, τx, τy, τz]` in the FRD body frame.

use nalgebra::{SMatrix, SVector};

use crate::error::{require_positive, ConfigError};
use crate::geom::Vec3;

pub const ROTOR_COUNT: usize = 8;

pub type Effectiveness = SMatrix<f64, 4, ROTOR_COUNT>;
pub type RotorThrusts = SVector<f64, ROTOR_COUNT>;

#[derive(Debug, Clone, PartialEq)]
pub struct Mixer {
    effectiveness: Effectiveness,
    pinv: SMatrix<f64, ROTOR_COUNT, 4>,
    max_thrust: f64,
}

/// Result of mapping a wrench request onto the rotors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    pub rotor_thrusts: RotorThrusts,
    /// Total thrust actually produced by the clipped rotor set.
    pub thrust: f64,
    pub torque: Vec3,
    /// Set when at least one rotor had to be clipped.
    pub saturated: bool,
}

impl Mixer {
    /// `arm_length` in m, `yaw_moment_coeff` in N·m per N of thrust,
    /// `max_thrust` per rotor in N.
    pub fn coaxial_x8(arm_length: f64, yaw_moment_coeff: f64, max_thrust: f64) -> Result<Self, ConfigError> {
        require_positive("vehicle.arm_length", arm_length)?;
        require_positive("vehicle.yaw_moment_coeff", yaw_moment_coeff)?;
        require_positive("vehicle.rotor_max_thrust", max_thrust)?;
        let mut b = Effectiveness::zeros();
        for arm in 0..4 {
            let angle = std::f64::consts::FRAC_PI_4 + arm as f64 * std::f64::consts::FRAC_PI_2;
            let (x, y) = (arm_length * angle.cos(), arm_length * angle.sin());
            let upper_spin = if arm % 2 == 0 { 1.0 } else { -1.0 };
            for (slot, spin) in [(0, upper_spin), (1, -upper_spin)] {
                let i = 2 * arm + slot;
                // thrust acts along −z_b at (x, y, 0): r × F = (−y T, x T, 0)
                b[(0, i)] = 1.0;
                b[(1, i)] = -y;
                b[(2, i)] = x;
                b[(3, i)] = spin * yaw_moment_coeff;
            }
        }
        let gram = b * b.transpose();
        let gram_inv = gram
            .try_inverse()
            .ok_or_else(|| ConfigError::new("vehicle", "allocation matrix is rank deficient"))?;
        let pinv = b.transpose() * gram_inv;
        Ok(Self { effectiveness: b, pinv, max_thrust })
    }

    pub fn effectiveness(&self) -> &Effectiveness {
        &self.effectiveness
    }

    pub fn max_thrust(&self) -> f64 {
        self.max_thrust
    }

    /// Least-squares allocation with per-rotor clipping to `[0, max_thrust]`.
    pub fn allocate(&self, thrust: f64, torque: &Vec3) -> Allocation {
        let wrench = nalgebra::Vector4::new(thrust, torque.x, torque.y, torque.z);
        let raw = self.pinv * wrench;
        let mut saturated = false;
        let rotor_thrusts = raw.map(|t| {
            let c = t.clamp(0.0, self.max_thrust);
            if c != t {
                saturated = true;
            }
            c
        });
        let achieved = self.effectiveness * rotor_thrusts;
        Allocation {
            rotor_thrusts,
            thrust: achieved[0],
            torque: Vec3::new(achieved[1], achieved[2], achieved[3]),
            saturated,
        }
    }
}
