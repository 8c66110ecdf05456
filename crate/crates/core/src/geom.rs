//! Frame conventions and rotation machinery.
//!
//! Earth frame is North-East-Down, body frame is Forward-Right-Down, so the
//! body z axis points down and altitude is `-z`. Attitude uses the ZYX
//! (yaw, pitch, roll) Euler sequence: `R = Rz(yaw) * Ry(pitch) * Rx(roll)`
//! maps body vectors into the earth frame. Under that convention the third
//! column of `R` is the unit thrust-loss direction returned by
//! [`theta_vector`].

use nalgebra::{Matrix3, Vector3};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Pitch magnitude beyond which the Euler rate matrix is considered singular.
pub const PITCH_GUARD: f64 = FRAC_PI_2 - 1e-6;

/// Largest tolerated `‖RᵀR − I‖` for a matrix accepted as a rotation.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeomError {
    #[error("gimbal lock: pitch {pitch} rad is within 1e-6 of ±π/2")]
    GimbalLock { pitch: f64 },
    #[error("matrix is not a rotation (‖RᵀR − I‖ = {deviation:e})")]
    NotOrthonormal { deviation: f64 },
}

/// Roll, pitch and yaw in radians (ZYX sequence).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerAngles {
    pub const ZERO: EulerAngles = EulerAngles { roll: 0.0, pitch: 0.0, yaw: 0.0 };

    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn as_vec(&self) -> Vec3 {
        Vec3::new(self.roll, self.pitch, self.yaw)
    }

    pub fn from_vec(v: &Vec3) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    /// Roll and yaw wrapped to (−π, π]; pitch left untouched.
    pub fn wrapped(&self) -> Self {
        Self::new(wrap_angle(self.roll), self.pitch, wrap_angle(self.yaw))
    }

    /// Component-wise `self − other` with roll and yaw differences wrapped.
    pub fn error_to(&self, other: &EulerAngles) -> Vec3 {
        Vec3::new(
            wrap_angle(self.roll - other.roll),
            self.pitch - other.pitch,
            wrap_angle(self.yaw - other.yaw),
        )
    }

    pub fn check_pitch(&self) -> Result<(), GeomError> {
        if self.pitch.abs() >= PITCH_GUARD || !self.pitch.is_finite() {
            Err(GeomError::GimbalLock { pitch: self.pitch })
        } else {
            Ok(())
        }
    }
}

/// Wraps an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Skew-symmetric (cross-product) matrix: `skew(v) * w == v × w`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Body-to-earth rotation for ZYX Euler angles.
pub fn rotation_from_euler(eta: &EulerAngles) -> Mat3 {
    let (sr, cr) = eta.roll.sin_cos();
    let (sp, cp) = eta.pitch.sin_cos();
    let (sy, cy) = eta.yaw.sin_cos();
    Mat3::new(
        cy * cp,
        cy * sp * sr - sy * cr,
        cy * sp * cr + sy * sr,
        sy * cp,
        sy * sp * sr + cy * cr,
        sy * sp * cr - cy * sr,
        -sp,
        cp * sr,
        cp * cr,
    )
}

/// Inverse of [`rotation_from_euler`]. Roll and yaw come back in (−π, π],
/// pitch in [−π/2, π/2].
pub fn euler_from_rotation(r: &Mat3) -> EulerAngles {
    let pitch = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
    let roll = r[(2, 1)].atan2(r[(2, 2)]);
    let yaw = r[(1, 0)].atan2(r[(0, 0)]);
    EulerAngles::new(roll, pitch, yaw).wrapped()
}

/// Matrix `C` with `η̇ = C ω` for body rates `ω` (ZYX kinematics).
pub fn euler_rate_matrix(eta: &EulerAngles) -> Result<Mat3, GeomError> {
    eta.check_pitch()?;
    let (sr, cr) = eta.roll.sin_cos();
    let (sp, cp) = eta.pitch.sin_cos();
    let tp = sp / cp;
    Ok(Mat3::new(
        1.0,
        sr * tp,
        cr * tp,
        0.0,
        cr,
        -sr,
        0.0,
        sr / cp,
        cr / cp,
    ))
}

/// Closed-form inverse of [`euler_rate_matrix`], mapping Euler rates to body rates.
pub fn euler_rate_matrix_inverse(eta: &EulerAngles) -> Result<Mat3, GeomError> {
    eta.check_pitch()?;
    let (sr, cr) = eta.roll.sin_cos();
    let (sp, cp) = eta.pitch.sin_cos();
    Ok(Mat3::new(1.0, 0.0, -sp, 0.0, cr, sr * cp, 0.0, -sr, cr * cp))
}

/// Direction of the thrust-loss force in the earth frame:
/// `[cψ sθ cφ + sψ sφ, sψ sθ cφ − cψ sφ, cθ cφ]`.
pub fn theta_vector(eta: &EulerAngles) -> Vec3 {
    let (sr, cr) = eta.roll.sin_cos();
    let (sp, cp) = eta.pitch.sin_cos();
    let (sy, cy) = eta.yaw.sin_cos();
    Vec3::new(cy * sp * cr + sy * sr, sy * sp * cr - cy * sr, cp * cr)
}

pub fn orthonormal_deviation(r: &Mat3) -> f64 {
    (r.transpose() * r - Mat3::identity()).norm()
}

/// Accepts `r` as a rotation only if it is orthonormal within [`ORTHONORMAL_TOL`]
/// and right-handed.
pub fn checked_rotation(r: Mat3) -> Result<Mat3, GeomError> {
    let deviation = orthonormal_deviation(&r);
    if deviation > ORTHONORMAL_TOL || r.determinant() <= 0.0 || !deviation.is_finite() {
        return Err(GeomError::NotOrthonormal { deviation });
    }
    Ok(r)
}

/// Nearest rotation matrix in the Frobenius sense (polar factor via SVD).
pub fn orthonormalize(r: &Mat3) -> Mat3 {
    let svd = r.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut q = u * v_t;
    if q.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        q = u * v_t;
    }
    q
}
