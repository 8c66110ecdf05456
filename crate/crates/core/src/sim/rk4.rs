//! Classical fourth-order Runge–Kutta step for the vehicle state.

use super::SimError;
use crate::geom::orthonormalize;
use crate::vehicle::{StateDerivative, VehicleState};

fn advance(s: &VehicleState, d: &StateDerivative, h: f64) -> VehicleState {
    VehicleState {
        position: s.position + d.position * h,
        velocity: s.velocity + d.velocity * h,
        rotation: s.rotation + d.rotation * h,
        omega: s.omega + d.omega * h,
    }
}

/// One RK4 step of `deriv(t, state)`, inputs held constant over the step.
/// The rotation is projected back onto SO(3) afterwards.
pub fn rk4_step<F>(s: &VehicleState, t: f64, dt: f64, deriv: F) -> Result<VehicleState, SimError>
where
    F: Fn(f64, &VehicleState) -> StateDerivative,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::InvalidStep { dt });
    }
    let half = 0.5 * dt;
    let k1 = deriv(t, s);
    let k2 = deriv(t + half, &advance(s, &k1, half));
    let k3 = deriv(t + half, &advance(s, &k2, half));
    let k4 = deriv(t + dt, &advance(s, &k3, dt));
    let sixth = dt / 6.0;
    let mut next = VehicleState {
        position: s.position + (k1.position + (k2.position + k3.position) * 2.0 + k4.position) * sixth,
        velocity: s.velocity + (k1.velocity + (k2.velocity + k3.velocity) * 2.0 + k4.velocity) * sixth,
        rotation: s.rotation + (k1.rotation + (k2.rotation + k3.rotation) * 2.0 + k4.rotation) * sixth,
        omega: s.omega + (k1.omega + (k2.omega + k3.omega) * 2.0 + k4.omega) * sixth,
    };
    if !next.is_finite() {
        return Err(SimError::NonFinite { t: t + dt });
    }
    next.rotation = orthonormalize(&next.rotation);
    Ok(next)
}
