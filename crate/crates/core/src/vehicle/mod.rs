//! Ground-truth plant: coaxial octocopter rigid-body dynamics.

pub mod battery;
pub mod mixer;

pub use battery::{BatteryModel, TorqueDisturbance};
pub use mixer::{Allocation, Mixer, RotorThrusts, ROTOR_COUNT};

use crate::error::{require_positive, require_positive_diag, ConfigError};
use crate::geom::{euler_from_rotation, rotation_from_euler, skew, EulerAngles, Mat3, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    pub mass: f64,
    pub inertia: Mat3,
    pub inertia_inv: Mat3,
    pub gravity: f64,
    pub arm_length: f64,
    pub mixer: Mixer,
    /// Fraction of commanded thrust actually produced (coaxial interference). 1.0 disables it.
    pub thrust_efficiency: f64,
}

impl VehicleParams {
    pub fn new(
        mass: f64,
        inertia_diag: [f64; 3],
        gravity: f64,
        arm_length: f64,
        yaw_moment_coeff: f64,
        rotor_max_thrust: f64,
    ) -> Result<Self, ConfigError> {
        require_positive("vehicle.mass", mass)?;
        require_positive("vehicle.gravity", gravity)?;
        require_positive_diag("vehicle.inertia", &inertia_diag)?;
        let inertia = Mat3::from_diagonal(&Vec3::from(inertia_diag));
        let inertia_inv = Mat3::from_diagonal(&Vec3::from(inertia_diag.map(|j| 1.0 / j)));
        let mixer = mixer::Mixer::coaxial_x8(arm_length, yaw_moment_coeff, rotor_max_thrust)?;
        Ok(Self { mass, inertia, inertia_inv, gravity, arm_length, mixer, thrust_efficiency: 1.0 })
    }

    pub fn with_thrust_efficiency(mut self, efficiency: f64) -> Result<Self, ConfigError> {
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(ConfigError::new("vehicle.coaxial_efficiency", "must lie in (0, 1]"));
        }
        self.thrust_efficiency = efficiency;
        Ok(self)
    }

    /// Gravity force `m g e_z` in NED.
    pub fn gravity_force(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.mass * self.gravity)
    }

    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.gravity
    }
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self::new(2.0, [0.02, 0.02, 0.035], 9.81, 0.25, 0.016, 8.0).expect("default vehicle is valid")
    }
}

/// Truth state: earth-frame position and velocity, body-to-earth rotation, body rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub rotation: Mat3,
    pub omega: Vec3,
}

impl VehicleState {
    pub fn at_rest(position: Vec3) -> Self {
        Self { position, velocity: Vec3::zeros(), rotation: Mat3::identity(), omega: Vec3::zeros() }
    }

    pub fn with_attitude(mut self, eta: &EulerAngles) -> Self {
        self.rotation = rotation_from_euler(eta);
        self
    }

    pub fn euler(&self) -> EulerAngles {
        euler_from_rotation(&self.rotation)
    }

    /// Body z axis expressed in the earth frame (`R e₃`).
    pub fn body_z(&self) -> Vec3 {
        self.rotation.column(2).into()
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|x| x.is_finite())
            && self.velocity.iter().all(|x| x.is_finite())
            && self.rotation.iter().all(|x| x.is_finite())
            && self.omega.iter().all(|x| x.is_finite())
    }
}

/// Rotor wrench handed to the plant.
///
/// The body torque is carried in two parts: `torque` (feedback and
/// gyroscopic terms) and `torque_comp` (disturbance compensation). The plant
/// adds `torque_comp` to the true disturbance before adding `torque`, so a
/// compensation equal to the negated disturbance cancels it exactly in
/// floating point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    pub thrust: f64,
    pub torque: Vec3,
    pub torque_comp: Vec3,
}

impl ControlInput {
    pub fn new(thrust: f64, torque: Vec3) -> Self {
        Self { thrust, torque, torque_comp: Vec3::zeros() }
    }

    pub fn total_torque(&self) -> Vec3 {
        self.torque + self.torque_comp
    }
}

/// Disturbances acting on the plant at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Disturbance {
    /// Thrust shortfall along the body z axis, N.
    pub delta_f: f64,
    /// Body torque, N·m.
    pub torque: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub position: Vec3,
    pub velocity: Vec3,
    pub rotation: Mat3,
    pub omega: Vec3,
}

/// `ṗ = v`, `Ṙ = R ω×`, `m a = −f R e₃ + m g e₃ + Δf R e₃`,
/// `J ω̇ = −ω× J ω + τ + τ_dis`.
pub fn dynamics_deriv(
    params: &VehicleParams,
    s: &VehicleState,
    u: &ControlInput,
    dist: &Disturbance,
) -> StateDerivative {
    let b_z = s.body_z();
    let thrust = u.thrust * params.thrust_efficiency;
    let force = -b_z * thrust + params.gravity_force() + b_z * dist.delta_f;
    let j_omega = params.inertia * s.omega;
    let net_torque = (dist.torque + u.torque_comp) + u.torque;
    let omega_dot = params.inertia_inv * (net_torque - s.omega.cross(&j_omega));
    StateDerivative {
        position: s.velocity,
        velocity: force / params.mass,
        rotation: s.rotation * skew(&s.omega),
        omega: omega_dot,
    }
}
