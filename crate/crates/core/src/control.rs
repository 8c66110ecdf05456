//! Dual-rate cascade controller.
//!
//! The translational loop turns position and velocity errors into a desired
//! earth-frame force, subtracts the force-disturbance estimate and extracts
//! the attitude and thrust that realize it. The rotational loop tracks that
//! attitude through a rate loop and cancels the torque-disturbance estimate.
//! Translational outputs are latched (zero-order hold) between its ticks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{require_positive, require_positive_diag, ConfigError};
use crate::geom::{
    euler_rate_matrix_inverse, theta_vector, EulerAngles, GeomError, Mat3, Vec3,
};
use crate::observers::{IntegratorState, NdoState, ObserverError, SmoState, VdoState};
use crate::vehicle::{ControlInput, VehicleParams, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ControlError {
    #[error("desired force {norm:.4} N is below the minimum thrust {min:.4} N")]
    DegenerateThrust { norm: f64, min: f64 },
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Observer(#[from] ObserverError),
}

/// Which force-disturbance compensation runs in the translational loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Baseline,
    Integrator,
    Vdo,
    Ndo,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Baseline, Variant::Integrator, Variant::Vdo, Variant::Ndo];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Integrator => "integrator",
            Variant::Vdo => "vdo",
            Variant::Ndo => "ndo",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Variant::Baseline),
            "integrator" | "baseline+integrator" => Ok(Variant::Integrator),
            "vdo" | "baseline+vdo" => Ok(Variant::Vdo),
            "ndo" | "baseline+ndo" => Ok(Variant::Ndo),
            other => Err(format!("unknown variant '{other}' (expected baseline, integrator, vdo or ndo)")),
        }
    }
}

/// Source of the torque-disturbance estimate in the rotational loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TorqueEstimator {
    None,
    Smo,
    /// Uses the true disturbance supplied by the simulator.
    Oracle,
}

/// How the desired body rate is formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DesiredRate {
    Zero,
    /// Filtered finite difference of the desired Euler angles.
    Differentiated { cutoff_hz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationalGains {
    pub kp: Mat3,
    pub kv: Mat3,
}

impl TranslationalGains {
    pub fn new(kp: [f64; 3], kv: [f64; 3]) -> Result<Self, ConfigError> {
        require_positive_diag("control.kp", &kp)?;
        require_positive_diag("control.kv", &kv)?;
        Ok(Self { kp: Mat3::from_diagonal(&kp.into()), kv: Mat3::from_diagonal(&kv.into()) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationalGains {
    pub k_eta: Mat3,
    pub k_pp: Mat3,
    pub k_ii: Mat3,
}

impl RotationalGains {
    pub fn new(k_eta: [f64; 3], k_pp: [f64; 3], k_ii: [f64; 3]) -> Result<Self, ConfigError> {
        require_positive_diag("control.k_eta", &k_eta)?;
        require_positive_diag("control.k_pp", &k_pp)?;
        require_positive_diag("control.k_ii", &k_ii)?;
        Ok(Self {
            k_eta: Mat3::from_diagonal(&k_eta.into()),
            k_pp: Mat3::from_diagonal(&k_pp.into()),
            k_ii: Mat3::from_diagonal(&k_ii.into()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Setpoint {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub yaw: f64,
}

/// Thrust magnitude and tilt limits applied when extracting attitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrustLimits {
    pub min: f64,
    pub max: f64,
    /// Largest angle between body z and earth z, rad.
    pub tilt_max: f64,
}

impl ThrustLimits {
    /// Thrust in `[0.1 m g, 2.5 m g]`, tilt up to 45°.
    pub fn for_vehicle(params: &VehicleParams) -> Self {
        let w = params.hover_thrust();
        Self { min: 0.1 * w, max: 2.5 * w, tilt_max: std::f64::consts::FRAC_PI_4 }
    }
}

/// Desired earth-frame force `m (K_p e_p + K_v e_v − g e_z + p̈_d) − ΔF̂`.
pub fn translational_control(
    sp: &Setpoint,
    s: &VehicleState,
    force_estimate: &Vec3,
    gains: &TranslationalGains,
    mass: f64,
    gravity: f64,
) -> Vec3 {
    let e_p = sp.position - s.position;
    let e_v = sp.velocity - s.velocity;
    let a_d = gains.kp * e_p + gains.kv * e_v - Vec3::new(0.0, 0.0, gravity) + sp.acceleration;
    a_d * mass - force_estimate
}

/// Attitude and thrust realizing `force_d` with yaw `yaw_d`.
///
/// Body z must point along `−F_d`. The tilt is clamped to `limits.tilt_max`
/// and the thrust is the projection of `F_d` on the (clamped) thrust axis,
/// clamped to `[limits.min, limits.max]`.
pub fn attitude_from_force(
    force_d: &Vec3,
    yaw_d: f64,
    limits: &ThrustLimits,
) -> Result<(EulerAngles, f64), ControlError> {
    let norm = force_d.norm();
    if !(norm >= limits.min) {
        return Err(ControlError::DegenerateThrust { norm, min: limits.min });
    }
    let mut b_z = -force_d / norm;
    let horizontal = (b_z.x * b_z.x + b_z.y * b_z.y).sqrt();
    let tilt = horizontal.atan2(b_z.z);
    if tilt > limits.tilt_max {
        let (s, c) = limits.tilt_max.sin_cos();
        b_z = if horizontal > 0.0 {
            Vec3::new(b_z.x / horizontal * s, b_z.y / horizontal * s, c)
        } else {
            Vec3::new(0.0, 0.0, 1.0)
        };
    }
    // undo yaw: Rz(−ψ) b_z = (sθ cφ, −sφ, cθ cφ)
    let (sy, cy) = yaw_d.sin_cos();
    let bx = cy * b_z.x + sy * b_z.y;
    let by = -sy * b_z.x + cy * b_z.y;
    let roll = (-by).clamp(-1.0, 1.0).asin();
    let pitch = bx.atan2(b_z.z);
    let thrust = (-force_d.dot(&b_z)).clamp(limits.min, limits.max);
    Ok((EulerAngles::new(roll, pitch, yaw_d).wrapped(), thrust))
}

/// Signals produced by one rotational update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RotationalOutput {
    /// `J α_d + ω× J ω`, N·m.
    pub torque: Vec3,
    /// `−τ̂_dis`, N·m.
    pub torque_comp: Vec3,
    pub e_eta: Vec3,
    pub e_q: Vec3,
    /// Updated `∫ e_q dt`.
    pub integral: Vec3,
}

impl RotationalOutput {
    /// Net commanded torque `torque + torque_comp`.
    pub fn total(&self) -> Vec3 {
        self.torque + self.torque_comp
    }
}

/// Rotational baseline law with disturbance cancellation.
///
/// `q_d = ω_d + C⁻¹ K_η e_η`, `e_q = q_d − ω`,
/// `α_d = K_pp e_q + K_ii ∫e_q`, `τ_d = J α_d − τ̂ + ω× J ω`.
/// The integral advances only when `integrate` is set.
#[allow(clippy::too_many_arguments)]
pub fn rotational_control(
    eta_d: &EulerAngles,
    omega_d: &Vec3,
    s: &VehicleState,
    torque_hat: &Vec3,
    gains: &RotationalGains,
    inertia: &Mat3,
    dt: f64,
    integral: &Vec3,
    integrate: bool,
) -> Result<RotationalOutput, ControlError> {
    let eta = s.euler();
    let e_eta = eta_d.error_to(&eta);
    let c_inv = euler_rate_matrix_inverse(&eta)?;
    let q_d = omega_d + c_inv * (gains.k_eta * e_eta);
    let e_q = q_d - s.omega;
    let integral = if integrate { integral + e_q * dt } else { *integral };
    let alpha_d = gains.k_pp * e_q + gains.k_ii * integral;
    let gyro = s.omega.cross(&(inertia * s.omega));
    Ok(RotationalOutput { torque: inertia * alpha_d + gyro, torque_comp: -torque_hat, e_eta, e_q, integral })
}

/// Tunables for [`Cascade`].
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeConfig {
    pub variant: Variant,
    pub torque_estimator: TorqueEstimator,
    pub desired_rate: DesiredRate,
    pub translational: TranslationalGains,
    pub rotational: RotationalGains,
    pub limits: ThrustLimits,
    pub vdo_gain: Vec3,
    pub vdo_initial_estimate: f64,
    pub ndo_gain: Vec3,
    pub integrator_gain: Vec3,
    pub integrator_clamp: f64,
    pub smo_gains: [f64; 3],
    /// SMO settling time; also the start of the rate-error integral, s.
    pub smo_t0: f64,
    /// Translational loop period, s.
    pub translational_dt: f64,
    /// Rotational loop period, s.
    pub rotational_dt: f64,
}

impl CascadeConfig {
    pub fn defaults(variant: Variant, params: &VehicleParams) -> Self {
        Self {
            variant,
            torque_estimator: TorqueEstimator::Smo,
            desired_rate: DesiredRate::Zero,
            translational: TranslationalGains::new([4.0; 3], [4.0; 3]).unwrap(),
            rotational: RotationalGains::new([8.0, 8.0, 4.0], [25.0, 25.0, 15.0], [2.0, 2.0, 1.0]).unwrap(),
            limits: ThrustLimits::for_vehicle(params),
            vdo_gain: Vec3::new(0.0, 0.0, 2.0),
            vdo_initial_estimate: 0.0,
            ndo_gain: Vec3::repeat(2.0),
            integrator_gain: Vec3::repeat(2.0),
            integrator_clamp: 10.0,
            smo_gains: [6.0, 4.0, 2.0],
            smo_t0: 1.0,
            translational_dt: 0.01,
            rotational_dt: 0.002,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        require_positive("loops.translational_dt", self.translational_dt)?;
        require_positive("loops.rotational_dt", self.rotational_dt)?;
        require_positive_diag("observers.ndo_gain", &self.ndo_gain.into())?;
        require_positive_diag("observers.integrator_gain", &self.integrator_gain.into())?;
        require_positive("observers.integrator_clamp", self.integrator_clamp)?;
        require_positive_diag("observers.smo_gains", &self.smo_gains)?;
        require_positive("observers.smo_t0", self.smo_t0)?;
        require_positive("control.tilt_max", self.limits.tilt_max)?;
        require_positive("control.thrust_min", self.limits.min)?;
        if !(self.limits.max > self.limits.min) {
            return Err(ConfigError::new("control.thrust_max", "must exceed the minimum thrust"));
        }
        if self.limits.tilt_max >= std::f64::consts::FRAC_PI_2 {
            return Err(ConfigError::new("control.tilt_max", "must be below 90°"));
        }
        if let DesiredRate::Differentiated { cutoff_hz } = self.desired_rate {
            require_positive("control.desired_rate.cutoff_hz", cutoff_hz)?;
        }
        if !self.vdo_gain.iter().all(|g| g.is_finite()) {
            return Err(ConfigError::new("observers.vdo_gain", "must be finite"));
        }
        Ok(())
    }
}

/// Outputs of the most recent translational tick, held until the next one.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TranslationalCommand {
    pub setpoint: Setpoint,
    pub force_d: Vec3,
    pub thrust: f64,
    pub eta_d: EulerAngles,
    pub omega_d: Vec3,
    pub e_p: Vec3,
    pub e_v: Vec3,
    /// Force-disturbance estimate subtracted from the desired force, N.
    pub force_hat: Vec3,
    /// Scalar shortfall estimate (VDO only), N.
    pub delta_f_hat: f64,
    /// Desired force was below the minimum thrust; level attitude was commanded.
    pub degenerate: bool,
}

/// The cascade state machine, advanced by the scheduler.
#[derive(Debug, Clone)]
pub struct Cascade {
    cfg: CascadeConfig,
    mass: f64,
    gravity: f64,
    inertia: Mat3,
    inertia_inv: Mat3,
    pub vdo: Option<VdoState>,
    pub ndo: Option<NdoState>,
    pub integrator: Option<IntegratorState>,
    pub smo: Option<SmoState>,
    latched: TranslationalCommand,
    rate_integral: Vec3,
    prev_eta_d: Option<EulerAngles>,
    eta_d_rate: Vec3,
    last_rotational: RotationalOutput,
    torque_hat: Vec3,
    translational_ticks: u64,
    rotational_ticks: u64,
}

impl Cascade {
    pub fn new(cfg: CascadeConfig, params: &VehicleParams, initial: &VehicleState) -> Self {
        let mass = params.mass;
        let vdo = (cfg.variant == Variant::Vdo)
            .then(|| VdoState::new(cfg.vdo_gain, mass, &initial.velocity, cfg.vdo_initial_estimate));
        let ndo = (cfg.variant == Variant::Ndo)
            .then(|| NdoState::new(cfg.ndo_gain, mass, &initial.velocity, Vec3::zeros()));
        let integrator = (cfg.variant == Variant::Integrator)
            .then(|| IntegratorState::new(cfg.integrator_gain, cfg.integrator_clamp));
        let [l1, l2, l3] = cfg.smo_gains;
        let smo = (cfg.torque_estimator == TorqueEstimator::Smo)
            .then(|| SmoState::new(&initial.omega, l1, l2, l3, cfg.smo_t0));
        Self {
            mass,
            gravity: params.gravity,
            inertia: params.inertia,
            inertia_inv: params.inertia_inv,
            vdo,
            ndo,
            integrator,
            smo,
            latched: TranslationalCommand::default(),
            rate_integral: Vec3::zeros(),
            prev_eta_d: None,
            eta_d_rate: Vec3::zeros(),
            last_rotational: RotationalOutput::default(),
            torque_hat: Vec3::zeros(),
            translational_ticks: 0,
            rotational_ticks: 0,
            cfg,
        }
    }

    pub fn config(&self) -> &CascadeConfig {
        &self.cfg
    }

    pub fn latched(&self) -> &TranslationalCommand {
        &self.latched
    }

    pub fn last_rotational(&self) -> &RotationalOutput {
        &self.last_rotational
    }

    /// Torque-disturbance estimate used by the last rotational tick.
    pub fn torque_hat(&self) -> Vec3 {
        self.torque_hat
    }

    pub fn rate_integral(&self) -> Vec3 {
        self.rate_integral
    }

    pub fn tick_counts(&self) -> (u64, u64) {
        (self.translational_ticks, self.rotational_ticks)
    }

    fn gravity_force(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.mass * self.gravity)
    }

    /// 100 Hz update: force estimate, desired force, attitude extraction, then
    /// observer integration over the coming interval.
    pub fn translational_tick(
        &mut self,
        sp: &Setpoint,
        s: &VehicleState,
    ) -> Result<&TranslationalCommand, ControlError> {
        let dt = self.cfg.translational_dt;
        let eta = s.euler();
        let theta = theta_vector(&eta);
        let e_p = sp.position - s.position;
        let e_v = sp.velocity - s.velocity;

        let mut delta_f_hat = 0.0;
        let force_hat = match self.cfg.variant {
            Variant::Baseline => Vec3::zeros(),
            Variant::Vdo => {
                let vdo = self.vdo.as_mut().expect("vdo variant carries a VDO");
                vdo.delta_f_hat = vdo.estimate(&s.velocity);
                delta_f_hat = vdo.delta_f_hat;
                theta * delta_f_hat
            }
            Variant::Ndo => {
                let ndo = self.ndo.as_mut().expect("ndo variant carries an NDO");
                ndo.force_hat = ndo.estimate(&s.velocity);
                ndo.force_hat
            }
            // integral action enters as a negative disturbance estimate
            Variant::Integrator => -self.integrator.as_ref().expect("integrator variant").force(),
        };

        let force_d = translational_control(sp, s, &force_hat, &self.cfg.translational, self.mass, self.gravity);
        let (eta_d, thrust, degenerate) = match attitude_from_force(&force_d, sp.yaw, &self.cfg.limits) {
            Ok((eta_d, thrust)) => (eta_d, thrust, false),
            Err(ControlError::DegenerateThrust { .. }) => {
                (EulerAngles::new(0.0, 0.0, sp.yaw), self.cfg.limits.min, true)
            }
            Err(e) => return Err(e),
        };

        let thrust_force = -theta * thrust;
        let gravity_force = self.gravity_force();
        if let Some(vdo) = self.vdo.as_mut() {
            vdo.update(&s.velocity, &thrust_force, &gravity_force, &eta, dt)?;
        }
        if let Some(ndo) = self.ndo.as_mut() {
            ndo.update(&s.velocity, &thrust_force, &gravity_force, dt)?;
        }
        if let Some(integrator) = self.integrator.as_mut() {
            integrator.update(&e_p, dt)?;
        }

        let omega_d = match self.cfg.desired_rate {
            DesiredRate::Zero => Vec3::zeros(),
            DesiredRate::Differentiated { cutoff_hz } => {
                if let Some(prev) = self.prev_eta_d {
                    let raw = eta_d.error_to(&prev) / dt;
                    let alpha = 1.0 - (-2.0 * std::f64::consts::PI * cutoff_hz * dt).exp();
                    self.eta_d_rate += (raw - self.eta_d_rate) * alpha;
                }
                euler_rate_matrix_inverse(&eta_d)? * self.eta_d_rate
            }
        };
        self.prev_eta_d = Some(eta_d);

        self.latched = TranslationalCommand {
            setpoint: *sp,
            force_d,
            thrust,
            eta_d,
            omega_d,
            e_p,
            e_v,
            force_hat,
            delta_f_hat,
            degenerate,
        };
        self.translational_ticks += 1;
        Ok(&self.latched)
    }

    /// 500 Hz update against the latched attitude command. `oracle_torque` is
    /// the true disturbance, used only by [`TorqueEstimator::Oracle`].
    pub fn rotational_tick(
        &mut self,
        t: f64,
        s: &VehicleState,
        oracle_torque: Option<Vec3>,
    ) -> Result<ControlInput, ControlError> {
        let torque_hat = match self.cfg.torque_estimator {
            TorqueEstimator::None => Vec3::zeros(),
            TorqueEstimator::Smo => self.smo.as_ref().expect("smo enabled").torque_estimate(&self.inertia),
            TorqueEstimator::Oracle => oracle_torque.unwrap_or_else(Vec3::zeros),
        };
        let out = rotational_control(
            &self.latched.eta_d,
            &self.latched.omega_d,
            s,
            &torque_hat,
            &self.cfg.rotational,
            &self.inertia,
            self.cfg.rotational_dt,
            &self.rate_integral,
            t >= self.cfg.smo_t0,
        )?;
        self.rate_integral = out.integral;
        self.last_rotational = out;
        self.torque_hat = torque_hat;
        self.rotational_ticks += 1;
        Ok(ControlInput { thrust: self.latched.thrust, torque: out.torque, torque_comp: out.torque_comp })
    }

    /// Advances the torque observer over the interval `applied` is held for.
    pub fn observe_torque(&mut self, s: &VehicleState, applied: &ControlInput) -> Result<(), ControlError> {
        if let Some(smo) = self.smo.as_mut() {
            smo.update(&s.omega, &self.inertia, &self.inertia_inv, &applied.total_torque(), self.cfg.rotational_dt)?;
        }
        Ok(())
    }
}
