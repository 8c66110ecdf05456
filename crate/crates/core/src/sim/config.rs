//! Scenario configuration: a versioned TOML schema, static rule checks and
//! conversion into runtime parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::{
    CascadeConfig, DesiredRate, RotationalGains, ThrustLimits, TorqueEstimator, TranslationalGains, Variant,
};
use crate::error::{require_positive, require_positive_diag, ConfigError};
use crate::geom::{theta_vector, EulerAngles, Vec3};
use crate::vehicle::{BatteryModel, VehicleParams, VehicleState};

use super::trajectory::TrajectoryConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub trajectory: TrajectoryConfig,
    #[serde(default)]
    pub vehicle: VehicleSection,
    #[serde(default)]
    pub battery: BatterySection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub observers: ObserverSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    /// Physics step, s.
    pub dt_physics: f64,
    /// Simulated time, s.
    pub duration: f64,
    pub seed: u64,
    /// Keep one record every `decimation` physics steps.
    pub decimation: u64,
    pub variant: Variant,
    pub torque_estimator: TorqueEstimator,
    /// Position error that aborts the run, m.
    pub divergence_limit: f64,
    pub translational_rate_hz: f64,
    pub rotational_rate_hz: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            dt_physics: 1e-3,
            duration: 280.0,
            seed: 7,
            decimation: 10,
            variant: Variant::Vdo,
            torque_estimator: TorqueEstimator::Smo,
            divergence_limit: 100.0,
            translational_rate_hz: 100.0,
            rotational_rate_hz: 500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleSection {
    pub mass: f64,
    pub gravity: f64,
    pub inertia: [f64; 3],
    pub arm_length: f64,
    pub yaw_moment_coeff: f64,
    pub rotor_max_thrust: f64,
    pub coaxial_loss: CoaxialLoss,
    pub motor_lag: MotorLag,
}

impl Default for VehicleSection {
    fn default() -> Self {
        Self {
            mass: 2.0,
            gravity: 9.81,
            inertia: [0.02, 0.02, 0.035],
            arm_length: 0.25,
            yaw_moment_coeff: 0.016,
            rotor_max_thrust: 8.0,
            coaxial_loss: CoaxialLoss::default(),
            motor_lag: MotorLag::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoaxialLoss {
    pub enabled: bool,
    /// Fraction of commanded thrust produced.
    pub efficiency: f64,
}

impl Default for CoaxialLoss {
    fn default() -> Self {
        Self { enabled: false, efficiency: 0.85 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotorLag {
    pub enabled: bool,
    /// First-order time constant of the produced wrench, s.
    pub time_constant: f64,
}

impl Default for MotorLag {
    fn default() -> Self {
        Self { enabled: false, time_constant: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatterySection {
    /// When false the battery is ideal: no thrust loss, no torque disturbance.
    pub enabled: bool,
    pub nominal_voltage: f64,
    pub delta_f0: f64,
    pub k_d: f64,
    pub tau_b: f64,
    pub mu: f64,
    pub torque_bias: [f64; 3],
    pub torque_noise_amplitude: f64,
    pub torque_noise_cutoff_hz: f64,
    pub torque_bound: f64,
}

impl Default for BatterySection {
    fn default() -> Self {
        let b = BatteryModel::default();
        Self {
            enabled: true,
            nominal_voltage: b.nominal_voltage,
            delta_f0: b.delta_f0,
            k_d: b.k_d,
            tau_b: b.tau_b,
            mu: b.mu,
            torque_bias: b.torque_bias.into(),
            torque_noise_amplitude: b.torque_noise_amplitude,
            torque_noise_cutoff_hz: b.torque_noise_cutoff_hz,
            torque_bound: b.torque_bound,
        }
    }
}

impl BatterySection {
    pub fn model(&self) -> BatteryModel {
        let m = BatteryModel {
            nominal_voltage: self.nominal_voltage,
            delta_f0: self.delta_f0,
            k_d: self.k_d,
            tau_b: self.tau_b,
            mu: self.mu,
            torque_bias: self.torque_bias.into(),
            torque_noise_amplitude: self.torque_noise_amplitude,
            torque_noise_cutoff_hz: self.torque_noise_cutoff_hz,
            torque_bound: self.torque_bound,
        };
        if self.enabled {
            m
        } else {
            BatteryModel { delta_f0: 0.0, k_d: 0.0, torque_bias: Vec3::zeros(), torque_noise_amplitude: 0.0, ..m }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSection {
    pub kp: [f64; 3],
    pub kv: [f64; 3],
    pub k_eta: [f64; 3],
    pub k_pp: [f64; 3],
    pub k_ii: [f64; 3],
    pub tilt_max_deg: f64,
    /// Thrust limits as multiples of `m g`.
    pub thrust_min_factor: f64,
    pub thrust_max_factor: f64,
    pub desired_rate: DesiredRate,
}

impl Default for ControlSection {
    fn default() -> Self {
        Self {
            kp: [4.0; 3],
            kv: [4.0; 3],
            k_eta: [8.0, 8.0, 4.0],
            k_pp: [25.0, 25.0, 15.0],
            k_ii: [2.0, 2.0, 1.0],
            tilt_max_deg: 45.0,
            thrust_min_factor: 0.1,
            thrust_max_factor: 2.5,
            desired_rate: DesiredRate::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserverSection {
    /// VDO gain ζ, 1/s.
    pub vdo_gain: [f64; 3],
    pub vdo_initial_estimate: f64,
    /// NDO gain diagonal, 1/s.
    pub ndo_gain: [f64; 3],
    /// Integral gain, N/(m·s).
    pub integrator_gain: [f64; 3],
    /// Per-axis bound on the accumulated position error, m·s.
    pub integrator_clamp: f64,
    pub smo_l1: f64,
    pub smo_l2: f64,
    pub smo_l3: f64,
    /// SMO settling time, s.
    pub smo_t0: f64,
}

impl Default for ObserverSection {
    fn default() -> Self {
        Self {
            vdo_gain: [0.0, 0.0, 2.0],
            vdo_initial_estimate: 0.0,
            ndo_gain: [2.0; 3],
            integrator_gain: [2.0; 3],
            integrator_clamp: 10.0,
            smo_l1: 6.0,
            smo_l2: 4.0,
            smo_l3: 2.0,
            smo_t0: 1.0,
        }
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            sim: SimSection::default(),
            trajectory: TrajectoryConfig::default(),
            vehicle: VehicleSection::default(),
            battery: BatterySection::default(),
            control: ControlSection::default(),
            observers: ObserverSection::default(),
        }
    }
}

/// Result of one static rule.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleOutcome {
    pub rule: &'static str,
    pub result: Result<String, ConfigError>,
}

impl RuleOutcome {
    pub fn passed(&self) -> bool {
        self.result.is_ok()
    }
}

/// Runtime form of a validated [`SimConfig`].
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: VehicleParams,
    pub battery: BatteryModel,
    pub cascade: CascadeConfig,
    pub trajectory: TrajectoryConfig,
    pub dt: f64,
    /// Physics steps to run.
    pub steps: u64,
    pub seed: u64,
    pub decimation: u64,
    pub divergence_limit: f64,
    /// Physics steps per translational tick.
    pub translational_every: u64,
    /// Physics steps per rotational tick.
    pub rotational_every: u64,
    /// Wrench time constant, s.
    pub motor_lag: Option<f64>,
    /// Defaults to the trajectory start, level and at rest in rotation.
    pub initial_state: Option<VehicleState>,
}

impl Scenario {
    pub fn initial_state(&self) -> VehicleState {
        self.initial_state.unwrap_or_else(|| {
            let sp = self.trajectory.setpoint(0.0);
            let mut s = VehicleState::at_rest(sp.position);
            s.velocity = sp.velocity;
            s
        })
    }

    pub fn duration(&self) -> f64 {
        self.steps as f64 * self.dt
    }
}

/// Number of whole `dt` steps in `period`, if it divides evenly.
fn whole_steps(period: f64, dt: f64) -> Option<u64> {
    let n = period / dt;
    let r = n.round();
    ((n - r).abs() <= 1e-9 * n.max(1.0) && r >= 1.0).then_some(r as u64)
}

/// Smallest `ζ·Θ(η)` over `|φ|, |θ| ≤ 45°` and all yaw angles.
pub fn lemma1_margin(zeta: &Vec3) -> f64 {
    let lim = std::f64::consts::FRAC_PI_4;
    let mut min = f64::INFINITY;
    for i in 0..=18 {
        let roll = -lim + 2.0 * lim * i as f64 / 18.0;
        for j in 0..=18 {
            let pitch = -lim + 2.0 * lim * j as f64 / 18.0;
            for k in 0..72 {
                let yaw = 2.0 * std::f64::consts::PI * k as f64 / 72.0;
                min = min.min(zeta.dot(&theta_vector(&EulerAngles::new(roll, pitch, yaw))));
            }
        }
    }
    min
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::new("config", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn loop_steps(&self) -> Result<(u64, u64), ConfigError> {
        let s = &self.sim;
        require_positive("sim.dt_physics", s.dt_physics)?;
        require_positive("sim.translational_rate_hz", s.translational_rate_hz)?;
        require_positive("sim.rotational_rate_hz", s.rotational_rate_hz)?;
        let trans = whole_steps(1.0 / s.translational_rate_hz, s.dt_physics).ok_or_else(|| {
            ConfigError::new("sim.dt_physics", "must divide the translational loop period")
        })?;
        let rot = whole_steps(1.0 / s.rotational_rate_hz, s.dt_physics)
            .ok_or_else(|| ConfigError::new("sim.dt_physics", "must divide the rotational loop period"))?;
        if trans % rot != 0 {
            return Err(ConfigError::new(
                "sim.rotational_rate_hz",
                "must be an integer multiple of the translational rate",
            ));
        }
        Ok((trans, rot))
    }

    fn check_timing(&self) -> Result<String, ConfigError> {
        let s = &self.sim;
        require_positive("sim.duration", s.duration)?;
        require_positive("sim.divergence_limit", s.divergence_limit)?;
        if s.decimation == 0 {
            return Err(ConfigError::new("sim.decimation", "must be at least 1"));
        }
        let (trans, rot) = self.loop_steps()?;
        Ok(format!("{} physics steps per translational tick, {} per rotational tick ({}:1)", trans, rot, trans / rot))
    }

    fn check_gains(&self) -> Result<String, ConfigError> {
        let c = &self.control;
        TranslationalGains::new(c.kp, c.kv)?;
        RotationalGains::new(c.k_eta, c.k_pp, c.k_ii)?;
        let o = &self.observers;
        require_positive_diag("observers.ndo_gain", &o.ndo_gain)?;
        require_positive_diag("observers.integrator_gain", &o.integrator_gain)?;
        require_positive("observers.integrator_clamp", o.integrator_clamp)?;
        require_positive_diag("observers.smo_l", &[o.smo_l1, o.smo_l2, o.smo_l3])?;
        require_positive("observers.smo_t0", o.smo_t0)?;
        if !o.vdo_gain.iter().chain([&o.vdo_initial_estimate]).all(|g| g.is_finite()) {
            return Err(ConfigError::new("observers.vdo_gain", "must be finite"));
        }
        Ok("all gain diagonals positive".to_string())
    }

    fn check_limits(&self) -> Result<String, ConfigError> {
        let c = &self.control;
        require_positive("control.tilt_max_deg", c.tilt_max_deg)?;
        if c.tilt_max_deg >= 90.0 {
            return Err(ConfigError::new("control.tilt_max_deg", "must be below 90"));
        }
        require_positive("control.thrust_min_factor", c.thrust_min_factor)?;
        if !(c.thrust_max_factor > c.thrust_min_factor && c.thrust_max_factor.is_finite()) {
            return Err(ConfigError::new("control.thrust_max_factor", "must exceed thrust_min_factor"));
        }
        if let DesiredRate::Differentiated { cutoff_hz } = c.desired_rate {
            require_positive("control.desired_rate.cutoff_hz", cutoff_hz)?;
        }
        Ok(format!("tilt <= {} deg, thrust in [{}, {}] m g", c.tilt_max_deg, c.thrust_min_factor, c.thrust_max_factor))
    }

    fn vehicle_params(&self) -> Result<VehicleParams, ConfigError> {
        let v = &self.vehicle;
        let mut params =
            VehicleParams::new(v.mass, v.inertia, v.gravity, v.arm_length, v.yaw_moment_coeff, v.rotor_max_thrust)?;
        if v.coaxial_loss.enabled {
            params = params.with_thrust_efficiency(v.coaxial_loss.efficiency)?;
        }
        if v.motor_lag.enabled {
            require_positive("vehicle.motor_lag.time_constant", v.motor_lag.time_constant)?;
        }
        Ok(params)
    }

    fn check_lemma1(&self) -> Result<String, ConfigError> {
        let margin = lemma1_margin(&Vec3::from(self.observers.vdo_gain));
        if margin > 0.0 {
            Ok(format!("min zeta.Theta = {margin:.4} 1/s over |roll|,|pitch| <= 45 deg"))
        } else {
            Err(ConfigError::new(
                "observers.vdo_gain",
                format!("zeta.Theta must be positive over |roll|,|pitch| <= 45 deg, minimum is {margin:.4}"),
            ))
        }
    }

    fn check_rate_bound(&self) -> Result<String, ConfigError> {
        let b = self.battery.model();
        require_positive("battery.tau_b", b.tau_b)?;
        require_positive("battery.mu", b.mu)?;
        b.check_rate_bound()?;
        Ok(format!("k_d/tau_b = {:.4} N/s <= mu = {} N/s", b.peak_rate(), b.mu))
    }

    fn check_battery(&self) -> Result<String, ConfigError> {
        let b = self.battery.model();
        b.validate()?;
        Ok(format!("torque peak {:.4} N·m < bound {} N·m", b.torque_peak(), b.torque_bound))
    }

    /// Every statically checkable rule, in a fixed order.
    pub fn check_rules(&self) -> Vec<RuleOutcome> {
        let schema = if self.schema_version == SCHEMA_VERSION {
            Ok(format!("version {SCHEMA_VERSION}"))
        } else {
            Err(ConfigError::new(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ))
        };
        vec![
            RuleOutcome { rule: "schema", result: schema },
            RuleOutcome { rule: "timing", result: self.check_timing() },
            RuleOutcome { rule: "gain_positivity", result: self.check_gains() },
            RuleOutcome { rule: "control_limits", result: self.check_limits() },
            RuleOutcome {
                rule: "vehicle",
                result: self.vehicle_params().map(|p| format!("hover thrust {:.3} N", p.hover_thrust())),
            },
            RuleOutcome { rule: "trajectory", result: self.trajectory.validate().map(|_| "ok".to_string()) },
            RuleOutcome { rule: "vdo_envelope", result: self.check_lemma1() },
            RuleOutcome { rule: "sag_rate_bound", result: self.check_rate_bound() },
            RuleOutcome { rule: "battery", result: self.check_battery() },
        ]
    }

    /// First failing rule, if any.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.check_rules().into_iter().find_map(|r| r.result.err()).map_or(Ok(()), Err)
    }

    /// Validates and converts into runtime parameters.
    pub fn build(&self) -> Result<Scenario, ConfigError> {
        self.validate()?;
        let params = self.vehicle_params()?;
        let (translational_every, rotational_every) = self.loop_steps()?;
        let dt = self.sim.dt_physics;
        let c = &self.control;
        let o = &self.observers;
        let hover = params.hover_thrust();
        let cascade = CascadeConfig {
            variant: self.sim.variant,
            torque_estimator: self.sim.torque_estimator,
            desired_rate: c.desired_rate,
            translational: TranslationalGains::new(c.kp, c.kv)?,
            rotational: RotationalGains::new(c.k_eta, c.k_pp, c.k_ii)?,
            limits: ThrustLimits {
                min: c.thrust_min_factor * hover,
                max: c.thrust_max_factor * hover,
                tilt_max: c.tilt_max_deg.to_radians(),
            },
            vdo_gain: o.vdo_gain.into(),
            vdo_initial_estimate: o.vdo_initial_estimate,
            ndo_gain: o.ndo_gain.into(),
            integrator_gain: o.integrator_gain.into(),
            integrator_clamp: o.integrator_clamp,
            smo_gains: [o.smo_l1, o.smo_l2, o.smo_l3],
            smo_t0: o.smo_t0,
            translational_dt: translational_every as f64 * dt,
            rotational_dt: rotational_every as f64 * dt,
        };
        cascade.validate()?;
        Ok(Scenario {
            params,
            battery: self.battery.model(),
            cascade,
            trajectory: self.trajectory,
            dt,
            steps: (self.sim.duration / dt).round() as u64,
            seed: self.sim.seed,
            decimation: self.sim.decimation,
            divergence_limit: self.sim.divergence_limit,
            translational_every,
            rotational_every,
            motor_lag: self.vehicle.motor_lag.enabled.then_some(self.vehicle.motor_lag.time_constant),
            initial_state: None,
        })
    }
}
