//! Dual-rate scheduler and run loop.
//!
//! Per physics step `k` (time `t = k dt`): run the translational tick every
//! `translational_every` steps; every `rotational_every` steps draw the
//! torque disturbance and run the rotational tick; then allocate, score,
//! record and integrate with the wrench held. The torque disturbance is held
//! over a rotational period like the control output.

use crate::control::{Cascade, ControlError, TorqueEstimator};
use crate::geom::{orthonormal_deviation, Vec3};
use crate::vehicle::{dynamics_deriv, ControlInput, Disturbance, TorqueDisturbance, VehicleState};

use super::config::Scenario;
use super::metrics::{Metrics, MetricsAccumulator};
use super::record::{RecordSink, SimRecord};
use super::rk4::rk4_step;
use super::SimError;

/// Summary of a completed run.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    /// Position tracking metrics over every physics step.
    pub metrics: Metrics,
    pub translational_ticks: u64,
    pub rotational_ticks: u64,
    pub steps: u64,
    /// Largest `‖RᵀR − I‖` seen after any step.
    pub max_orthonormal_deviation: f64,
    /// Rotational ticks whose wrench had to be clipped by the mixer.
    pub saturated_ticks: u64,
    pub final_state: VehicleState,
    pub final_time: f64,
}

/// Owns one scenario's state; advanced one physics step at a time.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    state: VehicleState,
    cascade: Cascade,
    torque_source: TorqueDisturbance,
    step: u64,
    /// Wrench requested by the last rotational tick, after allocation.
    commanded: ControlInput,
    /// Wrench acting on the plant (differs from `commanded` only with motor lag).
    applied: ControlInput,
    saturated: bool,
    tau_dis: Vec3,
    accumulator: MetricsAccumulator,
    max_deviation: f64,
    saturated_ticks: u64,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        scenario.cascade.validate()?;
        scenario.battery.validate()?;
        if !(scenario.dt > 0.0 && scenario.dt.is_finite()) {
            return Err(SimError::InvalidStep { dt: scenario.dt });
        }
        let state = scenario.initial_state();
        let cascade = Cascade::new(scenario.cascade.clone(), &scenario.params, &state);
        let rotational_dt = scenario.dt * scenario.rotational_every as f64;
        let torque_source = scenario.battery.torque_source(scenario.seed, rotational_dt);
        let hover = ControlInput::new(scenario.params.hover_thrust(), Vec3::zeros());
        Ok(Self {
            state,
            cascade,
            torque_source,
            step: 0,
            commanded: hover,
            applied: hover,
            saturated: false,
            tau_dis: Vec3::zeros(),
            accumulator: MetricsAccumulator::default(),
            max_deviation: orthonormal_deviation(&state.rotation),
            saturated_ticks: 0,
            scenario,
        })
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.scenario.dt
    }

    pub fn state(&self) -> &VehicleState {
        &self.state
    }

    pub fn cascade(&self) -> &Cascade {
        &self.cascade
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.scenario.steps
    }

    /// Advances one physics step, offering a record to `sink` on decimated steps.
    pub fn step<S: RecordSink + ?Sized>(&mut self, sink: &mut S) -> Result<(), SimError> {
        let sc = &self.scenario;
        let k = self.step;
        let t = self.time();
        let control_err = |source: ControlError| SimError::Control { t, source };

        let sp = sc.trajectory.setpoint(t);
        if k.is_multiple_of(sc.translational_every) {
            self.cascade.translational_tick(&sp, &self.state).map_err(control_err)?;
        }
        if k.is_multiple_of(sc.rotational_every) {
            self.tau_dis = self.torque_source.next_torque();
            let oracle = (sc.cascade.torque_estimator == TorqueEstimator::Oracle).then_some(self.tau_dis);
            let cmd = self.cascade.rotational_tick(t, &self.state, oracle).map_err(control_err)?;
            let alloc = sc.params.mixer.allocate(cmd.thrust, &cmd.total_torque());
            self.saturated = alloc.saturated;
            self.commanded = if alloc.saturated {
                self.saturated_ticks += 1;
                ControlInput::new(alloc.thrust, alloc.torque)
            } else {
                cmd
            };
            self.cascade.observe_torque(&self.state, &self.commanded).map_err(control_err)?;
        }
        self.applied = match sc.motor_lag {
            None => self.commanded,
            Some(tc) => {
                let a = 1.0 - (-sc.dt / tc).exp();
                let target = self.commanded;
                let prev = self.applied;
                ControlInput::new(
                    prev.thrust + (target.thrust - prev.thrust) * a,
                    prev.total_torque() + (target.total_torque() - prev.total_torque()) * a,
                )
            }
        };

        let position_error = (sp.position - self.state.position).norm();
        self.accumulator.push(&sp.position, &self.state.position);
        if k.is_multiple_of(sc.decimation) {
            sink.accept(&self.record(t))?;
        }
        if !(position_error <= sc.divergence_limit) {
            return Err(SimError::Diverged { t, position_error });
        }

        let params = &sc.params;
        let battery = &sc.battery;
        let applied = self.applied;
        let torque = self.tau_dis;
        let next = rk4_step(&self.state, t, sc.dt, |tt, s| {
            let dist = Disturbance { delta_f: battery.delta_f(tt), torque };
            dynamics_deriv(params, s, &applied, &dist)
        })?;
        self.max_deviation = self.max_deviation.max(orthonormal_deviation(&next.rotation));
        self.state = next;
        self.step += 1;
        Ok(())
    }

    fn record(&self, t: f64) -> SimRecord {
        let latched = self.cascade.latched();
        SimRecord {
            t,
            p_d: latched.setpoint.position,
            p: self.state.position,
            v_d: latched.setpoint.velocity,
            v: self.state.velocity,
            eta_d: latched.eta_d,
            eta: self.state.euler(),
            thrust: self.commanded.thrust,
            torque: self.commanded.total_torque(),
            delta_f_true: self.scenario.battery.delta_f(t),
            delta_f_hat: latched.delta_f_hat,
            force_hat: latched.force_hat,
            tau_dis_true: self.tau_dis,
            tau_dis_hat: self.cascade.torque_hat(),
            saturated: self.saturated,
        }
    }

    /// Runs to completion. On error the sink is flushed before returning.
    pub fn run<S: RecordSink + ?Sized>(mut self, sink: &mut S) -> Result<ScenarioResult, SimError> {
        while !self.is_finished() {
            if let Err(e) = self.step(sink) {
                sink.flush()?;
                return Err(e);
            }
        }
        sink.flush()?;
        let (translational_ticks, rotational_ticks) = self.cascade.tick_counts();
        Ok(ScenarioResult {
            metrics: self.accumulator.finish()?,
            translational_ticks,
            rotational_ticks,
            steps: self.step,
            max_orthonormal_deviation: self.max_deviation,
            saturated_ticks: self.saturated_ticks,
            final_state: self.state,
            final_time: self.time(),
        })
    }
}

/// Runs `scenario` from its initial state, streaming records into `sink`.
pub fn run_scenario<S: RecordSink + ?Sized>(scenario: &Scenario, sink: &mut S) -> Result<ScenarioResult, SimError> {
    Simulation::new(scenario.clone())?.run(sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::Variant;
    use crate::sim::config::SimConfig;
    use crate::sim::record::NullSink;
    use crate::sim::trajectory::TrajectoryKind;

    fn short(variant: Variant, duration: f64) -> Scenario {
        let mut cfg = SimConfig::default();
        cfg.sim.variant = variant;
        cfg.sim.duration = duration;
        cfg.build().unwrap()
    }

    #[test]
    fn tick_ratio_is_five_to_one() {
        let r = run_scenario(&short(Variant::Vdo, 2.0), &mut NullSink).unwrap();
        assert_eq!(r.steps, 2000);
        assert_eq!(r.translational_ticks, 200);
        assert_eq!(r.rotational_ticks, 1000);
    }

    #[test]
    fn records_are_decimated_and_monotone() {
        let mut recs: Vec<SimRecord> = Vec::new();
        run_scenario(&short(Variant::Baseline, 1.0), &mut recs).unwrap();
        assert_eq!(recs.len(), 100);
        assert!(recs.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(recs[0].p_d, crate::geom::Vec3::new(0.0, 2.0, -2.0));
    }

    #[test]
    fn ideal_hover_holds_position() {
        let mut cfg = SimConfig::default();
        cfg.battery.enabled = false;
        cfg.trajectory.kind = TrajectoryKind::Hover;
        cfg.sim.duration = 10.0;
        cfg.sim.variant = Variant::Baseline;
        let mut recs: Vec<SimRecord> = Vec::new();
        let r = run_scenario(&cfg.build().unwrap(), &mut recs).unwrap();
        assert!(r.metrics.rmse_3d < 1e-6, "{:?}", r.metrics);
        assert!(recs.iter().all(|x| (x.thrust - 19.62).abs() < 1e-9 && x.torque.norm() < 1e-9));
    }

    #[test]
    fn divergence_is_reported() {
        let mut sc = short(Variant::Baseline, 5.0);
        sc.divergence_limit = 0.5;
        let mut s = sc.initial_state();
        s.position.x += 1.0;
        sc.initial_state = Some(s);
        let err = run_scenario(&sc, &mut NullSink).unwrap_err();
        assert!(matches!(err, SimError::Diverged { t, .. } if t == 0.0));
    }
}
