//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vdo_sim_core::analysis::{count_increases, TranslationalLyapunov};
use vdo_sim_core::control::{TorqueEstimator, Variant};
use vdo_sim_core::geom::{theta_vector, EulerAngles, Vec3};
use vdo_sim_core::observers::VdoState;
use vdo_sim_core::sim::config::lemma1_margin;
use vdo_sim_core::sim::{
    compute_metrics, rk4_step, rmse_mae, run_scenario, CsvSink, Metrics, NullSink, ScenarioResult, SimConfig,
    SimRecord, TrajectoryKind,
};
use vdo_sim_core::vehicle::{dynamics_deriv, ControlInput, Disturbance, VehicleParams, VehicleState};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn headline(variant: Variant) -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.sim.variant = variant;
    cfg
}

struct HeadlineRun {
    result: ScenarioResult,
    records: Vec<SimRecord>,
    seconds: f64,
}

fn run_headline(variant: Variant) -> HeadlineRun {
    let sc = headline(variant).build().expect("default config builds");
    let mut records = Vec::new();
    let start = Instant::now();
    let result = run_scenario(&sc, &mut records).expect("headline run completes");
    HeadlineRun { result, records, seconds: start.elapsed().as_secs_f64() }
}

fn ordering(base: &HeadlineRun, integ: &HeadlineRun, vdo: &HeadlineRun) -> Outcome {
    let m = |r: &HeadlineRun| -> Metrics { r.result.metrics };
    let (b, i, v) = (m(base), m(integ), m(vdo));
    let rmse_order = v.rmse_z() < i.rmse_z() && i.rmse_z() < b.rmse_z();
    let mae_order = v.mae_z() < i.mae_z() && i.mae_z() < b.mae_z();
    let gap = b.rmse_z() / v.rmse_z();
    let slowest = [base, integ, vdo].iter().map(|r| r.seconds).fold(0.0, f64::max);
    check(
        rmse_order && mae_order && gap >= 10.0 && slowest < 60.0,
        format!(
            "rmse_z vdo {:.4} < integrator {:.4} < baseline {:.4}; mae_z {:.4} < {:.4} < {:.4}; gap {:.1}x; slowest run {:.2} s",
            v.rmse_z(), i.rmse_z(), b.rmse_z(), v.mae_z(), i.mae_z(), b.mae_z(), gap, slowest
        ),
    )
}

/// Open-loop VDO with the velocity integrated exactly under held forces.
fn vdo_convergence() -> Outcome {
    let m = 2.0;
    let g = Vec3::new(0.0, 0.0, m * 9.81);
    let eta = EulerAngles::new(0.1, -0.2, 0.7);
    let theta = theta_vector(&eta);
    let zeta = Vec3::new(0.0, 0.0, 2.0);
    let rate = zeta.dot(&theta);
    let dt = 0.01;
    let thrust = -theta * 22.0;

    // constant shortfall: error decays as exp(-λ t) with the discrete-equivalent λ
    let delta_f = 4.0;
    let lambda_d = -(1.0 - dt * rate).ln() / dt;
    let mut v = Vec3::zeros();
    let mut vdo = VdoState::new(zeta, m, &v, 0.0);
    let mut worst_rel: f64 = 0.0;
    let mut worst_uncorrected: f64 = 0.0;
    for k in 0..300 {
        vdo.update(&v, &thrust, &g, &eta, dt).unwrap();
        v += (thrust + g + theta * delta_f) * (dt / m);
        let t = (k + 1) as f64 * dt;
        let err = delta_f - vdo.estimate(&v);
        let law = delta_f * (-lambda_d * t).exp();
        worst_rel = worst_rel.max((err - law).abs() / law);
        worst_uncorrected = worst_uncorrected.max((err - delta_f * (-rate * t).exp()).abs() / law);
    }

    // ramp: steady error approaches μ/(ζΘ)
    let mu = 0.1;
    let df = |t: f64| 3.0 + mu * t;
    let mut v = Vec3::zeros();
    let mut vdo = VdoState::new(zeta, m, &v, 0.0);
    let mut t = 0.0;
    for k in 0..3000 {
        vdo.update(&v, &thrust, &g, &eta, dt).unwrap();
        let mean = 0.5 * (df(t) + df(t + dt));
        v += (thrust + g + theta * mean) * (dt / m);
        t = (k + 1) as f64 * dt;
    }
    let steady = df(t) - vdo.estimate(&v);
    let expected = mu / rate;
    let ramp_rel = (steady - expected).abs() / expected;
    check(
        worst_rel < 1e-3 && ramp_rel < 0.05,
        format!(
            "rate zeta.Theta {rate:.4}: max rel dev {worst_rel:.2e} (uncorrected {worst_uncorrected:.2e}); ramp error {steady:.5} vs {expected:.5} ({:.2}%)",
            ramp_rel * 100.0
        ),
    )
}

/// Shortfall profile with slope bounded by μ and an analytic integral.
struct Profile {
    a: f64,
    b: f64,
    w: f64,
    phase: f64,
    c: f64,
    tau: f64,
}

impl Profile {
    fn value(&self, t: f64) -> f64 {
        self.a + self.b * (self.w * t + self.phase).sin() + self.c * (1.0 - (-t / self.tau).exp())
    }

    fn integral(&self, t0: f64, t1: f64) -> f64 {
        self.a * (t1 - t0) - self.b / self.w * ((self.w * t1 + self.phase).cos() - (self.w * t0 + self.phase).cos())
            + self.c * ((t1 - t0) - self.tau * ((-t0 / self.tau).exp() - (-t1 / self.tau).exp()))
    }
}

fn lemma1_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let m = 2.0;
    let g = Vec3::new(0.0, 0.0, m * 9.81);
    let dt = 0.01;
    let mut samples = 0usize;
    let mut violations = 0usize;
    let mut tightest = f64::INFINITY;
    let mut runs = 0;
    while runs < 100 {
        let zeta = Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(0.8..4.0));
        let c = lemma1_margin(&zeta);
        if c <= 0.0 {
            continue;
        }
        runs += 1;
        let mu = rng.random_range(0.02..0.5);
        let split = rng.random_range(0.0..1.0);
        let w = rng.random_range(0.2..3.0);
        let tau = rng.random_range(5.0..120.0);
        let p = Profile {
            a: rng.random_range(0.0..6.0),
            b: split * mu / w,
            w,
            phase: rng.random_range(0.0..std::f64::consts::TAU),
            c: (1.0 - split) * mu * tau,
            tau,
        };
        let mut eta = EulerAngles::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-3.0..3.0));
        let mut v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let mut vdo = VdoState::new(zeta, m, &v, p.value(0.0) + rng.random_range(-10.0..10.0));
        let e0 = (p.value(0.0) - vdo.estimate(&v)).abs();
        for k in 0..2000 {
            let t = k as f64 * dt;
            eta = EulerAngles::new(
                (eta.roll + rng.random_range(-0.02..0.02)).clamp(-0.7, 0.7),
                (eta.pitch + rng.random_range(-0.02..0.02)).clamp(-0.7, 0.7),
                eta.yaw + rng.random_range(-0.05..0.05),
            );
            let theta = theta_vector(&eta);
            let thrust = -theta * rng.random_range(10.0..30.0);
            vdo.update(&v, &thrust, &g, &eta, dt).unwrap();
            v += ((thrust + g) * dt + theta * p.integral(t, t + dt)) / m;
            let t1 = t + dt;
            let err = (p.value(t1) - vdo.estimate(&v)).abs();
            let bound = e0 * (-c * t1).exp() + mu / c;
            samples += 1;
            if err > bound {
                violations += 1;
            }
            tightest = tightest.min(bound - err);
        }
    }
    check(
        violations == 0,
        format!("{runs} runs, {samples} samples, {violations} violations, smallest margin {tightest:.3e} N"),
    )
}

const LYAPUNOV_RESIDUAL: f64 = 1e-6;

fn lyapunov_decrease() -> Outcome {
    let mut cfg = headline(Variant::Vdo);
    cfg.trajectory.kind = TrajectoryKind::Hover;
    cfg.sim.duration = 30.0;
    cfg.battery.k_d = 0.0;
    cfg.battery.delta_f0 = 3.0;
    cfg.battery.torque_bias = [0.0; 3];
    cfg.battery.torque_noise_amplitude = 0.0;
    let mut sc = cfg.build().unwrap();
    let mut s0 = sc.initial_state();
    s0.position += Vec3::new(0.15, -0.1, 0.1);
    sc.initial_state = Some(s0);
    let mut records: Vec<SimRecord> = Vec::new();
    run_scenario(&sc, &mut records).map_err(|e| e.to_string())?;
    let lyap = TranslationalLyapunov::new(&sc.cascade.translational).ok_or("singular Lyapunov system")?;
    let values: Vec<f64> = records
        .iter()
        .map(|r| lyap.value(&(r.p_d - r.p), &(r.v_d - r.v), r.delta_f_true - r.delta_f_hat))
        .collect();
    let max_tilt = records.iter().map(|r| r.eta.roll.abs().max(r.eta.pitch.abs())).fold(0.0, f64::max);
    let violations = count_increases(&values, LYAPUNOV_RESIDUAL);
    check(
        violations == 0,
        format!(
            "V from {:.3} to {:.2e} over {} samples, residual {LYAPUNOV_RESIDUAL:.0e}, {violations} increases above it, max tilt {:.2} deg",
            values[0],
            values[values.len() - 1],
            values.len(),
            max_tilt.to_degrees()
        ),
    )
}

fn torque_observer() -> Outcome {
    let tau = Vec3::new(0.012, -0.012, 0.008);
    let tau = tau * (0.02 / tau.norm());
    let mut cfg = headline(Variant::Vdo);
    cfg.sim.duration = 20.0;
    cfg.sim.decimation = 1;
    cfg.battery.torque_bias = tau.into();
    cfg.battery.torque_noise_amplitude = 0.0;
    let sc = cfg.build().unwrap();
    let mut records: Vec<SimRecord> = Vec::new();
    run_scenario(&sc, &mut records).map_err(|e| e.to_string())?;
    let t0 = sc.cascade.smo_t0;
    let worst = records
        .iter()
        .filter(|r| r.t > t0)
        .map(|r| (r.tau_dis_hat - tau).norm() / tau.norm())
        .fold(0.0, f64::max);

    // oracle cancellation against a run without torque disturbance
    let mut with = headline(Variant::Vdo);
    with.sim.duration = 60.0;
    with.sim.torque_estimator = TorqueEstimator::Oracle;
    let mut without = with.clone();
    without.battery.torque_bias = [0.0; 3];
    without.battery.torque_noise_amplitude = 0.0;
    let mut a: Vec<SimRecord> = Vec::new();
    let mut b: Vec<SimRecord> = Vec::new();
    let ra = run_scenario(&with.build().unwrap(), &mut a).map_err(|e| e.to_string())?;
    run_scenario(&without.build().unwrap(), &mut b).map_err(|e| e.to_string())?;
    let identical = a.len() == b.len()
        && a.iter().zip(&b).all(|(x, y)| x.eta == y.eta && x.eta_d == y.eta_d && x.p == y.p && x.v == y.v)
        && a.iter().any(|x| x.tau_dis_true.norm() > 0.0);
    check(
        worst <= 0.1 && identical,
        format!(
            "worst relative estimate error after t0: {:.2}%; oracle run {} the disturbance-free run over {} records ({} saturated ticks)",
            worst * 100.0,
            if identical { "bit-identical to" } else { "differs from" },
            a.len(),
            ra.saturated_ticks
        ),
    )
}

fn spin_error(dt: f64, reference: &VehicleState, params: &VehicleParams, horizon: f64) -> f64 {
    let s = integrate_spin(dt, params, horizon);
    (s.omega - reference.omega).norm() + (s.rotation - reference.rotation).norm()
}

fn integrate_spin(dt: f64, params: &VehicleParams, horizon: f64) -> VehicleState {
    let mut s = VehicleState::at_rest(Vec3::zeros());
    s.omega = Vec3::new(3.0, 1.0, -2.0);
    let u = ControlInput::default();
    let steps = (horizon / dt).round() as usize;
    for k in 0..steps {
        s = rk4_step(&s, k as f64 * dt, dt, |_, x| dynamics_deriv(params, x, &u, &Disturbance::default())).unwrap();
    }
    s
}

fn numerical_integrity(vdo_headline: &HeadlineRun) -> Outcome {
    let params = VehicleParams::new(2.0, [0.02, 0.03, 0.05], 9.81, 0.25, 0.016, 8.0).unwrap();
    let horizon = 2.0;
    let dt = 0.02;
    let reference = integrate_spin(dt / 10.0, &params, horizon);
    let ratio = spin_error(dt, &reference, &params, horizon) / spin_error(dt / 2.0, &reference, &params, horizon);
    let drift = vdo_headline.result.max_orthonormal_deviation;

    let sc = headline(Variant::Vdo).build().unwrap();
    let csv = |_: ()| -> Vec<u8> {
        let mut sink = CsvSink::new(Vec::new()).unwrap();
        run_scenario(&sc, &mut sink).unwrap();
        sink.into_inner()
    };
    let (first, second) = (csv(()), csv(()));
    let metrics_equal = {
        let again = run_scenario(&sc, &mut NullSink).unwrap().metrics;
        again == vdo_headline.result.metrics
    };
    let identical = first == second && metrics_equal;
    check(
        (12.8..=19.2).contains(&ratio) && drift < 1e-6 && identical,
        format!(
            "error ratio on dt halving {ratio:.2}; max orthonormality deviation over 280 s {drift:.1e}; two runs {} ({} bytes)",
            if identical { "byte-identical" } else { "differ" },
            first.len()
        ),
    )
}

fn metric_definitions() -> Outcome {
    let p_d = Vec3::new(1.5, -2.0, -2.25);
    let errors = [
        [-0.25, 0.0, 0.0],
        [0.75, 0.0, 1.0],
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 0.5],
        [0.0, 0.0, -0.5],
        [0.0, 0.25, 0.0],
        [-0.25, 0.0, 0.0],
        [0.5, 0.0, 0.0],
        [0.75, 0.0, -1.0],
        [-1.0, -0.75, 0.0],
    ];
    let desired = vec![p_d; errors.len()];
    let actual: Vec<Vec3> = errors.iter().map(|e| p_d - Vec3::from(*e)).collect();
    let m = compute_metrics(&desired, &actual).map_err(|e| e.to_string())?;
    // hand values: Σe² per axis = 2.5, 0.625, 2.5; Σ|e| = 3.5, 1.0, 3.0; Σ‖e‖ = 6.0
    let fixture_ok = m.n == 10
        && m.rmse == [0.5, 0.25, 0.5]
        && m.mae == [0.35, 0.1, 0.3]
        && m.rmse_3d == 0.75
        && m.mae_3d == 0.6;

    let mut runner = TestRunner::new(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() });
    let strategy = prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..200);
    let property = runner.run(&strategy, |pairs| {
        let (d, a): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let (r1, r2) = rmse_mae(&d, &a).unwrap();
        prop_assert!(r2 <= r1 * (1.0 + 1e-12), "r2 {} > r1 {}", r2, r1);
        Ok(())
    });
    check(
        fixture_ok && property.is_ok(),
        format!(
            "fixture rmse {:?} mae {:?} 3d ({}, {}); r2 <= r1 over 1000 random series: {}",
            m.rmse,
            m.mae,
            m.rmse_3d,
            m.mae_3d,
            match &property {
                Ok(()) => "holds".to_string(),
                Err(e) => e.to_string(),
            }
        ),
    )
}

fn descent(base: &HeadlineRun, vdo: &HeadlineRun, period: f64) -> Outcome {
    // altitude deficit h_d − h = z − z_d, averaged over whole trajectory periods
    let deficit = |r: &SimRecord| r.p.z - r.p_d.z;
    let windows: Vec<f64> = (0..(280.0 / period) as usize)
        .map(|w| {
            let (lo, hi) = (w as f64 * period, (w + 1) as f64 * period);
            let xs: Vec<f64> = base.records.iter().filter(|r| r.t >= lo && r.t < hi).map(deficit).collect();
            xs.iter().sum::<f64>() / xs.len() as f64
        })
        .collect();
    let monotone = windows.windows(2).all(|w| w[1] > w[0]);
    let last = base.records.last().unwrap();
    let final_loss = deficit(last);
    let vdo_worst = vdo.records.iter().filter(|r| r.t > 10.0).map(|r| r.e_z().abs()).fold(0.0, f64::max);
    check(
        monotone && final_loss >= 0.3 && vdo_worst <= 0.05,
        format!(
            "baseline per-period mean deficit {:.3} .. {:.3} m ({}), {final_loss:.3} m at t = {:.2} s; vdo max |e_z| after 10 s {vdo_worst:.4} m",
            windows[0],
            windows[windows.len() - 1],
            if monotone { "increasing" } else { "not monotone" },
            last.t
        ),
    )
}

fn main() -> ExitCode {
    let base = run_headline(Variant::Baseline);
    let integ = run_headline(Variant::Integrator);
    let vdo = run_headline(Variant::Vdo);
    let period = SimConfig::default().trajectory.period;

    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "accuracy ordering", ordering(&base, &integ, &vdo)),
        (2, "vdo convergence law", vdo_convergence()),
        (3, "vdo error bound", lemma1_bound()),
        (4, "lyapunov decrease", lyapunov_decrease()),
        (5, "torque observer", torque_observer()),
        (6, "numerical integrity", numerical_integrity(&vdo)),
        (7, "metric definitions", metric_definitions()),
        (8, "descent and height hold", descent(&base, &vdo, period)),
    ];
    let mut failed = 0;
    for (id, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  criterion {id}  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {id}  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
