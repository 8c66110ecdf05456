//! Command implementations behind the `vdo-sim` binary.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | I/O or internal error |
//! | 2 | usage error |
//! | 3 | configuration or validation failure |
//! | 4 | simulation diverged |

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use vdo_sim_core::control::Variant;
use vdo_sim_core::sim::{CsvSink, Metrics, ScenarioResult, SimConfig, SimError, Simulation};
use vdo_sim_core::ConfigError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_DIVERGED: u8 = 4;

pub const OUT_ENV: &str = "VDO_SIM_OUT";

#[derive(Debug, Parser)]
#[command(name = "vdo-sim", version, about = "Octocopter flight under battery voltage sag")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write records.csv and metrics.txt.
    Run(ScenarioArgs),
    /// Run several variants on the same seed and battery and compare altitude accuracy.
    Compare(ScenarioArgs),
    /// Check a configuration against every static rule.
    Validate(ValidateArgs),
    /// Print the default configuration as TOML.
    PrintConfig,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUT_ENV, default_value = "out")]
    pub out: PathBuf,
    /// Controller variant: baseline, integrator, vdo or ndo. Repeatable.
    #[arg(long = "variant")]
    pub variants: Vec<Variant>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulated time, s.
    #[arg(long, allow_negative_numbers = true)]
    pub duration: Option<f64>,
    /// Keep one record every N physics steps.
    #[arg(long)]
    pub decimate: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Everything a run or comparison needs, resolved from the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub variants: Vec<Variant>,
    pub seed: Option<u64>,
    pub duration: Option<f64>,
    pub decimation: Option<u64>,
}

impl From<ScenarioArgs> for RunManifest {
    fn from(a: ScenarioArgs) -> Self {
        Self {
            config_path: a.config,
            out_dir: a.out,
            variants: a.variants,
            seed: a.seed,
            duration: a.duration,
            decimation: a.decimate,
        }
    }
}

impl RunManifest {
    /// Loads the configuration and applies the command-line overrides.
    pub fn config(&self) -> Result<SimConfig, CliError> {
        let mut cfg = match &self.config_path {
            Some(p) => SimConfig::load(p)?,
            None => SimConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.sim.seed = seed;
        }
        if let Some(d) = self.duration {
            cfg.sim.duration = d;
        }
        if let Some(n) = self.decimation {
            cfg.sim.decimation = n;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{variant}: {source}")]
    Diverged { variant: Variant, source: SimError },
    #[error(transparent)]
    Io(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Diverged { .. } => EXIT_DIVERGED,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

fn sim_error(variant: Variant, e: SimError) -> CliError {
    match e {
        SimError::Config(c) => CliError::Config(c),
        e if e.is_divergence() => CliError::Diverged { variant, source: e },
        e => CliError::Io(anyhow::Error::new(e).context(format!("running {variant}"))),
    }
}

/// Outcome of one variant's run, including a divergence.
struct VariantRun {
    variant: Variant,
    outcome: Result<ScenarioResult, SimError>,
}

/// Runs `cfg` writing `records.csv`, `metrics.txt` and `config.toml` into `dir`.
fn run_into(cfg: &SimConfig, dir: &Path) -> Result<VariantRun, CliError> {
    let scenario = cfg.build()?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.toml"), cfg.to_toml()).with_context(|| format!("writing {}", dir.display()))?;
    let csv_path = dir.join("records.csv");
    let file = File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    let mut sink = CsvSink::new(BufWriter::new(file)).with_context(|| format!("writing {}", csv_path.display()))?;
    let outcome = Simulation::new(scenario).and_then(|sim| sim.run(&mut sink));
    if let Err(SimError::Io(e)) = outcome {
        return Err(anyhow::Error::new(e).context(format!("writing {}", csv_path.display())).into());
    }
    let run = VariantRun { variant: cfg.sim.variant, outcome };
    fs::write(dir.join("metrics.txt"), metrics_file(cfg, &run)).with_context(|| format!("writing {}", dir.display()))?;
    Ok(run)
}

fn metric_lines(prefix: &str, m: &Metrics) -> Vec<(String, String)> {
    let mut v = vec![(format!("{prefix}n"), m.n.to_string())];
    for (i, axis) in ["x", "y", "z"].iter().enumerate() {
        v.push((format!("{prefix}rmse_{axis}"), format!("{:.6}", m.rmse[i])));
        v.push((format!("{prefix}mae_{axis}"), format!("{:.6}", m.mae[i])));
    }
    v.push((format!("{prefix}rmse_3d"), format!("{:.6}", m.rmse_3d)));
    v.push((format!("{prefix}mae_3d"), format!("{:.6}", m.mae_3d)));
    v
}

fn metrics_file(cfg: &SimConfig, run: &VariantRun) -> String {
    let mut kv: Vec<(String, String)> = vec![
        ("variant".into(), run.variant.to_string()),
        ("seed".into(), cfg.sim.seed.to_string()),
        ("duration".into(), cfg.sim.duration.to_string()),
        ("dt_physics".into(), cfg.sim.dt_physics.to_string()),
    ];
    match &run.outcome {
        Ok(r) => {
            kv.push(("status".into(), "ok".into()));
            kv.extend(metric_lines("", &r.metrics));
            kv.push(("steps".into(), r.steps.to_string()));
            kv.push(("translational_ticks".into(), r.translational_ticks.to_string()));
            kv.push(("rotational_ticks".into(), r.rotational_ticks.to_string()));
            kv.push(("saturated_ticks".into(), r.saturated_ticks.to_string()));
            kv.push(("max_orthonormal_deviation".into(), format!("{:e}", r.max_orthonormal_deviation)));
        }
        Err(e) => {
            kv.push(("status".into(), "diverged".into()));
            kv.push(("diverged_at".into(), format!("{:.3}", e.failure_time().unwrap_or(f64::NAN))));
            kv.push(("reason".into(), e.to_string()));
        }
    }
    kv.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

fn summary(run: &VariantRun) -> String {
    match &run.outcome {
        Ok(r) => {
            let m = &r.metrics;
            format!(
                "[{}]\nstatus   ok\nsamples  {}\nrmse     x {:.6}  y {:.6}  z {:.6}  3d {:.6}\nmae      x {:.6}  y {:.6}  z {:.6}  3d {:.6}\nticks    translational {}  rotational {}  saturated {}\n",
                run.variant,
                m.n,
                m.rmse[0],
                m.rmse[1],
                m.rmse[2],
                m.rmse_3d,
                m.mae[0],
                m.mae[1],
                m.mae[2],
                m.mae_3d,
                r.translational_ticks,
                r.rotational_ticks,
                r.saturated_ticks
            )
        }
        Err(e) => format!("[{}]\nstatus   diverged\nreason   {e}\n", run.variant),
    }
}

fn into_result(run: VariantRun) -> Result<ScenarioResult, CliError> {
    run.outcome.map_err(|e| sim_error(run.variant, e))
}

pub fn cmd_run(manifest: &RunManifest, console: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = manifest.config()?;
    match manifest.variants.as_slice() {
        [] => {}
        [v] => cfg.sim.variant = *v,
        _ => return Err(CliError::Usage("run takes at most one --variant; use compare for several".into())),
    }
    let run = run_into(&cfg, &manifest.out_dir)?;
    console.write_all(summary(&run).as_bytes()).context("writing summary")?;
    into_result(run).map(|_| ())
}

/// `(1 − a/b)·100`, the reduction of `a` relative to `b`, in percent.
pub fn improvement_pct(a: f64, b: f64) -> f64 {
    (1.0 - a / b) * 100.0
}

/// Rounds to the 6 decimals that are emitted, so percentages recompute exactly.
fn emitted(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("formatted float parses")
}

pub fn cmd_compare(manifest: &RunManifest, console: &mut dyn Write) -> Result<(), CliError> {
    let mut variants: Vec<Variant> = Vec::new();
    let requested = if manifest.variants.is_empty() { Variant::ALL.to_vec() } else { manifest.variants.clone() };
    for v in requested {
        if !variants.contains(&v) {
            variants.push(v);
        }
    }
    if variants.len() < 2 {
        return Err(CliError::Usage("compare needs at least two distinct --variant values".into()));
    }
    let base = manifest.config()?;
    let configs: Vec<SimConfig> = variants
        .iter()
        .map(|&v| {
            let mut c = base.clone();
            c.sim.variant = v;
            c
        })
        .collect();
    for c in &configs {
        c.validate()?;
    }

    let runs: Vec<Result<VariantRun, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| {
                let dir = manifest.out_dir.join(c.sim.variant.name());
                scope.spawn(move || run_into(c, &dir))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    });
    let runs: Vec<VariantRun> = runs.into_iter().collect::<Result<_, _>>()?;
    for run in &runs {
        console.write_all(summary(run).as_bytes()).context("writing summary")?;
    }

    let mut table = String::from("variant      rmse_z      mae_z\n");
    let mut flat = format!("seed={}\nduration={}\n", base.sim.seed, base.sim.duration);
    let mut finished: Vec<(Variant, f64, f64)> = Vec::new();
    for run in &runs {
        match &run.outcome {
            Ok(r) => {
                let (rmse, mae) = (emitted(r.metrics.rmse_z()), emitted(r.metrics.mae_z()));
                table.push_str(&format!("{:<12} {:.6}    {:.6}\n", run.variant.name(), rmse, mae));
                flat.push_str(&format!("{0}.status=ok\n{0}.rmse_z={1:.6}\n{0}.mae_z={2:.6}\n", run.variant, rmse, mae));
                finished.push((run.variant, rmse, mae));
            }
            Err(_) => {
                table.push_str(&format!("{:<12} diverged\n", run.variant.name()));
                flat.push_str(&format!("{}.status=diverged\n", run.variant));
            }
        }
    }
    table.push_str("\nimprovement (1 - a/b) * 100\npair                       rmse_z     mae_z\n");
    for (j, &(a, a_rmse, a_mae)) in finished.iter().enumerate() {
        for &(b, b_rmse, b_mae) in &finished[..j] {
            let (dr, dm) = (improvement_pct(a_rmse, b_rmse), improvement_pct(a_mae, b_mae));
            table.push_str(&format!("{:<26} {:>7.2}%  {:>7.2}%\n", format!("{a} vs {b}"), dr, dm));
            flat.push_str(&format!("{a}_vs_{b}.rmse_z_improvement_pct={dr:.2}\n{a}_vs_{b}.mae_z_improvement_pct={dm:.2}\n"));
        }
    }
    let write = |name: &str, text: &str| -> Result<(), CliError> {
        let path = manifest.out_dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    };
    write("comparison.txt", &table)?;
    write("comparison_metrics.txt", &flat)?;
    console.write_all(table.as_bytes()).context("writing table")?;

    for run in runs {
        into_result(run)?;
    }
    Ok(())
}

/// Prints one PASS/FAIL line per rule; fails if any rule does.
pub fn cmd_validate(config: Option<&Path>, console: &mut dyn Write) -> Result<(), CliError> {
    let cfg = match config {
        Some(p) => SimConfig::load(p)?,
        None => SimConfig::default(),
    };
    let rules = cfg.check_rules();
    let mut first_failure = None;
    for r in &rules {
        let line = match &r.result {
            Ok(detail) => format!("PASS  {:<16} {detail}\n", r.rule),
            Err(e) => {
                first_failure.get_or_insert_with(|| e.clone());
                format!("FAIL  {:<16} {e}\n", r.rule)
            }
        };
        console.write_all(line.as_bytes()).context("writing report")?;
    }
    match first_failure {
        Some(e) => Err(CliError::Config(e)),
        None => Ok(()),
    }
}

/// Dispatches a parsed command line and returns the process exit code.
pub fn execute(cli: Cli, console: &mut dyn Write) -> u8 {
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args.into(), console),
        Command::Compare(args) => cmd_compare(&args.into(), console),
        Command::Validate(args) => cmd_validate(args.config.as_deref(), console),
        Command::PrintConfig => {
            console.write_all(SimConfig::default().to_toml().as_bytes()).map_err(|e| CliError::Io(e.into()))
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            e.exit_code()
        }
    }
}
