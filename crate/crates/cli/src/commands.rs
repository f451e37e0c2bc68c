//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};

use conduel_core::envsim::{gen_synthetic, run_experiment, Environment, ExperimentSpec, RegretTrace, Schedule};
use conduel_core::ingest::{build_environment, envfile, export_environment, import_environment, parse_hetrec};
use conduel_core::policy::KeytermCatalog;
use conduel_core::Algorithm;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{read_curve, write_aggregate_csv, write_seed_csv};
use crate::plot::render_svg;

/// Sweep axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    /// Conversation frequency `n` under both the linear and the log schedule.
    Frequency,
    /// Feature dimension of a freshly generated synthetic environment.
    Dimension,
}

impl Axis {
    pub fn default_values(self) -> Vec<usize> {
        match self {
            Axis::Frequency => vec![1, 5, 10, 20],
            Axis::Dimension => vec![20, 30, 40, 50],
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path.display().to_string(), e))
}

fn print_json(stdout: &mut dyn Write, value: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("values serialize");
    writeln!(stdout, "{text}").map_err(|e| CliError::io("stdout", e))
}

fn checksum(env: &Environment) -> Result<Value, CliError> {
    Ok(envfile::to_value(env)?["checksum"].clone())
}

pub fn synth(cfg: &RunConfig, output: Option<PathBuf>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let env = gen_synthetic(&cfg.synthetic, cfg.env_seed).map_err(|e| CliError::Config(e.to_string()))?;
    let path = output.unwrap_or_else(|| cfg.out_dir.join("env.json"));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    export_environment(&env, &path)?;
    print_json(
        stdout,
        &json!({
            "output": path.display().to_string(),
            "checksum": checksum(&env)?,
            "users": env.users().len(),
            "arms": env.arms().len(),
            "keyterm_count": env.graph().num_keyterms(),
            "d": env.dim(),
        }),
    )
}

pub fn prep(
    cfg: &RunConfig,
    paths: &[PathBuf],
    output: Option<PathBuf>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let _ = writeln!(stderr, "reading {} file(s)", paths.len());
    let raw = parse_hetrec(paths)?;
    let ds = build_environment(&raw, &cfg.prep, cfg.env_seed)?;
    let path = output.unwrap_or_else(|| cfg.out_dir.join("env.json"));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    export_environment(&ds.env, &path)?;
    print_json(
        stdout,
        &json!({
            "output": path.display().to_string(),
            "checksum": checksum(&ds.env)?,
            "provenance": ds.env.provenance().clone(),
        }),
    )
}

/// Loads the configured environment, or generates the synthetic one.
fn load_environment(cfg: &RunConfig) -> Result<(Environment, Value), CliError> {
    match &cfg.env {
        Some(path) => {
            let env = import_environment(path)?;
            let sum = checksum(&env)?;
            Ok((env, json!({"file": path.display().to_string(), "checksum": sum})))
        }
        None => {
            let env = gen_synthetic(&cfg.synthetic, cfg.env_seed).map_err(|e| CliError::Config(e.to_string()))?;
            let sum = checksum(&env)?;
            Ok((env, json!({"synthetic_seed": cfg.env_seed, "checksum": sum})))
        }
    }
}

fn experiment(cfg: &RunConfig, env: &Environment, algorithm: Algorithm, schedule: Schedule) -> Result<ExperimentSpec, CliError> {
    if cfg.users > env.users().len() {
        return Err(CliError::Config(format!(
            "users = {} but the environment has {} users",
            cfg.users,
            env.users().len()
        )));
    }
    let spec = ExperimentSpec {
        algorithm,
        policy: cfg.policy,
        horizon: cfg.horizon,
        seeds: cfg.seeds.clone(),
        users: (0..cfg.users).collect(),
        schedule,
        pool_size: cfg.pool_size,
    };
    spec.validate(env).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(spec)
}

fn catalog(cfg: &RunConfig, env: &Environment) -> Result<KeytermCatalog, CliError> {
    Ok(env.catalog(cfg.approx_factor)?)
}

/// Runs one trace in the worker pool, writes its two CSVs under `stem` and
/// returns its summary entry.
fn run_one(
    pool: &rayon::ThreadPool,
    env: &Environment,
    keyterms: &KeytermCatalog,
    spec: &ExperimentSpec,
    out_dir: &Path,
    stem: &str,
    stderr: &mut dyn Write,
) -> Result<Value, CliError> {
    let _ = writeln!(
        stderr,
        "running {stem}: {} seed(s) x {} user(s), T = {}",
        spec.seeds.len(),
        spec.users.len(),
        spec.horizon
    );
    let trace: RegretTrace = pool.install(|| run_experiment(env, keyterms, spec))?;
    let csv = format!("{stem}.csv");
    let agg = format!("{stem}.agg.csv");
    write_seed_csv(&trace, &out_dir.join(&csv))?;
    write_aggregate_csv(&trace, &out_dir.join(&agg))?;
    let (mean, se) = (trace.final_mean(), trace.final_stderr());
    let _ = writeln!(stderr, "  {stem}: final cumulative regret {mean:.3} ± {se:.3}");
    Ok(json!({
        "algorithm": spec.algorithm.tag(),
        "schedule": spec.schedule.to_string(),
        "d": env.dim(),
        "final_mean": mean,
        "final_stderr": se,
        "fingerprint": trace.fingerprint,
        "csv": csv,
        "aggregate_csv": agg,
    }))
}

fn worker_pool(cfg: &RunConfig) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Output(format!("worker pool: {e}")))
}

fn finish(cfg: &RunConfig, summary: Value, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(&summary).expect("values serialize");
    text.push('\n');
    write_file(&cfg.out_dir.join("summary.json"), &text)?;
    print_json(stdout, &summary)
}

fn settings(cfg: &RunConfig) -> Value {
    json!({
        "horizon": cfg.horizon,
        "seeds": cfg.seeds,
        "users": cfg.users,
        "pool_size": cfg.pool_size,
        "approx_factor": cfg.approx_factor,
        "lambda": cfg.policy.lambda,
        "delta": cfg.policy.delta,
        "kappa1": cfg.policy.kappa1(),
        "kappa2": cfg.policy.kappa2,
        "alpha_scale": cfg.policy.alpha_scale,
        "pair_mode": cfg.policy.pair_mode.name(),
        "link": cfg.policy.link.name(),
        "q": cfg.policy.q,
        "t0": cfg.policy.t0,
    })
}

pub fn run(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let (env, source) = load_environment(cfg)?;
    let specs = cfg
        .algorithms
        .iter()
        .map(|&a| experiment(cfg, &env, a, cfg.schedule))
        .collect::<Result<Vec<_>, _>>()?;
    let keyterms = catalog(cfg, &env)?;
    let pool = worker_pool(cfg)?;
    create_dir(&cfg.out_dir)?;
    let mut results = Vec::new();
    for spec in &specs {
        results.push(run_one(&pool, &env, &keyterms, spec, &cfg.out_dir, spec.algorithm.tag(), stderr)?);
    }
    let summary = json!({
        "command": "run",
        "environment": source,
        "schedule": cfg.schedule.to_string(),
        "settings": settings(cfg),
        "results": results,
    });
    finish(cfg, summary, stdout)
}

pub fn sweep(
    cfg: &RunConfig,
    axis: Axis,
    values: Option<Vec<usize>>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let values = values.unwrap_or_else(|| axis.default_values());
    if values.is_empty() {
        return Err(CliError::Config("sweep axis has no values".to_string()));
    }
    let pool = worker_pool(cfg)?;
    let mut results = Vec::new();
    let mut environments = Vec::new();
    match axis {
        Axis::Frequency => {
            let (env, source) = load_environment(cfg)?;
            let mut cells = Vec::new();
            for &n in &values {
                let n = u32::try_from(n).map_err(|_| CliError::Config(format!("frequency {n} is too large")))?;
                for schedule in [Schedule::LinearFloor(n), Schedule::LogFloor(n)] {
                    schedule.validate().map_err(|e| CliError::Config(e.to_string()))?;
                    for &a in &cfg.algorithms {
                        cells.push(experiment(cfg, &env, a, schedule)?);
                    }
                }
            }
            let keyterms = catalog(cfg, &env)?;
            create_dir(&cfg.out_dir)?;
            for spec in &cells {
                let family = match spec.schedule {
                    Schedule::LinearFloor(n) => format!("linear-{n}"),
                    Schedule::LogFloor(n) => format!("log-{n}"),
                    _ => unreachable!("frequency sweeps only build floor schedules"),
                };
                let stem = format!("{}_{family}", spec.algorithm.tag());
                results.push(run_one(&pool, &env, &keyterms, spec, &cfg.out_dir, &stem, stderr)?);
            }
            environments.push(source);
        }
        Axis::Dimension => {
            if cfg.env.is_some() {
                return Err(CliError::Config(
                    "the dimension axis regenerates synthetic environments; unset env".to_string(),
                ));
            }
            if values.contains(&0) {
                return Err(CliError::Config("dimensions must be positive".to_string()));
            }
            let mut worlds = Vec::new();
            for &d in &values {
                let mut c = cfg.clone();
                c.synthetic.dim = d;
                let (env, source) = load_environment(&c)?;
                let specs = cfg
                    .algorithms
                    .iter()
                    .map(|&a| experiment(cfg, &env, a, cfg.schedule))
                    .collect::<Result<Vec<_>, _>>()?;
                worlds.push((d, env, specs));
                environments.push(source);
            }
            create_dir(&cfg.out_dir)?;
            for (d, env, specs) in &worlds {
                let keyterms = catalog(cfg, env)?;
                for spec in specs {
                    let stem = format!("{}_d{d}", spec.algorithm.tag());
                    results.push(run_one(&pool, env, &keyterms, spec, &cfg.out_dir, &stem, stderr)?);
                }
            }
        }
    }
    let summary = json!({
        "command": "sweep",
        "axis": format!("{axis:?}").to_lowercase(),
        "values": values,
        "environments": environments,
        "schedule": cfg.schedule.to_string(),
        "settings": settings(cfg),
        "results": results,
    });
    finish(cfg, summary, stdout)
}

pub fn plot(inputs: &[PathBuf], output: &Path, title: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    let curves = inputs.iter().map(|p| read_curve(p)).collect::<Result<Vec<_>, _>>()?;
    let svg = render_svg(&curves, title)?;
    write_file(output, &svg)?;
    print_json(
        stdout,
        &json!({
            "output": output.display().to_string(),
            "curves": curves.iter().map(|c| c.label.clone()).collect::<Vec<_>>(),
            "horizon": curves[0].mean.len(),
        }),
    )
}
