//! Command-line front end for `noiseblow`: configuration, experiments and
//! report files. The binary is a thin wrapper over [`run`] and [`report`].

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use noiseblow::mc::Execution;

use config::RawConfig;
use error::{config_err, CliError};
use experiments::{Mode, RunConfig};
use output::{config_hash, ensure_writable, read_summary, write_outputs, RunInfo, Summary};

pub use error::CliError as Error;

pub const DEFAULT_OUT_DIR: &str = "noiseblow-out";

/// Inputs to one run, as gathered from the command line.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config_text: String,
    pub overrides: Vec<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// `0` uses every available core.
    pub workers: usize,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Resolve the configuration without running anything.
pub fn resolve(opts: &RunOptions) -> Result<RunConfig, CliError> {
    let mut raw = RawConfig::parse(&opts.config_text)?;
    for o in &opts.overrides {
        raw.apply_override(o)?;
    }
    if let Some(seed) = opts.seed {
        let seed = i64::try_from(seed).map_err(|_| config_err(format!("`seed` must be < 2^63, got {seed}")))?;
        raw.set("seed", toml::Value::Integer(seed));
    }
    if let Some(out) = &opts.out {
        raw.set("output.dir", toml::Value::String(out.to_string_lossy().into_owned()));
    }
    RunConfig::from_resolver(raw.resolver())
}

pub fn run(mode: Mode, opts: &RunOptions) -> Result<Outcome, CliError> {
    let cfg = resolve(opts)?;
    if !cfg.experiment.modes().contains(&mode) {
        let allowed: Vec<&str> = cfg.experiment.modes().iter().map(Mode::name).collect();
        return Err(config_err(format!(
            "experiment `{}` does not run under `{}`; use {}",
            cfg.name,
            mode.name(),
            allowed.join(" or ")
        )));
    }
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| Path::new(DEFAULT_OUT_DIR).join(&cfg.name));
    ensure_writable(&out_dir)?;

    let exec = if opts.workers == 0 { Execution::Auto } else { Execution::with_workers(opts.workers) };
    let started = Instant::now();
    let report = cfg.experiment.run(mode, cfg.master_seed, exec)?;
    let elapsed = started.elapsed().as_secs_f64();

    let summary = Summary {
        tool: "noiseblow".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: cfg.name.clone(),
        config_hash: config_hash(&cfg.resolved),
        master_seed: cfg.master_seed,
        config: cfg.resolved.clone(),
        analytic: report.analytic.clone(),
        columns: report.columns.clone(),
        rows: report.rows.clone(),
        checks: report.checks.clone(),
        pass: report.pass(),
        failures: report.failures(),
        run: RunInfo { wall_clock_seconds: elapsed, workers: opts.workers },
    };
    let files = write_outputs(&out_dir, &summary, &report.plots)?;
    Ok(Outcome { summary, out_dir, files })
}

/// Re-read a finished run.
pub fn report(dir: &Path) -> Result<Summary, CliError> {
    read_summary(dir)
}
