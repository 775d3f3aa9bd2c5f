//! Report records and their on-disk forms: `results.csv`, `summary.json`
//! and `*.dat` plot data. Every file carries the config hash and seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => fmt_num(*v),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

pub fn verdict_cell(pass: bool) -> Cell {
    Cell::Text(if pass { "PASS" } else { "FAIL" }.to_string())
}

/// Shortest round-trip decimal; scientific notation outside `[1e-4, 1e15)`.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Points are written as `x` in 1-d and `x;y` in 2-d.
pub fn point_cell(x: &[f64]) -> Cell {
    if x.is_empty() {
        Cell::Empty
    } else {
        Cell::Text(x.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(";"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plot {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Everything an experiment produces, before serialization.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub checks: Vec<Check>,
    pub analytic: BTreeMap<String, Json>,
    pub plots: Vec<Plot>,
}

impl Report {
    pub fn with_columns(columns: &[&str]) -> Self {
        Report { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), pass, detail });
    }

    pub fn note(&mut self, key: &str, value: impl Into<Json>) {
        self.analytic.insert(key.to_string(), value.into());
    }

    fn failing_rows(&self) -> usize {
        let Some(col) = self.columns.iter().position(|c| c == "verdict") else { return 0 };
        self.rows.iter().filter(|r| matches!(&r[col], Cell::Text(s) if s == "FAIL")).count()
    }

    pub fn failures(&self) -> usize {
        self.failing_rows() + self.checks.iter().filter(|c| !c.pass).count()
    }

    pub fn pass(&self) -> bool {
        self.failures() == 0
    }
}

/// Header identifying the inputs behind a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub experiment: String,
    pub config_hash: String,
    pub master_seed: u64,
}

impl Provenance {
    fn comment(&self) -> String {
        format!("# config_hash={} master_seed={} experiment={}\n", self.config_hash, self.master_seed, self.experiment)
    }
}

/// SHA-256 of the canonical JSON echo of the resolved configuration.
pub fn config_hash(resolved: &BTreeMap<String, Json>) -> String {
    let canonical = serde_json::to_string(resolved).expect("config echo serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub wall_clock_seconds: f64,
    pub workers: usize,
}

/// Machine-readable record written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub config: BTreeMap<String, Json>,
    pub analytic: BTreeMap<String, Json>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub failures: usize,
    /// Execution details; the only part that may differ between reruns.
    pub run: RunInfo,
}

pub fn render_csv(prov: &Provenance, columns: &[String], rows: &[Vec<Cell>]) -> String {
    let mut s = prov.comment();
    s.push_str(&columns.join(","));
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(Cell::render).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn render_plot(prov: &Provenance, plot: &Plot) -> String {
    let mut s = prov.comment();
    s.push_str(&plot.columns.join(","));
    s.push('\n');
    for row in &plot.rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_num(*v)).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

/// Fails early if `dir` cannot be created or written.
pub fn ensure_writable(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let probe = dir.join(".noiseblow-write-test");
    fs::write(&probe, b"").map_err(|e| CliError::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| CliError::io(&probe, e))
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, CliError> {
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Write all output files and return their paths.
pub fn write_outputs(dir: &Path, summary: &Summary, plots: &[Plot]) -> Result<Vec<PathBuf>, CliError> {
    let prov = Provenance {
        experiment: summary.experiment.clone(),
        config_hash: summary.config_hash.clone(),
        master_seed: summary.master_seed,
    };
    let mut written = vec![write(dir.join(RESULTS_FILE), &render_csv(&prov, &summary.columns, &summary.rows))?];
    let json = serde_json::to_string_pretty(summary).expect("summary serializes") + "\n";
    written.push(write(dir.join(SUMMARY_FILE), &json)?);
    for plot in plots {
        written.push(write(dir.join(format!("{}.dat", plot.name)), &render_plot(&prov, plot))?);
    }
    Ok(written)
}

pub fn read_summary(dir: &Path) -> Result<Summary, CliError> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Report { path, reason: e.to_string() })
}
