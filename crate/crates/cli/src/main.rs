use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use noiseblow_cli::experiments::Mode;
use noiseblow_cli::output::{fmt_num, Cell, Summary};
use noiseblow_cli::error::CliError;
use noiseblow_cli::{report, run, RunOptions};

#[derive(Parser)]
#[command(name = "noiseblow", version, about = "Noise-induced blowup experiments for reaction-diffusion equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form quantities only; no sampling.
    Analytic(RunArgs),
    /// Monte Carlo under additive noise.
    SimulateAdditive(RunArgs),
    /// Monte Carlo under multiplicative noise.
    SimulateMultiplicative(RunArgs),
    /// Deterministic and random blowup times.
    BlowupTime(RunArgs),
    /// Parameter sweeps.
    Sweep(RunArgs),
    /// Print the verdicts of a finished run.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "NOISEBLOW_WORKERS", default_value_t = 0)]
    workers: usize,
    /// `key=value`, applied after the file. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn print_summary(s: &Summary) {
    println!("experiment {} (config_hash={} master_seed={})", s.experiment, s.config_hash, s.master_seed);
    if let Some(col) = s.columns.iter().position(|c| c == "verdict") {
        for row in &s.rows {
            if let Some(Cell::Text(v)) = row.get(col) {
                let cells: Vec<String> = row[..col]
                    .iter()
                    .map(|c| match c {
                        Cell::Num(x) => fmt_num(*x),
                        Cell::Text(t) => t.clone(),
                        Cell::Empty => "-".into(),
                    })
                    .collect();
                println!("  {v} {}", cells.join(" "));
            }
        }
    }
    for c in &s.checks {
        println!("  {} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("{} ({} failure(s))", if s.pass { "PASS" } else { "FAIL" }, s.failures);
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let (mode, args) = match cli.command {
        Command::Report { out } => {
            let s = report(&out)?;
            print_summary(&s);
            return Ok(s.pass);
        }
        Command::Analytic(a) => (Mode::Analytic, a),
        Command::SimulateAdditive(a) => (Mode::SimulateAdditive, a),
        Command::SimulateMultiplicative(a) => (Mode::SimulateMultiplicative, a),
        Command::BlowupTime(a) => (Mode::BlowupTime, a),
        Command::Sweep(a) => (Mode::Sweep, a),
    };
    let config_text = match &args.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.clone(), source: e })?,
        None => String::new(),
    };
    let opts = RunOptions { config_text, overrides: args.overrides, seed: args.seed, out: args.out, workers: args.workers };
    let outcome = run(mode, &opts)?;
    print_summary(&outcome.summary);
    println!("wrote {}", outcome.out_dir.display());
    Ok(outcome.summary.pass)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
