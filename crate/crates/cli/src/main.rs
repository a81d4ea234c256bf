//! `gfe`: estimate grouped fixed-effects models on a panel file, run Monte
//! Carlo studies, and fit the structural model by simulated moments.
//!
//! Exit codes: 0 success, 1 runtime or estimation error (with `error.json`
//! in the output directory), 2 configuration error.

mod config;
mod error;
mod estimate;
mod fit_model;
mod output;
mod simulate;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{load, Override, RunConfig};
use error::CliError;
use output::{OutputDir, Provenance};

/// Environment variable holding the worker-thread count.
const WORKERS_ENV: &str = "GFE_WORKERS";
/// Long flags clap owns; any other `--key=value` is a config override.
const OWN_FLAGS: [&str; 5] = ["out", "workers", "verbose", "help", "version"];

#[derive(Parser)]
#[command(name = "gfe", version, about = "Grouped fixed-effects estimation, simulation and structural fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate OLS, FE and GFE models on a panel file.
    Estimate(RunArgs),
    /// Run a Monte Carlo study on simulated panels.
    Simulate(RunArgs),
    /// Fit the behavioral model to target moments.
    FitModel(RunArgs),
}

/// Scalar config fields can be overridden with `--key.path=value`.
#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to GFE_WORKERS, then the config, then 1.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn split_overrides(args: impl IntoIterator<Item = String>) -> (Vec<String>, Vec<String>) {
    let mut plain = Vec::new();
    let mut overrides = Vec::new();
    for (i, a) in args.into_iter().enumerate() {
        let is_override = i > 0
            && a.strip_prefix("--")
                .and_then(|b| b.split_once('='))
                .is_some_and(|(k, _)| !OWN_FLAGS.contains(&k));
        if is_override {
            overrides.push(a);
        } else {
            plain.push(a);
        }
    }
    (plain, overrides)
}

fn workers(flag: Option<usize>, configured: Option<usize>) -> Result<usize, CliError> {
    let env = match std::env::var(WORKERS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::config(format!("{WORKERS_ENV}=`{v}` is not a worker count")))?,
        ),
        Err(_) => None,
    };
    let n = flag.or(env).or(configured).unwrap_or(1);
    if n == 0 {
        return Err(CliError::config("worker count must be positive"));
    }
    Ok(n)
}

fn execute<C: RunConfig>(
    args: &RunArgs,
    overrides: &[Override],
    out_hint: &mut Option<PathBuf>,
    body: fn(&C, &mut OutputDir) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let mut loaded = load::<C>(&args.config, overrides, args.out.as_deref())?;
    let out_path = loaded.config.output_dir().clone();
    *out_hint = Some(out_path.clone());
    let n = workers(args.workers, loaded.config.workers())?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("cannot start {n} workers: {e}")))?;
    let mut out = OutputDir::create(
        &out_path,
        Provenance {
            command: C::COMMAND,
            config_hash: loaded.hash.clone(),
            seed: loaded.seed,
            version: env!("CARGO_PKG_VERSION"),
        },
    )?;
    let stale = out_path.join("error.json");
    if stale.exists() {
        let _ = std::fs::remove_file(stale);
    }
    body(&loaded.config, &mut out)?;
    let files = out.finish()?;
    eprintln!("wrote {} files to {}", files.len() + 1, out_path.display());
    Ok(())
}

fn write_error(dir: &Path, err: &CliError) {
    let report = err.report();
    if std::fs::create_dir_all(dir).is_ok() {
        if let Ok(text) = serde_json::to_string_pretty(&report) {
            let _ = std::fs::write(dir.join("error.json"), text + "\n");
        }
    }
}

fn main() -> ExitCode {
    let (plain, raw_overrides) = split_overrides(std::env::args());
    let cli = match Cli::try_parse_from(plain) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (Command::Estimate(args) | Command::Simulate(args) | Command::FitModel(args)) = &cli.command;
    let level = match args.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    let mut out_hint = args.out.clone();
    let result = raw_overrides
        .iter()
        .map(|o| Override::parse(o))
        .collect::<Result<Vec<_>, _>>()
        .and_then(|overrides| match &cli.command {
            Command::Estimate(a) => execute(a, &overrides, &mut out_hint, estimate::run),
            Command::Simulate(a) => execute(a, &overrides, &mut out_hint, simulate::run),
            Command::FitModel(a) => execute(a, &overrides, &mut out_hint, fit_model::run),
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(dir) = &out_hint {
                write_error(dir, &e);
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_are_split_from_own_flags() {
        let args = ["gfe", "simulate", "c.json", "--out=x", "--study.dgp.n=5", "--seed=3", "--workers", "2"]
            .map(String::from);
        let (plain, o) = split_overrides(args);
        assert_eq!(plain, ["gfe", "simulate", "c.json", "--out=x", "--workers", "2"]);
        assert_eq!(o, ["--study.dgp.n=5", "--seed=3"]);
    }
}
