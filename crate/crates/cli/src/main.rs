//! `uccvqe`: ground and excited-state UCC VQE runs, potential-energy scans
//! and resource tables from the command line.

mod config;
mod pipeline;
mod scan;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use uccvqe::{scaling_report, AnsatzKind};

use config::{RunArgs, RunConfig};
use pipeline::Failure;
use scan::ScanArgs;

#[derive(Debug, Parser)]
#[command(name = "uccvqe", version, about = "Unitary coupled-cluster VQE checked against exact diagonalization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ground-state VQE; writes a JSON report.
    Ground(RunArgs),
    /// Ground state, then the first excited state with an overlap penalty.
    Excited(RunArgs),
    /// Every point of a manifest; writes a CSV curve and a JSON summary.
    Scan(ScanArgs),
    /// Term and layer counts over system sizes, as CSV.
    Resources(ResourcesArgs),
}

#[derive(Debug, Args)]
struct ResourcesArgs {
    #[arg(long, value_parser = config::parse_kind, default_value = "kupccgsd")]
    ansatz: AnsatzKind,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Comma-separated `N:ETA` pairs, e.g. "8:4,12:6,16:8".
    #[arg(long, value_name = "LIST")]
    sizes: String,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn parse_sizes(text: &str) -> anyhow::Result<Vec<(usize, usize)>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (n, eta) = pair
                .split_once(':')
                .ok_or_else(|| anyhow!("size {pair:?} is not of the form N:ETA"))?;
            Ok((
                n.trim().parse().with_context(|| format!("size {pair:?}"))?,
                eta.trim().parse().with_context(|| format!("size {pair:?}"))?,
            ))
        })
        .collect()
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .context("writing to stdout")?,
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    Ok(serde_json::to_string_pretty(value).context("serializing report")? + "\n")
}

#[cfg(feature = "parallel")]
fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building thread pool")?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn with_pool<T: Send>(_jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    Ok(f())
}

fn single(args: &RunArgs, excited: bool) -> Result<u8, Failure> {
    let (merged, _, points) = config::load(args, excited)?;
    if !points.is_empty() {
        return Err(anyhow!("point entries are only valid in scan manifests").into());
    }
    let config = RunConfig::from_args(&merged, excited, true)?;
    let source = config.source.clone().expect("source is required");
    let command = if excited { "excited" } else { "ground" };
    let report = with_pool(config.jobs, || pipeline::run(&config, &source, command))??;
    emit(config.out.as_deref(), &to_json(&report)?)?;
    if report.converged {
        Ok(0)
    } else {
        eprintln!("warning: no restart converged; report written with converged = false");
        Ok(2)
    }
}

fn run_scan(args: &ScanArgs) -> Result<u8, Failure> {
    let jobs = args.run.jobs.unwrap_or(0);
    let (config, csv, summary) = with_pool(jobs, || scan::scan(args))??;
    emit(config.out.as_deref(), &csv)?;
    if let Some(out) = &config.out {
        let path = scan::summary_path(out);
        std::fs::write(&path, to_json(&summary)?).with_context(|| format!("writing {}", path.display()))?;
    }
    if summary.converged_points == summary.total_points {
        Ok(0)
    } else {
        eprintln!(
            "warning: {} of {} points did not converge",
            summary.total_points - summary.converged_points,
            summary.total_points
        );
        Ok(2)
    }
}

fn run_resources(args: &ResourcesArgs) -> Result<u8, Failure> {
    let sizes = parse_sizes(&args.sizes)?;
    let report = scaling_report(args.ansatz, args.k, &sizes)?;
    emit(args.out.as_deref(), &report.to_csv())?;
    Ok(0)
}

fn dispatch(command: &Command) -> Result<u8, Failure> {
    match command {
        Command::Ground(args) => single(args, false),
        Command::Excited(args) => single(args, true),
        Command::Scan(args) => run_scan(args),
        Command::Resources(args) => run_resources(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(parse_sizes("8:4, 12:6").unwrap(), vec![(8, 4), (12, 6)]);
        assert!(parse_sizes("8-4").is_err());
    }

    #[test]
    fn cli_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
