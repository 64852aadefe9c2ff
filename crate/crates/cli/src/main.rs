//! `teamdp`: solve, check and simulate finite team decision problems from
//! JSON scenario files.

mod commands;
mod error;
mod report;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde_json::json;

use crate::error::CliError;
use crate::report::{to_json, CommandInfo, ErrorReport, Report};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Check a scenario file against every model and structure invariant.
    Validate,
    /// Solve the manager's program on the reachable belief tree.
    SolveManager,
    /// Solve one member's program against the manager-induced co-strategy.
    SolveMember,
    /// Exhaustive minimum over centralized history tables.
    OracleCentralized,
    /// Exhaustive minimum over per-member view tables.
    OracleDecentralized,
    /// Manager versus member solutions plus the decentralized optimum.
    Compare,
    /// Monte Carlo cost of the manager's strategy.
    Simulate,
    /// The two-member linear-Gaussian example in closed form.
    GaussianExample,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "teamdp", version, about = "Exact dynamic programming for finite team decision problems")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// 0-based member index (solve-member).
    #[arg(long)]
    pub member: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub node_budget: Option<usize>,
    /// Cap on the number of candidate tables for the exhaustive oracles.
    #[arg(long)]
    pub enumeration_budget: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Covariance of the two initial observations (gaussian-example).
    #[arg(long, allow_negative_numbers = true)]
    pub covariance: Option<f64>,
    /// `a0:a1:step,b0:b1:step,d0:d1:step` (gaussian-example).
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Add wall-clock time to the diagnostics. Off by default so that reports
    /// are byte-identical across runs.
    #[arg(long)]
    pub timing: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let info = CommandInfo {
                name: "unknown".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                scenario_hash: None,
                seed: None,
                parameters: Default::default(),
            };
            let err = CliError::Usage(e.to_string());
            print!("{}", to_json(&ErrorReport::new(&info, &err)));
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    let (text, code) = run(&cli);
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code as u8)
}

fn run(cli: &Cli) -> (String, i32) {
    let mut info = CommandInfo {
        name: cli.command.to_possible_value().expect("no skipped variants").get_name().to_string(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario_hash: None,
        seed: None,
        parameters: Default::default(),
    };
    let started = Instant::now();
    let result = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Solver(e.to_string()))
            .and_then(|pool| pool.install(|| commands::dispatch(cli, &mut info))),
        None => commands::dispatch(cli, &mut info),
    };
    match result {
        Ok(out) => {
            let mut diagnostics = out.diagnostics;
            if cli.timing {
                diagnostics.insert("wall_time_ms".into(), json!(started.elapsed().as_secs_f64() * 1e3));
            }
            let text = match (cli.format, out.table) {
                (Format::Json, _) => Ok(to_json(&Report {
                    command: info.clone(),
                    results: out.results,
                    diagnostics,
                })),
                (Format::Csv, Some((header, rows))) => report::to_csv(&header, &rows),
                (Format::Csv, None) => Err(CliError::Usage(format!("{} has no CSV output", info.name))),
            };
            match text {
                Ok(text) => (text, out.exit_code),
                Err(e) => (to_json(&ErrorReport::new(&info, &e)), e.exit_code()),
            }
        }
        Err(e) => (to_json(&ErrorReport::new(&info, &e)), e.exit_code()),
    }
}
