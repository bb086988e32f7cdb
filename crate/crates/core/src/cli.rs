//! Command-line interface.
//!
//! Exit codes: 0 success, 2 invalid input, 3 simulation failure, 1 for I/O
//! errors while writing outputs.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::evolve::{run_evolution, EvolutionConfig};
use crate::platform::Platform;
use crate::scenario::output::write_atomic;
use crate::scenario::{hosts_csv, simulate, trace_csv, write_results, Format, ResultRow, RunError, RunOptions, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SIMULATION: i32 = 3;

/// Environment variable holding the log filter.
pub const LOG_ENV: &str = "FALAFELS_LOG";

#[derive(Debug, Parser)]
#[command(name = "fedsim", version, about = "Discrete-event simulator for federated learning deployments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one scenario on one platform.
    Run {
        #[arg(long)]
        platform: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Results file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: Format,
        /// Also write the event log next to the results.
        #[arg(long)]
        trace: bool,
    },
    /// Search for good deployments.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Check documents without simulating.
    Validate {
        #[arg(long)]
        platform: PathBuf,
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_INVALID, format!("cannot read {}: {e}", path.display())))
}

fn load_platform(path: &Path) -> Result<Platform, Failure> {
    Platform::from_json(&read(path)?).map_err(|e| fail(EXIT_INVALID, format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    Scenario::from_json(&read(path)?).map_err(|e| fail(EXIT_INVALID, format!("{}: {e}", path.display())))
}

/// `results.csv` -> `results.<suffix>`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}

fn cmd_run(
    platform_path: &Path,
    scenario_path: &Path,
    seed: u64,
    out: &Path,
    format: Format,
    trace: bool,
) -> Result<(), Failure> {
    let platform = load_platform(platform_path)?;
    let scenario = load_scenario(scenario_path)?;
    let report = simulate(&platform, &scenario, seed, RunOptions { trace }).map_err(|e| match e {
        RunError::Scenario(e) => fail(EXIT_INVALID, format!("{}: {e}", scenario_path.display())),
        RunError::Sim(e) => fail(EXIT_SIMULATION, format!("simulation failed: {e}")),
    })?;
    let stem = scenario_path.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
    let row = ResultRow {
        run_id: format!("{stem}-{seed}"),
        topology: scenario.topology,
        aggregator: scenario.aggregator,
        n_hosts: platform.hosts().len(),
        result: report.result,
    };
    let io = |e: crate::scenario::output::WriteError| fail(EXIT_IO, e.to_string());
    write_results(std::slice::from_ref(&row), out, format).map_err(io)?;
    if format == Format::Csv {
        write_atomic(&sibling(out, "hosts.csv"), &hosts_csv(&row.result, &platform)).map_err(io)?;
    }
    if let Some(records) = &report.trace {
        write_atomic(&sibling(out, "trace.csv"), &trace_csv(records)).map_err(io)?;
    }
    println!(
        "sim_time={:.6}s energy_total={:.3}J rounds={} messages={}",
        row.result.sim_time, row.result.energy_total, row.result.rounds_completed, row.result.messages_sent
    );
    Ok(())
}

fn cmd_evolve(config_path: &Path, out_dir: &Path) -> Result<(), Failure> {
    let cfg = EvolutionConfig::from_json(&read(config_path)?)
        .map_err(|e| fail(EXIT_INVALID, format!("{}: {e}", config_path.display())))?;
    let run = run_evolution(&cfg).map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
    for row in &run.history {
        println!(
            "gen {:>3} {:<26} best {}={:.6} hosts={} gflops={:.1}",
            row.generation,
            row.group,
            cfg.criterion.as_str(),
            row.best_criterion,
            row.n_hosts,
            row.total_gflops
        );
    }
    run.write(&cfg, out_dir).map_err(|e| fail(EXIT_IO, e.to_string()))
}

fn cmd_validate(platform_path: &Path, scenario_path: Option<&Path>) -> Result<(), Failure> {
    let platform = load_platform(platform_path)?;
    if let Some(path) = scenario_path {
        let scenario = load_scenario(path)?;
        scenario.plan(&platform).map_err(|e| fail(EXIT_INVALID, format!("{}: {e}", path.display())))?;
    }
    println!("ok");
    Ok(())
}

/// Parses `args` (program name first) and executes the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Run { platform, scenario, seed, out, format, trace } => {
            cmd_run(platform, scenario, *seed, out, *format, *trace)
        }
        Command::Evolve { config, out_dir } => cmd_evolve(config, out_dir),
        Command::Validate { platform, scenario } => cmd_validate(platform, scenario.as_deref()),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Installs the logger, reading the filter from [`LOG_ENV`].
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).try_init();
}
