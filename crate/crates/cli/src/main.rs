use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use saddle_oco::config::RunConfig;
use saddle_oco::experiment::{self, Manifest};
use saddle_oco::{Error, Result};

/// Decentralized online optimization with pairwise constraints over lossy links.
#[derive(Debug, Parser)]
#[command(name = "saddle-oco", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every scenario and seed of a config (or of a previous run's manifest.json).
    Run {
        config: PathBuf,
        /// Output directory; overrides the config and the environment.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print omega, gamma, the admissible delta interval and the minimal horizon.
    DeriveParams { config: PathBuf },
    /// Check a config and report every problem found.
    Validate { config: PathBuf },
    /// Write the communication graph as an edge list.
    DumpGraph {
        config: PathBuf,
        /// Destination file; standard output if omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<RunConfig> {
    if path.extension().is_some_and(|e| e == "json") {
        let manifest = Manifest::load(path)?;
        manifest.config.validate()?;
        Ok(manifest.config)
    } else {
        RunConfig::load(path)
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Parse { .. } | Error::BetaOutOfRange { .. } | Error::Json(_) => 2,
        Error::HorizonTooShort { .. } => 3,
        Error::Benchmark(_) => 4,
        _ => 1,
    }
}

fn fmt_interval(interval: Option<(f64, f64)>) -> String {
    match interval {
        Some((lo, hi)) => format!("[{lo}, {hi}]"),
        None => "empty".into(),
    }
}

fn derive(config: &RunConfig) -> Result<()> {
    let graph = experiment::build_graph(config)?;
    println!("scenario,seed,omega,gamma,beta,delta_interval,min_horizon,horizon");
    for &seed in &config.seeds {
        let constants = match config.experiment {
            saddle_oco::config::ExperimentKind::Qcqp => {
                experiment::problem_constants(config, experiment::qcqp_problem(config, &graph, seed)?, seed)
            }
            saddle_oco::config::ExperimentKind::Logistic => {
                experiment::problem_constants(config, experiment::logistic_problem(config, &graph, seed)?, seed)
            }
        };
        for scenario in &config.scenarios {
            let probs = experiment::scenario_probabilities(&graph, scenario, seed)?;
            let report = experiment::theory_report(config, &graph, &constants, &probs)?;
            println!(
                "{},{},{},{},{},\"{}\",{},{}",
                scenario.label(),
                seed,
                report.coupling.omega,
                report.coupling.gamma,
                report.coupling.beta,
                fmt_interval(report.delta_interval),
                report.min_horizon,
                config.horizon
            );
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, output } => {
            let config = load(&config)?;
            let dir = output.unwrap_or_else(|| experiment::output_dir(&config));
            let manifest = experiment::run_experiment(&config, &dir)?;
            eprintln!(
                "{} runs written to {} in {:.1} s",
                manifest.runs.len(),
                dir.display(),
                manifest.wall_clock_seconds
            );
            Ok(())
        }
        Command::DeriveParams { config } => derive(&load(&config)?),
        Command::Validate { config } => {
            let config = load(&config)?;
            experiment::build_graph(&config)?;
            println!("ok: {} scenarios x {} seeds", config.scenarios.len(), config.seeds.len());
            Ok(())
        }
        Command::DumpGraph { config, output } => {
            let graph = experiment::build_graph(&load(&config)?)?;
            match output {
                Some(path) => graph.save(&path),
                None => {
                    print!("{}", graph.to_edge_list());
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
