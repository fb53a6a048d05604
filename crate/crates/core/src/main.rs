use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ats_core::benchmarks;
use ats_core::harness::{self, BoSession, ExperimentConfig};
use ats_core::Result;

#[derive(Parser)]
#[command(name = "ats", version, about = "Batch Bayesian optimization experiments and ask/tell driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark experiment and write trace files.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `root_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `n_repetitions`.
        #[arg(long)]
        repetitions: Option<usize>,
    },
    /// Create an ask/tell state file from a config.
    Init {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the pending batch, proposing one if needed.
    Suggest {
        #[arg(long)]
        state: PathBuf,
    },
    /// Record evaluations of the pending batch.
    Update {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        results: PathBuf,
    },
    /// Built-in benchmark functions.
    Benchmarks {
        #[command(subcommand)]
        action: BenchmarksAction,
    },
}

#[derive(Subcommand)]
enum BenchmarksAction {
    List,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, out, repetitions } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.root_seed = seed;
            }
            if let Some(out) = out {
                cfg.output = Some(out);
            }
            if let Some(n) = repetitions {
                cfg.n_repetitions = n;
            }
            cfg.validate()?;
            let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("."));
            let trace = harness::run_experiment(&cfg)?;
            harness::write_outputs(&trace, &dir)?;
            for row in harness::aggregate(&trace) {
                println!(
                    "iter {:>3}  evals {:>4}  best {:.6} ± {:.6}  ok {} failed {}",
                    row.iter, row.evals, row.mean_best, row.se_best, row.n_ok, row.n_failed
                );
            }
            for rep in trace.repetitions.iter().filter_map(|r| r.failure.as_ref().map(|f| (r.rep, f))) {
                eprintln!("repetition {} failed at iteration {}: {}", rep.0, rep.1.iter, rep.1.message);
            }
            Ok(())
        }
        Command::Init { config, state, seed } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.root_seed = seed;
            }
            BoSession::new(cfg, 0)?.save(&state)
        }
        Command::Suggest { state } => {
            let pending = harness::suggest_file(&state)?;
            println!("{}", serde_json::to_string_pretty(&pending.points).expect("points serialize"));
            Ok(())
        }
        Command::Update { state, results } => {
            let session = harness::update_file(&state, &results)?;
            println!(
                "iteration {} of {}, {} evaluations, best {}",
                session.iteration,
                session.config.n_iterations,
                session.dataset.len(),
                session.dataset.best().map_or("-".into(), |b| b.to_string())
            );
            Ok(())
        }
        Command::Benchmarks { action: BenchmarksAction::List } => {
            for b in benchmarks::all() {
                println!("{:<12} d={}  min={}  bounds={:?}", b.name, b.dim(), b.min_value, b.bounds);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
