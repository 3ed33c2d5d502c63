use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fedmoo::cli::{self, CliError, Overrides};

#[derive(Parser)]
#[command(name = "fedmoo", version, about = "Scalarized decentralized multi-objective training: experiment sweeps, convergence-bound checks, Pareto oracles")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Worker thread count (overrides the THREADS environment variable).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the λ × seed experiment sweep from a JSON config.
    Run {
        config: PathBuf,
        /// Replace the config's seed list with a single seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo check of the rate and drift bounds per λ.
    CheckBounds {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid Pareto front oracle and weak-Pareto certificates (1–2D).
    Pareto {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the header of an IDX file.
    ParseIdx { file: PathBuf },
}

fn read_config(path: &PathBuf) -> Result<cli::ExperimentConfig, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(path.display().to_string(), e))?;
    cli::validate_config(&raw)
}

fn configure_threads(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
    });
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn execute(args: Args) -> Result<(), CliError> {
    configure_threads(args.threads);
    match args.command {
        Command::Run { config, seed, out } => {
            let cfg = read_config(&config)?;
            let summary = cli::run_experiment(&cfg, &Overrides { seed, out })?;
            for o in &summary.outcomes {
                println!(
                    "lambda={} seed={} status={}{}",
                    o.lambda,
                    o.seed,
                    match o.status {
                        cli::CellStatus::Ok => "ok",
                        cli::CellStatus::Diverged => "diverged",
                        cli::CellStatus::DegenerateAccuracy => "degenerate_accuracy",
                    },
                    o.test_accuracy
                        .map(|a| format!(" test_accuracy={a:.4}"))
                        .unwrap_or_default()
                );
            }
            println!("summary: {}", summary.summary_path.display());
            Ok(())
        }
        Command::CheckBounds { config, seed, out } => {
            let cfg = read_config(&config)?;
            let reports = cli::run_check_bounds(&cfg, &Overrides { seed, out })?;
            let all_ok = reports.iter().all(|(_, r)| r.satisfied);
            println!(
                "{} of {} lambda values satisfied both bounds",
                reports.iter().filter(|(_, r)| r.satisfied).count(),
                reports.len()
            );
            if !all_ok {
                eprintln!("warning: at least one bound violated; see the JSON reports");
            }
            Ok(())
        }
        Command::Pareto { config, out } => {
            let cfg = read_config(&config)?;
            let outcomes = cli::run_pareto(&cfg, &Overrides { seed: None, out })?;
            for o in &outcomes {
                println!("lambda={}: argmin {:?} is {:?}", o.lambda, o.argmin, o.status);
            }
            Ok(())
        }
        Command::ParseIdx { file } => {
            print!("{}", cli::parse_idx_dump(&file)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
