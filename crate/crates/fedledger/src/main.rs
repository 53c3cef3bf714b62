use std::error::Error;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fedledger::ledger::{validate_chain, Chain, ChainStatus};
use fedledger::orchestrator::{
    run_sweep, run_to_dir, trend_csv, write_sweep, ExperimentConfig, OutputFormat, StopReason,
};

#[derive(Parser)]
#[command(
    name = "fedledger",
    version,
    about = "Federated learning rounds over a simulated permissioned ledger"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write ledger, metrics, and summary artifacts.
    ///
    /// Exits 0 when the accuracy target was reached and 3 when the round
    /// limit stopped the run first.
    Run {
        /// JSON experiment config; field names match ExperimentConfig.
        #[arg(long)]
        config: PathBuf,
        /// Master seed for this run; overrides the config's master_seed.
        #[arg(long)]
        seed: u64,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Validate a ledger file; exits 0 iff every block checks out.
    VerifyChain {
        #[arg(long)]
        ledger: PathBuf,
    },
    /// Run the accuracy-versus-epsilon matrix and write the trend table.
    ///
    /// A non-private baseline arm is always included. Each arm runs the
    /// seeds master_seed..master_seed+n from the config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated epsilon values, e.g. 4.03,1.18,0.522
        #[arg(long, value_delimiter = ',', required = true)]
        epsilons: Vec<f64>,
        /// Number of seeds per arm.
        #[arg(long)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, Box<dyn Error>> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| format!("cannot parse config {}: {e}", path.display()))?;
    Ok(cfg)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Box<dyn Error>> {
    match cli.command {
        Command::Run { config, seed, out, format } => {
            let mut cfg = load_config(&config)?;
            cfg.master_seed = seed;
            let outcome = run_to_dir(&cfg, &out, format.into())?;
            println!(
                "{} after {} rounds: accuracy {:.4}, loss {:.4}, {} blocks, artifacts in {}",
                outcome.stop,
                outcome.summary.rounds_completed,
                outcome.summary.final_accuracy,
                outcome.summary.final_global_loss,
                outcome.summary.chain_blocks,
                out.display()
            );
            Ok(match outcome.stop {
                StopReason::TargetReached => ExitCode::SUCCESS,
                StopReason::LimitReached => ExitCode::from(3),
            })
        }
        Command::VerifyChain { ledger } => {
            let bytes = fs::read(&ledger)
                .map_err(|e| format!("cannot read ledger {}: {e}", ledger.display()))?;
            match Chain::from_jsonl(&bytes) {
                Err(e) => {
                    println!("invalid: {e}");
                    Ok(ExitCode::from(1))
                }
                Ok(chain) => match validate_chain(&chain) {
                    ChainStatus::Valid => {
                        println!("valid: {} blocks", chain.len());
                        Ok(ExitCode::SUCCESS)
                    }
                    ChainStatus::Invalid { index, reason } => {
                        println!("invalid: block {index} failed the {reason} check");
                        Ok(ExitCode::from(1))
                    }
                },
            }
        }
        Command::Sweep { config, epsilons, seeds, out } => {
            let cfg = load_config(&config)?;
            let report = run_sweep(&cfg, &epsilons, seeds)?;
            write_sweep(&report, &out)?;
            print!("{}", trend_csv(&report));
            Ok(ExitCode::SUCCESS)
        }
    }
}
