mod commands;
mod failure;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Dial-a-ride planning with checkable, explainable search trees.
#[derive(Parser, Debug)]
#[command(name = "xmcts", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ScenarioDir {
    /// Directory searched for scenario names that are not paths.
    #[arg(long, env = "XMCTS_SCENARIO_DIR")]
    pub scenario_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run epochs headlessly, accepting every recommendation.
    Simulate {
        scenario: String,
        #[arg(long, default_value_t = 10)]
        epochs: u64,
        /// Replaces the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Writes one tree dump per planned epoch plus metrics.json.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        dir: ScenarioDir,
    },
    /// Model-check a formula against a tree dump.
    Check {
        dump: PathBuf,
        #[arg(long)]
        formula: String,
    },
    /// Plan one epoch and answer one query about it.
    Explain {
        scenario: String,
        /// `factual:passenger=1,action=dropoff,direction=late` or a JSON query object.
        #[arg(long)]
        query: String,
        /// Expansion budget for the query.
        #[arg(long)]
        budget: Option<u64>,
        /// Epoch to explain; earlier epochs apply their recommendations.
        #[arg(long, default_value_t = 0)]
        epoch: u64,
        #[command(flatten)]
        dir: ScenarioDir,
    },
    /// Run the session service until interrupted.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Persists session logs here and restores them on start.
        #[arg(long)]
        store_dir: Option<PathBuf>,
        #[command(flatten)]
        dir: ScenarioDir,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or_default().trim_start_matches("error: ");
            let failure = failure::Failure::user("usage", first);
            eprintln!("{}", failure.line());
            return failure.exit_code();
        }
    };
    let result = match cli.command {
        Command::Simulate { scenario, epochs, seed, out, dir } => {
            commands::simulate(&scenario, &dir, epochs, seed, out.as_deref())
        }
        Command::Check { dump, formula } => commands::check(&dump, &formula),
        Command::Explain { scenario, query, budget, epoch, dir } => {
            commands::explain(&scenario, &dir, &query, budget, epoch)
        }
        Command::Serve { port, host, store_dir, dir } => commands::serve(&host, port, store_dir, dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.line());
            failure.exit_code()
        }
    }
}
