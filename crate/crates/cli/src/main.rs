use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use inflap_cli::{load_config, run, Overrides, EXIT_NOT_CONVERGED};

#[derive(Parser)]
#[command(
    name = "inflap",
    version,
    about = "Infinity-Laplacian and p-Laplacian solvers on lattice domains"
)]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Run the command named in a JSON config.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Ball radius (overrides `solver.eps`).
        #[arg(long)]
        eps: Option<f64>,
        /// Game start point, comma separated.
        #[arg(long, value_delimiter = ',')]
        start: Option<Vec<f64>>,
        #[arg(long)]
        runs: Option<usize>,
        /// greedy | random | dpp:<field.csv>
        #[arg(long)]
        max_strategy: Option<String>,
        /// greedy | random | dpp:<field.csv>
        #[arg(long)]
        min_strategy: Option<String>,
    },
    /// Parse and validate a config without running it.
    Check { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (path, overrides, dry) = match cli.action {
        Action::Run {
            config,
            seed,
            out_dir,
            eps,
            start,
            runs,
            max_strategy,
            min_strategy,
        } => (
            config,
            Overrides {
                seed,
                out_dir,
                eps,
                start,
                runs,
                max_strategy,
                min_strategy,
            },
            false,
        ),
        Action::Check { config } => (config, Overrides::default(), true),
    };
    let loaded = match load_config(&path, &overrides) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if dry {
        println!("{}: config ok", loaded.config.command);
        return ExitCode::SUCCESS;
    }
    match run(&loaded) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.converged {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_NOT_CONVERGED as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
