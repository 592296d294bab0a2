use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pmfix::scenario::{self, Command};

/// Fixed-point toolkit for ordered partial metric spaces.
#[derive(Parser)]
#[command(name = "pmfix", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file (or the name of a bundled scenario).
    Run {
        scenario: PathBuf,
        /// Output directory; defaults to the scenario's `output_dir` or
        /// `pmfix-out/<scenario name>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List bundled metrics, control pairs, maps, systems and kernels.
    List,
    /// Print the JSON schema of a command's payload.
    Schema {
        /// One of check-axioms, verify-contraction, fixed-point, hausdorff,
        /// ifs, integral.
        command: String,
    },
}

fn configure_threads() {
    let Ok(raw) = std::env::var("PMFIX_THREADS") else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(0) => {}
        Ok(n) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: could not set thread count: {e}");
            }
        }
        Err(_) => eprintln!("warning: ignoring PMFIX_THREADS={raw:?}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match cli.command {
        Cmd::Run { scenario, out, seed } => match scenario::run_file(&scenario, out.as_deref(), seed) {
            Ok(outcome) => {
                println!("{}: {}", outcome.command.name(), outcome.summary);
                println!("artifacts in {}", outcome.output_dir.display());
                if outcome.violation {
                    println!("result: VIOLATION");
                }
                ExitCode::from(outcome.exit_code())
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Cmd::List => {
            print!("{}", scenario::list_builtins());
            ExitCode::SUCCESS
        }
        Cmd::Schema { command } => match Command::from_name(&command) {
            Ok(c) => {
                let text = serde_json::to_string_pretty(&scenario::payload_schema(c)).expect("schema serializes");
                println!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
