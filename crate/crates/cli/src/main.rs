//! `scvx`: solve builtin problems from JSON configs and report diagnostics.

mod bench;
mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use run::{PathOverrides, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "scvx", version, about = "Trust-region sequential convex programming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem described by a config file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Trace output, overriding the config.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Diagnostics report output, overriding the config.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run every `*.json` config in a directory and write one summary table.
    Bench {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run the point diagnostics on a saved solution.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve { config, trace, report } => {
            let outcome = run::solve(&config, &PathOverrides { trace, report });
            let row = &outcome.row;
            match (&row.status, &row.error) {
                (Some(status), _) => eprintln!(
                    "{}: {} after {} iterations, J = {:e}",
                    row.problem,
                    output::status_name(*status),
                    row.iterations.unwrap_or(0),
                    row.j_final.unwrap_or(f64::NAN)
                ),
                (None, Some(err)) => eprintln!("error: {err}"),
                (None, None) => {}
            }
            if let (Some(_), Some(err)) = (&row.status, &row.error) {
                eprintln!("error: {err}");
            }
            code(outcome.exit_code())
        }
        Command::Bench { dir, out } => match bench::bench(&dir, &out) {
            Ok(rows) => {
                let failed = rows.iter().filter(|r| r.exit_code != 0).count();
                eprintln!("{} runs, {} nonzero exit", rows.len(), failed);
                code(0)
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                code(EXIT_CONFIG)
            }
        },
        Command::Check { config, report } => {
            match run::check(&config, &PathOverrides { trace: None, report }) {
                Ok(c) => code(c),
                Err(f) => {
                    eprintln!("error: {}", f.message);
                    code(f.code)
                }
            }
        }
    }
}
