use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use contact_split_cli::config::Config;
use contact_split_cli::{commands, exit, report, seed_from_env, CliError};

/// Displacement-force splitting solvers for frictionless contact.
#[derive(Parser)]
#[command(name = "contact-split", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one case; writes summary.txt, trace.csv, lambda.vec, u.vec, accuracy.txt.
    Solve {
        config: PathBuf,
        /// Output directory (default: [output] dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the [sweep] grid; writes sweep.csv.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: [sweep] jobs).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compare against the oracles; exit 1 on a threshold violation.
    Validate {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gnuplot scripts and data files from trace or sweep CSVs.
    Report {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
    /// Write the configured problem as a bundle directory.
    Gen {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: &Path) -> Result<Config, CliError> {
    Ok(Config::load(config, seed_from_env()?)?)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.cmd {
        Cmd::Solve { config, out } => {
            let cfg = load(&config)?;
            commands::solve(&cfg, out.as_ref().unwrap_or(&cfg.out_dir))
        }
        Cmd::Sweep { config, out, jobs } => {
            let cfg = load(&config)?;
            commands::sweep(&cfg, out.as_ref().unwrap_or(&cfg.out_dir), jobs)
        }
        Cmd::Validate { config, out } => {
            let cfg = load(&config)?;
            commands::validate(&cfg, out.as_ref().unwrap_or(&cfg.out_dir))
        }
        Cmd::Report { csv, out } => {
            for f in report::report(&csv, &out)? {
                println!("{}", f.display());
            }
            Ok(exit::CONVERGED)
        }
        Cmd::Gen { config, out } => {
            let cfg = load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.out_dir.join("bundle"));
            commands::gen(&cfg, &dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match run(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
