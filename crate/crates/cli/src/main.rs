use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gausspath_cli::commands::{self, Failure, SimulateArgs};
use gausspath_cli::config::{self, RunFile};

#[derive(Debug, Parser)]
#[command(
    name = "gausspath",
    version,
    about = "Monte Carlo over smooth Gaussian-basis paths and gauge fields"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run an ensemble and write CSVs, checkpoints and a manifest
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads; results do not depend on it
        #[arg(long)]
        threads: Option<usize>,
        /// Continue from the checkpoints in --out
        #[arg(long)]
        resume: bool,
        /// Validate the config and print derived sizes without running
        #[arg(long)]
        dry_run: bool,
    },
    /// Summarize one run directory or a directory of runs
    Report {
        dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare every closed form against quadrature
    Oracle {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write oracle.csv here
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: Option<&PathBuf>) -> Result<RunFile, Failure> {
    let seed = match std::env::var("GAUSSPATH_SEED") {
        Ok(s) => Some(
            s.trim()
                .parse::<u64>()
                .map_err(|e| Failure::Usage(format!("GAUSSPATH_SEED=`{s}`: {e}")))?,
        ),
        Err(_) => None,
    };
    let (text, name) = match path {
        Some(p) => (
            std::fs::read_to_string(p)
                .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
            p.display().to_string(),
        ),
        None => (String::new(), "<defaults>".to_string()),
    };
    config::parse(&text, seed).map_err(|e| match e.line {
        Some(l) => Failure::Usage(format!("{name}:{l}: {}", e.msg)),
        None => Failure::Usage(format!("{name}: {}", e.msg)),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut stdout = std::io::stdout();
    match cli.cmd {
        Cmd::Simulate {
            config,
            out,
            threads,
            resume,
            dry_run,
        } => {
            let run = load(Some(&config))?;
            let threads = threads
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            if threads == 0 {
                return Err(Failure::Usage("--threads must be at least 1".into()));
            }
            commands::simulate(
                &SimulateArgs {
                    run: &run,
                    out: &out,
                    threads,
                    resume,
                    dry_run,
                },
                &mut stdout,
            )
        }
        Cmd::Report { dir, out } => {
            let dir = dir
                .or(out)
                .ok_or_else(|| Failure::Usage("report needs a run directory".into()))?;
            commands::report(&dir, &mut stdout)
        }
        Cmd::Oracle { config, out } => {
            let run = load(config.as_ref())?;
            commands::oracle(&run, out.as_deref(), &mut stdout).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code() as u8)
        }
    }
}
