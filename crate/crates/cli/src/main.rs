//! `rghl` command-line front end.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;
use config::Overrides;

#[derive(Parser)]
#[command(name = "rghl", version, about = "Hybrid genetic / surrogate optimizer and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write traces, curves, summary and manifest.
    Run(RunArgs),
    /// Like `run`, then print a leaderboard and paired improvements.
    Compare(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run-config JSON file.
    config: PathBuf,
    /// Output directory [file `out`, then $RGHL_OUT, then ./rghl-out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; repeat i uses seed + i for every strategy.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (args, compare) = match cli.command {
        Command::Run(a) => (a, false),
        Command::Compare(a) => (a, true),
    };
    let overrides = Overrides {
        out: args.out,
        seed: args.seed,
        repeats: args.repeats,
        jobs: args.jobs,
    };
    let outcome = config::load(&args.config, &overrides)
        .and_then(|cfg| commands::check_out(&cfg.out).map(|()| cfg))
        .map_err(Failure::Config)
        .and_then(|cfg| if compare { commands::cmd_compare(cfg) } else { commands::cmd_run(cfg) });
    match outcome {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
