// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use args::{Cli, Command, THREADS_ENV};
use commands::Ctx;
use error::{CliError, CliResult};

fn thread_count(flag: Option<usize>) -> CliResult<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::input(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let threads = thread_count(cli.threads)?;
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::internal(e.to_string()))?;
    }
    let ctx = Ctx { quiet: cli.quiet };
    let outcome = match &cli.command {
        Command::Synth(a) => commands::synth(a, &ctx)?,
        Command::Detect(a) => commands::detect(a, &ctx)?,
        Command::Eval(a) => commands::eval(a, &ctx)?,
        Command::Quality(a) => commands::quality(a, &ctx)?,
        Command::Calibrate(a) => commands::calibrate(a, &ctx)?,
        Command::Steer(a) => commands::steer(a, &ctx)?,
    };
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "parallel": scalesteer::par::is_parallel(),
        "threads": threads,
        "args": cli,
        "resolved": outcome.resolved,
    });
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::internal(e.to_string()))?
        + "\n";
    match outcome.manifest {
        Some(p) => std::fs::write(&p, text)
            .map_err(|e| CliError::internal(format!("{}: {e}", p.display()))),
        None => {
            if !cli.quiet {
                eprint!("{text}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let argv = match config::merged_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    // clap exits with 2 on usage errors and 0 for --help.
    let cli = Cli::parse_from(argv);
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
