mod args;
mod commands;
mod error;
mod setup;
mod table;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    let common = cli.command.common().clone();
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(CliError::BadInput("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::BadInput(format!("thread pool: {e}")))?;
    }
    let out = common.out.as_deref();
    match &cli.command {
        Command::Sweep(a) => commands::sweep(a)?.emit(common.format, out),
        Command::PhaseBoundary(a) => {
            let (table, summary) = commands::phase_boundary(a)?;
            eprintln!("{summary}");
            table.emit(common.format, out)
        }
        Command::PhotonDist(a) => {
            let (table, notes) = commands::photon_dist(a)?;
            for n in notes {
                eprintln!("{n}");
            }
            table.emit(common.format, out)
        }
        Command::Spectrum(a) => commands::spectrum(a)?.emit(common.format, out),
        Command::Validate(a) => {
            let (table, lines, ok) = commands::validate(a);
            for l in &lines {
                println!("{l}");
            }
            if out.is_some() {
                table.emit(common.format, out)?;
            }
            if ok {
                Ok(())
            } else {
                Err(CliError::ValidationFailed("one or more checks failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let merged = match args::merge_config(raw) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("sacs: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(merged) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sacs: {e}");
            e.exit_code()
        }
    }
}
