//! Command-line driver wiring the toolkit into reproducible experiments.
//!
//! Every run writes a `run.cfg` echo of all resolved parameters (defaults
//! included) into its output directory, so each experiment replays from
//! that file alone. Exit codes: 0 success, 1 usage error, 2 data/format
//! error, 3 numeric failure.

mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use dics_core::Error;

use commands::{Cli, Command};

fn error_exit_code(err: &Error) -> u8 {
    match err {
        Error::Numeric(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits; everything else is a
            // usage error.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let threads = std::env::var("DICS_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .or(cli.threads);
    if let Some(threads) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("dics: could not configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }

    let result = match &cli.command {
        Command::GenData(args) => commands::gen_data(args),
        Command::Train(args) => commands::train(args),
        Command::Recover(args) => commands::recover(args),
        Command::Eval(args) => commands::eval(args),
        Command::Bench(args) => commands::bench(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("dics: {e}");
            ExitCode::from(error_exit_code(&e))
        }
    }
}
