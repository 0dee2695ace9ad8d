mod args;
mod commands;
mod config;
mod error;
mod io;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use error::{CliError, EXIT_OK, EXIT_USAGE};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    if let Some(j) = cli.jobs {
        let pool = if j == 0 {
            Err(CliError::Usage("--jobs must be at least 1".into()))
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build_global()
                .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
        };
        if let Err(e) = pool {
            return ExitCode::from(commands::finish(Err(e)));
        }
    }
    ExitCode::from(commands::finish(commands::run(cli.command)))
}
