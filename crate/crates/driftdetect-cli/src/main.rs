//! The `driftdetect` binary: parses the command line, dispatches, and
//! reports failures as structured JSON on stderr.
//!
//! Exit codes: 0 success, 1 validation failure (bad flags, configuration,
//! or input data), 2 runtime failure (IO, serialisation).

use clap::error::ErrorKind;
use clap::Parser;

use driftdetect_cli::commands::{dispatch, Cli};
use driftdetect_cli::errors::CliError;

fn fail(err: &CliError) -> ! {
    match serde_json::to_string(err.report()) {
        Ok(json) => eprintln!("{json}"),
        Err(_) => eprintln!("{err}"),
    }
    std::process::exit(err.exit_code());
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return;
        }
        Err(e) => fail(&CliError::validation("cli", e.render())),
    };
    if let Err(e) = dispatch(&cli.command) {
        fail(&e);
    }
}
