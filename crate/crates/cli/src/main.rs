use std::process::ExitCode;

use boxlab_cli::{cli, commands, configure_threads, CliError};

fn run() -> Result<(), CliError> {
    configure_threads()?;
    match cli::parse(std::env::args_os())? {
        Ok(parsed) => commands::run(parsed),
        Err(help) => {
            print!("{help}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("boxlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
