use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use steerkit_cli::args::Cli;
use steerkit_cli::{run, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            match &e {
                CliError::Solver { report: Some(report), .. } => eprintln!("{report}"),
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
