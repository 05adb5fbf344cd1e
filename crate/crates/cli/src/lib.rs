//! Command-line front end for `steerkit`.
//!
//! Exit codes: 0 success, 2 usage or invalid input, 3 solver failure,
//! 4 ambiguous threshold.

pub mod args;
pub mod commands;
pub mod output;
pub mod sweep;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// `report` is a JSON status document for stderr.
    Solver { message: String, report: Option<String> },
    Ambiguous(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Solver { .. } | CliError::Io(_) => 3,
            CliError::Ambiguous(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Ambiguous(m) | CliError::Io(m) => f.write_str(m),
            CliError::Solver { message, .. } => f.write_str(message),
        }
    }
}

impl From<steerkit::Error> for CliError {
    fn from(e: steerkit::Error) -> Self {
        use steerkit::Error as E;
        match e {
            E::InvalidArgument(_) | E::UnsupportedDimension(_) => CliError::Usage(e.to_string()),
            E::AmbiguousThreshold { .. } => CliError::Ambiguous(e.to_string()),
            E::NumericFailure(_) | E::Internal(_) => {
                let report = serde_json::json!({ "status": "numeric-failure", "error": e.to_string() });
                CliError::Solver { message: e.to_string(), report: Some(report.to_string()) }
            }
        }
    }
}

/// Runs one command; the returned text goes to stdout.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Sw(a) => commands::cmd_sw(a),
        Command::Pstar(a) => commands::cmd_pstar(a),
        Command::Surface(a) => sweep::cmd_surface(a),
        Command::Analytic(a) => commands::cmd_analytic(a),
        Command::Losscurve(a) => sweep::cmd_losscurve(a),
        Command::Mub(a) => commands::cmd_mub(a),
        Command::SolveSdp(a) => commands::cmd_solve_sdp(a),
    }
}
