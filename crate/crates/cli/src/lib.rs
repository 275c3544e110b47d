//! Command-line front end for the `qmetric` engine.

pub mod args;
pub mod commands;
pub mod error;
pub mod output;
pub mod verify;

pub use args::{Cli, Command};
pub use error::{exit, CliError};

/// Runs a parsed command and returns its exit status.
pub fn run(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Metric(a) => commands::cmd_metric(a),
        Command::Curvature(a) => commands::cmd_curvature(a),
        Command::Grid(a) => commands::cmd_grid(a),
        Command::VerifyPaper(a) => verify::cmd_verify(a),
        Command::Parse(a) => commands::cmd_parse(a),
    }
}
