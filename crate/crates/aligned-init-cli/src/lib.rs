//! Library half of the benchmark binary, exposed so integration tests can
//! drive the same code paths the executable does.

pub mod cli;
pub mod commands;
pub mod datasets;
pub mod error;
pub mod experiment;
pub mod matrix_io;

pub use cli::Cli;
pub use error::CliError;

/// Run a parsed invocation; the Ok value is the process exit code.
pub fn run(cli: &Cli) -> Result<u8, CliError> {
    commands::run(cli)
}
