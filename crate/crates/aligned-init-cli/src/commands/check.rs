//! `check`: validate a stored matrix against the membership conditions.

use aligned_init::init::validate_membership;

use crate::cli::CheckArgs;
use crate::error::CliError;
use crate::matrix_io::read_matrix;

pub fn run(args: &CheckArgs) -> Result<u8, CliError> {
    let w = read_matrix(&args.path)?;
    let report = validate_membership(&w, args.tol);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(u8::from(!report.passes))
}
