//! `gen`: draw one weight matrix and report its membership residuals.

use std::str::FromStr;

use aligned_init::init::{
    generate_alg1, generate_alg2, generate_baseline, validate_membership, InitializerSpec,
};
use aligned_init::RngStream;

use crate::cli::{Cli, GenArgs};
use crate::error::CliError;
use crate::matrix_io::{matrix_to_csv, write_matrix, MatrixFormat};

/// Draw with the named method at exactly the requested shape. The two
/// aligned constructions reject m > n here; transposed draws for
/// expanding layers are a network concern, not a `gen` one.
pub fn run(args: &GenArgs, cli: &Cli) -> Result<u8, CliError> {
    let spec = InitializerSpec::from_str(&args.method)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut rng = RngStream::new(cli.seed).rng();
    let w = match spec {
        InitializerSpec::ProposedAlg1 => generate_alg1(args.m, args.n, &mut rng)?.into_matrix(),
        InitializerSpec::ProposedAlg2 => generate_alg2(args.m, args.n, &mut rng)?.into_matrix(),
        ref baseline => generate_baseline(baseline, args.m, args.n, &mut rng)?,
    };
    let report = validate_membership(&w, args.tol);
    let report_json = serde_json::to_string_pretty(&report)?;
    match &cli.out {
        Some(path) => {
            let format = match &args.format {
                Some(name) => MatrixFormat::from_str(name)?,
                None => MatrixFormat::from_path(path),
            };
            write_matrix(path, &w, format)?;
            println!("{report_json}");
        }
        None => {
            print!("{}", matrix_to_csv(&w));
            eprintln!("{report_json}");
        }
    }
    Ok(0)
}
