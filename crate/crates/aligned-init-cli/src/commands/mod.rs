//! Command dispatch and shared parsing helpers.

use std::str::FromStr;

use aligned_init::init::InitializerSpec;
use aligned_init::nn::ActivationKind;

use crate::cli::{Cli, Command};
use crate::error::CliError;

mod bench;
mod check;
mod gen;
mod stats;

/// Run the parsed invocation and return the process exit code.
pub fn run(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Gen(args) => gen::run(args, cli),
        Command::Check(args) => check::run(args),
        Command::Stats(cmd) => stats::run(cmd, cli),
        Command::Bench(cmd) => bench::run(cmd, cli),
    }
}

/// Parse a non-empty comma-separated list, rejecting blanks.
pub fn parse_list<T: FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    let mut items = Vec::new();
    for piece in text.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let item = piece
            .parse::<T>()
            .map_err(|e| CliError::Usage(format!("bad {what} entry {piece:?}: {e}")))?;
        items.push(item);
    }
    if items.is_empty() {
        return Err(CliError::Usage(format!("empty {what} list")));
    }
    Ok(items)
}

/// Parse a comma-separated initializer list.
pub fn parse_inits(text: &str) -> Result<Vec<InitializerSpec>, CliError> {
    parse_list::<InitializerSpec>(text, "initializer")
}

/// Parse one activation name.
pub fn parse_activation(text: &str) -> Result<ActivationKind, CliError> {
    ActivationKind::from_str(text).map_err(|e| CliError::Usage(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_parsing_accepts_negatives_and_rejects_empty() {
        let alphas = parse_list::<f64>("-2, 0,2,50", "shift").unwrap();
        assert_eq!(alphas, vec![-2.0, 0.0, 2.0, 50.0]);
        assert!(parse_list::<usize>(" , ", "depth").is_err());
        assert!(parse_list::<usize>("10,x", "depth").is_err());
    }

    #[test]
    fn initializer_lists_parse() {
        let inits = parse_inits("proposed_alg2,lee:0.01,he").unwrap();
        assert_eq!(inits.len(), 3);
        assert_eq!(inits[0].name(), "proposed_alg2");
        assert!(parse_inits("nope").is_err());
    }
}
