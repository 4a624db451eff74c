//! `stats`: CSV reports for the distributional and closed-form checks.

use std::str::FromStr;

use aligned_init::linalg::{centering_projector, cholesky_p};
use aligned_init::stats::{clt_distance, empirical_transport, propagate_theory};
use aligned_init::{generate_alg2, InputDistribution, RngStream};
use serde::Serialize;

use crate::cli::{Cli, CholeskyArgs, CltArgs, PropagateArgs, StatsCmd, TransportArgs};
use crate::commands::parse_list;
use crate::error::CliError;
use crate::experiment::{hash_config, mean_std, write_csv, SCHEMA_VERSION};

const CLT_TAG: u64 = 0xc17;
const TRANSPORT_TAG: u64 = 0x7a5;

pub fn run(cmd: &StatsCmd, cli: &Cli) -> Result<u8, CliError> {
    match cmd {
        StatsCmd::Clt(args) => run_clt(args, cli),
        StatsCmd::Transport(args) => run_transport(args, cli),
        StatsCmd::Propagate(args) => run_propagate(args, cli),
        StatsCmd::Choleskycheck(args) => run_choleskycheck(args, cli),
    }
}

fn parse_dist(text: &str) -> Result<InputDistribution, CliError> {
    InputDistribution::from_str(text).map_err(|e| CliError::Usage(e.to_string()))
}

fn run_clt(args: &CltArgs, cli: &Cli) -> Result<u8, CliError> {
    let dims = parse_list::<usize>(&args.dims, "dimension")?;
    let dist = parse_dist(&args.dist)?;
    let samples = cli.trials.unwrap_or(args.samples);
    if args.draws == 0 || samples < 2 {
        return Err(CliError::Usage("need draws >= 1 and samples >= 2".into()));
    }

    #[derive(Serialize)]
    struct Config<'a> {
        command: &'static str,
        dist: &'a InputDistribution,
        m: usize,
        dims: &'a [usize],
        draws: usize,
        samples: usize,
        seed: u64,
    }
    let hash = hash_config(&Config {
        command: "stats_clt",
        dist: &dist,
        m: args.m,
        dims: &dims,
        draws: args.draws,
        samples,
        seed: cli.seed,
    })?;

    let header = [
        "schema_version",
        "command",
        "config_hash",
        "dist",
        "m",
        "dim",
        "draw",
        "samples",
        "ks_distance",
    ];
    let mut records = Vec::new();
    let mut row = |dim: usize, draw: &str, ks: f64| {
        records.push(vec![
            SCHEMA_VERSION.to_string(),
            "stats_clt".to_string(),
            hash.clone(),
            args.dist.clone(),
            args.m.to_string(),
            dim.to_string(),
            draw.to_string(),
            samples.to_string(),
            format!("{ks}"),
        ]);
    };
    for &dim in &dims {
        if dim < args.m {
            return Err(CliError::Usage(format!(
                "dimension {dim} is below the {} output rows",
                args.m
            )));
        }
        let mut distances = Vec::with_capacity(args.draws);
        for draw in 0..args.draws {
            let mut rng = RngStream::new(cli.seed)
                .derive(CLT_TAG)
                .derive(dim as u64)
                .derive(draw as u64)
                .rng();
            let ks = clt_distance(args.m, dim, &dist, samples, &mut rng)?;
            row(dim, &draw.to_string(), ks);
            distances.push(ks);
        }
        let (mean, _) = mean_std(&distances);
        row(dim, "mean", mean);
    }
    write_csv(cli.out.as_deref(), &header, &records)?;
    Ok(0)
}

fn run_transport(args: &TransportArgs, cli: &Cli) -> Result<u8, CliError> {
    let dist = parse_dist(&args.dist)?;
    let samples = cli.trials.unwrap_or(args.samples);
    if samples < 2 {
        return Err(CliError::Usage("need at least two samples".into()));
    }

    #[derive(Serialize)]
    struct Config<'a> {
        command: &'static str,
        dist: &'a InputDistribution,
        m: usize,
        n: usize,
        samples: usize,
        band: f64,
        seed: u64,
    }
    let hash = hash_config(&Config {
        command: "stats_transport",
        dist: &dist,
        m: args.m,
        n: args.n,
        samples,
        band: args.band,
        seed: cli.seed,
    })?;

    let stream = RngStream::new(cli.seed).derive(TRANSPORT_TAG);
    let mut rng = stream.rng();
    let w = generate_alg2(args.m, args.n, &mut rng)?;
    let report = empirical_transport(&w, &dist, samples, &mut rng)?;
    let within = report.within(args.band);

    let header = [
        "schema_version",
        "command",
        "config_hash",
        "dist",
        "rows",
        "cols",
        "samples",
        "band",
        "predicted_mean",
        "predicted_variance",
        "max_mean_dev",
        "max_var_dev",
        "max_cov_dev",
        "max_mean_z",
        "max_var_z",
        "max_cov_z",
        "within_band",
    ];
    let records = vec![vec![
        SCHEMA_VERSION.to_string(),
        "stats_transport".to_string(),
        hash,
        args.dist.clone(),
        report.rows.to_string(),
        report.cols.to_string(),
        report.trials.to_string(),
        format!("{}", args.band),
        format!("{}", report.predicted_mean),
        format!("{}", report.predicted_variance),
        format!("{}", report.max_mean_dev),
        format!("{}", report.max_var_dev),
        format!("{}", report.max_cov_dev),
        format!("{}", report.max_mean_z),
        format!("{}", report.max_var_z),
        format!("{}", report.max_cov_z),
        within.to_string(),
    ]];
    write_csv(cli.out.as_deref(), &header, &records)?;
    if !within {
        eprintln!(
            "note: worst deviation {:.2} standard errors exceeds the {:.1} band",
            report.max_mean_z.max(report.max_var_z).max(report.max_cov_z),
            args.band
        );
    }
    Ok(0)
}

/// Parse `<width>x<layers>` or an explicit comma list of widths.
pub fn parse_widths(text: &str) -> Result<Vec<usize>, CliError> {
    let lower = text.trim().to_ascii_lowercase();
    if let Some((w, d)) = lower.split_once('x') {
        let width: usize = w
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad width in {text:?}")))?;
        let layers: usize = d
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad layer count in {text:?}")))?;
        if width == 0 || layers == 0 {
            return Err(CliError::Usage("width and layer count must be positive".into()));
        }
        return Ok(vec![width; layers + 1]);
    }
    parse_list::<usize>(&lower, "width")
}

fn run_propagate(args: &PropagateArgs, cli: &Cli) -> Result<u8, CliError> {
    let widths = parse_widths(&args.widths)?;
    if widths.len() < 2 {
        return Err(CliError::Usage("need at least two widths".into()));
    }

    #[derive(Serialize)]
    struct Config<'a> {
        command: &'static str,
        widths: &'a [usize],
        mu: f64,
        sigma: f64,
    }
    let hash = hash_config(&Config {
        command: "stats_propagate",
        widths: &widths,
        mu: args.mu,
        sigma: args.sigma,
    })?;

    let report = propagate_theory(&widths, args.mu, args.sigma)?;
    let header = [
        "schema_version",
        "command",
        "config_hash",
        "layer",
        "width",
        "mu",
        "sigma",
        "alpha",
        "active_fraction",
    ];
    let records: Vec<Vec<String>> = report
        .layers
        .iter()
        .map(|l| {
            vec![
                SCHEMA_VERSION.to_string(),
                "stats_propagate".to_string(),
                hash.clone(),
                l.layer_index.to_string(),
                widths[l.layer_index].to_string(),
                format!("{}", l.mu),
                format!("{}", l.sigma),
                format!("{}", l.alpha),
                format!("{}", l.active_fraction),
            ]
        })
        .collect();
    write_csv(cli.out.as_deref(), &header, &records)?;
    if report.non_monotone_widths {
        eprintln!("note: widths expand somewhere; the recursion assumes non-expanding layers");
    }
    Ok(0)
}

fn run_choleskycheck(args: &CholeskyArgs, cli: &Cli) -> Result<u8, CliError> {
    if args.max_m < 2 {
        return Err(CliError::Usage("need --max-m >= 2".into()));
    }

    #[derive(Serialize)]
    struct Config {
        command: &'static str,
        max_m: usize,
    }
    let hash = hash_config(&Config {
        command: "stats_choleskycheck",
        max_m: args.max_m,
    })?;

    let header = ["schema_version", "command", "config_hash", "m", "max_residual"];
    let mut records = Vec::new();
    let mut worst = 0.0f64;
    for m in 2..=args.max_m {
        let l = cholesky_p(m)?;
        let product = l.matmul_nt(&l)?;
        let residual = product.max_abs_diff(&centering_projector(m))?;
        worst = worst.max(residual);
        records.push(vec![
            SCHEMA_VERSION.to_string(),
            "stats_choleskycheck".to_string(),
            hash.clone(),
            m.to_string(),
            format!("{residual}"),
        ]);
    }
    write_csv(cli.out.as_deref(), &header, &records)?;
    eprintln!("max reconstruction residual up to m={}: {worst:.3e}", args.max_m);
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths_parse_both_forms() {
        assert_eq!(parse_widths("64x3").unwrap(), vec![64, 64, 64, 64]);
        assert_eq!(parse_widths("784,64,10").unwrap(), vec![784, 64, 10]);
        assert!(parse_widths("0x5").is_err());
        assert!(parse_widths("").is_err());
    }
}
