//! Shared experiment plumbing: the versioned result schema, config
//! hashing, deterministic per-cell RNG streams, and the single-cell
//! train/evaluate runner.
//!
//! Grid cells are independent; they run sequentially in config order, so
//! output rows are deterministic for a given config and seed. The wall_ms
//! column is the only nondeterministic field and sits last so consumers
//! can strip it before hashing.

use std::path::Path;
use std::time::Instant;

use aligned_init::data::Dataset;
use aligned_init::nn::train::{evaluate, train, LossKind, TrainConfig, TrainError};
use aligned_init::{ActivationKind, InitializerSpec, Mlp, OutputKind, RngStream};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Column order of every bench CSV. wall_ms stays last; strip it when
/// comparing runs byte-for-byte.
pub const RESULT_HEADER: [&str; 20] = [
    "schema_version",
    "command",
    "config_hash",
    "dataset",
    "init",
    "activation",
    "depth",
    "width",
    "alpha0",
    "k_shot",
    "seed",
    "trial",
    "epochs",
    "metric",
    "value",
    "value_std",
    "diverged",
    "dead_unit_max",
    "grad_norm",
    "wall_ms",
];

/// One CSV row: a single trial, or a per-cell aggregate when `trial` is
/// empty (then `diverged` counts diverged trials).
#[derive(Clone, Debug)]
pub struct ResultRow {
    pub command: &'static str,
    pub config_hash: String,
    pub dataset: String,
    pub init: String,
    pub activation: String,
    pub depth: usize,
    pub width: usize,
    pub alpha0: Option<f64>,
    pub k_shot: Option<usize>,
    pub seed: u64,
    pub trial: Option<usize>,
    pub epochs: usize,
    pub metric: String,
    pub value: Option<f64>,
    pub value_std: Option<f64>,
    pub diverged: usize,
    pub dead_unit_max: Option<f64>,
    pub grad_norm: Option<f64>,
    pub wall_ms: u128,
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

impl ResultRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            SCHEMA_VERSION.to_string(),
            self.command.to_string(),
            self.config_hash.clone(),
            self.dataset.clone(),
            self.init.clone(),
            self.activation.clone(),
            self.depth.to_string(),
            self.width.to_string(),
            opt(&self.alpha0),
            opt(&self.k_shot),
            self.seed.to_string(),
            opt(&self.trial),
            self.epochs.to_string(),
            self.metric.clone(),
            opt(&self.value),
            opt(&self.value_std),
            self.diverged.to_string(),
            opt(&self.dead_unit_max),
            opt(&self.grad_norm),
            self.wall_ms.to_string(),
        ]
    }
}

/// First 16 hex digits of the SHA-256 of the canonical config JSON.
pub fn hash_config<T: Serialize>(cfg: &T) -> Result<String, CliError> {
    let canonical = serde_json::to_string(cfg)?;
    let digest = Sha256::digest(canonical.as_bytes());
    Ok(digest[..8].iter().map(|b| format!("{b:02x}")).collect())
}

/// Write string records under a header to a file or stdout.
pub fn write_csv(
    out: Option<&Path>,
    header: &[&str],
    records: &[Vec<String>],
) -> Result<(), CliError> {
    fn emit<W: std::io::Write>(
        mut w: csv::Writer<W>,
        header: &[&str],
        records: &[Vec<String>],
    ) -> Result<(), csv::Error> {
        w.write_record(header)?;
        for r in records {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
    match out {
        Some(path) => emit(
            csv::Writer::from_path(path)?,
            header,
            records,
        )?,
        None => emit(
            csv::Writer::from_writer(std::io::stdout().lock()),
            header,
            records,
        )?,
    }
    Ok(())
}

fn fnv64(text: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Stable per-(cell, trial) stream. Every grid coordinate is mixed in, so
/// reordering or extending the grid never changes an existing cell's draw.
#[allow(clippy::too_many_arguments)]
pub fn cell_stream(
    seed: u64,
    init: &InitializerSpec,
    activation: ActivationKind,
    depth: usize,
    width: usize,
    alpha0: Option<f64>,
    k_shot: Option<usize>,
    trial: usize,
) -> RngStream {
    RngStream::new(seed)
        .derive(0xce11)
        .derive(fnv64(init.name()))
        .derive(fnv64(activation.name()))
        .derive(depth as u64)
        .derive(width as u64)
        .derive(alpha0.map_or(0, f64::to_bits))
        .derive(k_shot.map_or(0, |k| k as u64 + 1))
        .derive(trial as u64)
}

/// Outcome of one trained grid cell.
#[derive(Clone, Debug)]
pub struct TrainedCell {
    pub metric: &'static str,
    pub value: Option<f64>,
    pub diverged: bool,
    pub epochs_run: usize,
    pub dead_unit_max: Option<f64>,
    pub grad_norm: Option<f64>,
    pub wall_ms: u128,
}

/// Train one network and evaluate it on the test split. Divergence is an
/// outcome, not an error: the row gets a marker and an empty value.
pub fn run_cell(
    train_set: &Dataset,
    test_set: &Dataset,
    widths: &[usize],
    init: &InitializerSpec,
    activation: ActivationKind,
    cfg: &TrainConfig,
    stream: RngStream,
) -> Result<TrainedCell, CliError> {
    let output = match cfg.loss {
        LossKind::CrossEntropy => OutputKind::Softmax,
        LossKind::Mse => OutputKind::Linear,
    };
    let metric = match output {
        OutputKind::Softmax => "accuracy",
        OutputKind::Linear => "rmse",
    };
    let start = Instant::now();
    let mut net = Mlp::new(widths, activation, output, init, stream)?;
    let targets = train_set.train_targets();
    match train(&mut net, &train_set.features, &targets, cfg) {
        Ok(report) => {
            let value = evaluate(&net, &test_set.features, &test_set.train_targets())?;
            let last = report.epochs.last();
            Ok(TrainedCell {
                metric,
                value: Some(value),
                diverged: false,
                epochs_run: report.epochs.len(),
                dead_unit_max: last.and_then(|e| e.dead_unit_max),
                grad_norm: last.map(|e| e.grad_norm),
                wall_ms: start.elapsed().as_millis(),
            })
        }
        Err(TrainError::Diverged { epoch, .. }) => Ok(TrainedCell {
            metric,
            value: None,
            diverged: true,
            epochs_run: epoch,
            dead_unit_max: None,
            grad_norm: None,
            wall_ms: start.elapsed().as_millis(),
        }),
        Err(other) => Err(other.into()),
    }
}

/// Mean and sample standard deviation; std is 0 for a single value.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1) as f64).sqrt())
}
