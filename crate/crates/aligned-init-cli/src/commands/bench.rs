//! `bench`: training grids. One CSV row per trial plus an aggregate row
//! per cell (mean and sample std over non-diverged trials).
//!
//! Desk defaults keep the whole suite on a lunch-break budget; --paper-mode
//! switches to the published protocol (full datasets, 100 epochs, batch
//! 256, and the published trial counts).

use std::borrow::Cow;

use aligned_init::data::transform::{
    few_shot_sample, split_train_test, stratified_subset, ShiftSpec, Standardizer,
};
use aligned_init::data::{Dataset, Task};
use aligned_init::nn::train::{LossKind, LrRule, TrainConfig};
use aligned_init::{ActivationKind, InitializerSpec};
use serde::Serialize;

use crate::cli::{ActivationArgs, BenchCmd, Cli, DepthArgs, FewshotArgs, TabularArgs};
use crate::commands::{parse_activation, parse_inits, parse_list};
use crate::datasets::{resolve_image, resolve_tabular, tabular_hidden_width};
use crate::error::CliError;
use crate::experiment::{
    cell_stream, hash_config, mean_std, run_cell, write_csv, ResultRow, RESULT_HEADER,
};

/// Substream tag for the training seed inside a cell stream.
const SEED_TAG: u64 = 0x5eed;
/// Substream tag for per-trial data draws (few-shot resampling).
const DRAW_TAG: u64 = 0xd4aa;

pub fn run(cmd: &BenchCmd, cli: &Cli) -> Result<u8, CliError> {
    match cmd {
        BenchCmd::Depth(args) => run_depth(args, cli),
        BenchCmd::Fewshot(args) => run_fewshot(args, cli),
        BenchCmd::Tabular(args) => run_tabular(args, cli),
        BenchCmd::Activation(args) => run_activation(args, cli),
    }
}

/// Effective image-benchmark scale after paper-mode pins and overrides.
struct Scale {
    epochs: usize,
    batch_size: usize,
    subset: Option<usize>,
    trials: usize,
}

fn image_scale(
    cli: &Cli,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    subset: Option<usize>,
    desk_epochs: usize,
    desk_trials: usize,
    paper_trials: usize,
) -> Scale {
    let (def_epochs, def_batch, def_subset, def_trials) = if cli.paper_mode {
        (100, 256, None, paper_trials)
    } else {
        (desk_epochs, 64, Some(10_000), desk_trials)
    };
    let subset = match subset {
        Some(0) => None,
        Some(k) => Some(k),
        None => def_subset,
    };
    Scale {
        epochs: epochs.unwrap_or(def_epochs),
        batch_size: batch_size.unwrap_or(def_batch),
        subset,
        trials: cli.trials.unwrap_or(def_trials),
    }
}

/// Everything a single grid cell needs besides the data.
struct CellSpec<'a> {
    command: &'static str,
    hash: &'a str,
    dataset: &'a str,
    init: InitializerSpec,
    activation: ActivationKind,
    depth: usize,
    width: usize,
    alpha0: Option<f64>,
    k_shot: Option<usize>,
}

/// Run one cell's trials and append their rows plus the aggregate row.
/// `train_for` supplies the trial's training set; few-shot resamples per
/// trial, everything else borrows one fixed set.
fn sweep_cell<'d>(
    spec: &CellSpec,
    trials: usize,
    base_seed: u64,
    widths: &[usize],
    cfg: &TrainConfig,
    test: &Dataset,
    mut train_for: impl FnMut(u64) -> Result<Cow<'d, Dataset>, CliError>,
    rows: &mut Vec<ResultRow>,
) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::Usage("need at least one trial".into()));
    }
    let mut values = Vec::with_capacity(trials);
    let mut diverged = 0usize;
    let mut dead_max: Option<f64> = None;
    let mut wall_total = 0u128;
    let mut metric = "";
    for trial in 0..trials {
        let stream = cell_stream(
            base_seed,
            &spec.init,
            spec.activation,
            spec.depth,
            spec.width,
            spec.alpha0,
            spec.k_shot,
            trial,
        );
        let train_set = train_for(stream.derive(DRAW_TAG).seed())?;
        let mut trial_cfg = cfg.clone();
        trial_cfg.seed = stream.derive(SEED_TAG).seed();
        trial_cfg.lr_rule = if matches!(spec.init, InitializerSpec::Lee { .. }) {
            LrRule::Fixed
        } else {
            LrRule::SqrtDepthScaled
        };
        let cell = run_cell(
            &train_set,
            test,
            widths,
            &spec.init,
            spec.activation,
            &trial_cfg,
            stream,
        )?;
        metric = cell.metric;
        if let Some(v) = cell.value {
            values.push(v);
        }
        diverged += usize::from(cell.diverged);
        if let Some(d) = cell.dead_unit_max {
            dead_max = Some(dead_max.map_or(d, |m: f64| m.max(d)));
        }
        wall_total += cell.wall_ms;
        rows.push(ResultRow {
            command: spec.command,
            config_hash: spec.hash.to_string(),
            dataset: spec.dataset.to_string(),
            init: spec.init.to_string(),
            activation: spec.activation.name().to_string(),
            depth: spec.depth,
            width: spec.width,
            alpha0: spec.alpha0,
            k_shot: spec.k_shot,
            seed: stream.seed(),
            trial: Some(trial),
            epochs: cell.epochs_run,
            metric: cell.metric.to_string(),
            value: cell.value,
            value_std: None,
            diverged: usize::from(cell.diverged),
            dead_unit_max: cell.dead_unit_max,
            grad_norm: cell.grad_norm,
            wall_ms: cell.wall_ms,
        });
    }
    let (mean, std) = mean_std(&values);
    rows.push(ResultRow {
        command: spec.command,
        config_hash: spec.hash.to_string(),
        dataset: spec.dataset.to_string(),
        init: spec.init.to_string(),
        activation: spec.activation.name().to_string(),
        depth: spec.depth,
        width: spec.width,
        alpha0: spec.alpha0,
        k_shot: spec.k_shot,
        seed: base_seed,
        trial: None,
        epochs: cfg.epochs,
        metric: format!("{metric}_mean"),
        value: if values.is_empty() { None } else { Some(mean) },
        value_std: if values.is_empty() { None } else { Some(std) },
        diverged,
        dead_unit_max: dead_max,
        grad_norm: None,
        wall_ms: wall_total,
    });
    Ok(())
}

fn hidden_widths(input: usize, width: usize, depth: usize, output: usize) -> Vec<usize> {
    let mut widths = Vec::with_capacity(depth + 2);
    widths.push(input);
    widths.extend(std::iter::repeat(width).take(depth));
    widths.push(output);
    widths
}

fn apply_subset(ds: &Dataset, subset: Option<usize>, seed: u64) -> Result<Dataset, CliError> {
    match subset {
        Some(total) => Ok(stratified_subset(ds, total, seed)?),
        None => Ok(ds.clone()),
    }
}

#[derive(Serialize)]
struct ImageGridConfig<'a> {
    command: &'static str,
    dataset: &'a str,
    inits: &'a [InitializerSpec],
    activations: &'a [ActivationKind],
    depths: &'a [usize],
    width: usize,
    epochs: usize,
    batch_size: usize,
    base_lr: f64,
    subset: Option<usize>,
    k_shot: Option<usize>,
    trials: usize,
    seed: u64,
}

fn run_depth(args: &DepthArgs, cli: &Cli) -> Result<u8, CliError> {
    let inits = parse_inits(&args.inits)?;
    let depths = parse_list::<usize>(&args.depths, "depth")?;
    let activation = parse_activation(&args.activation)?;
    let scale = image_scale(cli, args.epochs, args.batch_size, args.subset, 3, 5, 5);

    let pair = resolve_image(&cli.data_dir, &args.dataset)?;
    let train = apply_subset(&pair.train, scale.subset, cli.seed)?;
    let test = pair.test;

    let hash = hash_config(&ImageGridConfig {
        command: "bench_depth",
        dataset: &pair.source,
        inits: &inits,
        activations: std::slice::from_ref(&activation),
        depths: &depths,
        width: args.width,
        epochs: scale.epochs,
        batch_size: scale.batch_size,
        base_lr: args.base_lr,
        subset: scale.subset,
        k_shot: None,
        trials: scale.trials,
        seed: cli.seed,
    })?;

    let cfg = TrainConfig {
        epochs: scale.epochs,
        batch_size: scale.batch_size,
        base_lr: args.base_lr,
        loss: LossKind::CrossEntropy,
        record_dead_units: true,
        ..TrainConfig::default()
    };

    let mut rows = Vec::new();
    for init in &inits {
        for &depth in &depths {
            let widths = hidden_widths(train.feature_count(), args.width, depth, train.output_width());
            let spec = CellSpec {
                command: "bench_depth",
                hash: &hash,
                dataset: &pair.source,
                init: *init,
                activation,
                depth,
                width: args.width,
                alpha0: None,
                k_shot: None,
            };
            sweep_cell(
                &spec,
                scale.trials,
                cli.seed,
                &widths,
                &cfg,
                &test,
                |_| Ok(Cow::Borrowed(&train)),
                &mut rows,
            )?;
        }
    }
    let records: Vec<Vec<String>> = rows.iter().map(ResultRow::record).collect();
    write_csv(cli.out.as_deref(), &RESULT_HEADER, &records)?;
    Ok(0)
}

fn run_fewshot(args: &FewshotArgs, cli: &Cli) -> Result<u8, CliError> {
    let inits = parse_inits(&args.inits)?;
    let activation = parse_activation(&args.activation)?;
    if args.k == 0 {
        return Err(CliError::Usage("need at least one shot per class".into()));
    }
    // Few-shot nets see k*classes rows; epochs stay at the published count
    // in both modes and the full training pool is always the draw source.
    let scale = image_scale(cli, Some(args.epochs), args.batch_size, Some(0), args.epochs, 10, 50);

    let pair = resolve_image(&cli.data_dir, &args.dataset)?;
    let train_pool = pair.train;
    let test = pair.test;

    let hash = hash_config(&ImageGridConfig {
        command: "bench_fewshot",
        dataset: &pair.source,
        inits: &inits,
        activations: std::slice::from_ref(&activation),
        depths: std::slice::from_ref(&args.depth),
        width: args.width,
        epochs: scale.epochs,
        batch_size: scale.batch_size,
        base_lr: args.base_lr,
        subset: None,
        k_shot: Some(args.k),
        trials: scale.trials,
        seed: cli.seed,
    })?;

    let cfg = TrainConfig {
        epochs: scale.epochs,
        batch_size: scale.batch_size,
        base_lr: args.base_lr,
        loss: LossKind::CrossEntropy,
        record_dead_units: true,
        ..TrainConfig::default()
    };

    let mut rows = Vec::new();
    for init in &inits {
        let widths = hidden_widths(
            train_pool.feature_count(),
            args.width,
            args.depth,
            train_pool.output_width(),
        );
        let spec = CellSpec {
            command: "bench_fewshot",
            hash: &hash,
            dataset: &pair.source,
            init: *init,
            activation,
            depth: args.depth,
            width: args.width,
            alpha0: None,
            k_shot: Some(args.k),
        };
        sweep_cell(
            &spec,
            scale.trials,
            cli.seed,
            &widths,
            &cfg,
            &test,
            |draw_seed| Ok(Cow::Owned(few_shot_sample(&train_pool, args.k, draw_seed)?)),
            &mut rows,
        )?;
    }
    let records: Vec<Vec<String>> = rows.iter().map(ResultRow::record).collect();
    write_csv(cli.out.as_deref(), &RESULT_HEADER, &records)?;
    Ok(0)
}

#[derive(Serialize)]
struct TabularGridConfig<'a> {
    command: &'static str,
    dataset: &'a str,
    inits: &'a [InitializerSpec],
    activation: ActivationKind,
    depths: &'a [usize],
    alphas: &'a [f64],
    width: usize,
    epochs: usize,
    batch_size: usize,
    base_lr: f64,
    test_fraction: f64,
    trials: usize,
    seed: u64,
}

fn run_tabular(args: &TabularArgs, cli: &Cli) -> Result<u8, CliError> {
    let inits = parse_inits(&args.inits)?;
    let depths = parse_list::<usize>(&args.depths, "depth")?;
    let alphas = parse_list::<f64>(&args.alphas, "shift")?;
    let activation = parse_activation(&args.activation)?;
    let width = args.width.unwrap_or_else(|| tabular_hidden_width(&args.dataset));
    // Tabular sets are small, so the published epoch count is the desk
    // default too; only the batch size shrinks off paper mode.
    let epochs = args.epochs.unwrap_or(100);
    let batch_size = args.batch_size.unwrap_or(if cli.paper_mode { 256 } else { 64 });
    let trials = cli.trials.unwrap_or(5);

    let ds = resolve_tabular(&cli.data_dir, &args.dataset)?;
    let loss = match ds.task() {
        Task::Classification => LossKind::CrossEntropy,
        Task::Regression => LossKind::Mse,
    };
    let (train_raw, test_raw) = split_train_test(&ds, args.test_fraction, cli.seed)?;

    let hash = hash_config(&TabularGridConfig {
        command: "bench_tabular",
        dataset: &args.dataset,
        inits: &inits,
        activation,
        depths: &depths,
        alphas: &alphas,
        width,
        epochs,
        batch_size,
        base_lr: args.base_lr,
        test_fraction: args.test_fraction,
        trials,
        seed: cli.seed,
    })?;

    let cfg = TrainConfig {
        epochs,
        batch_size,
        base_lr: args.base_lr,
        loss,
        record_dead_units: true,
        ..TrainConfig::default()
    };

    let mut rows = Vec::new();
    for &alpha0 in &alphas {
        let standardizer = Standardizer::fit(&train_raw.features, ShiftSpec { alpha0 })?;
        let train = Dataset::new(
            train_raw.name.clone(),
            standardizer.apply(&train_raw.features)?,
            train_raw.labels.clone(),
        )?;
        let test = Dataset::new(
            test_raw.name.clone(),
            standardizer.apply(&test_raw.features)?,
            test_raw.labels.clone(),
        )?;
        for init in &inits {
            for &depth in &depths {
                let widths =
                    hidden_widths(train.feature_count(), width, depth, train.output_width());
                let spec = CellSpec {
                    command: "bench_tabular",
                    hash: &hash,
                    dataset: &args.dataset,
                    init: *init,
                    activation,
                    depth,
                    width,
                    alpha0: Some(alpha0),
                    k_shot: None,
                };
                sweep_cell(
                    &spec,
                    trials,
                    cli.seed,
                    &widths,
                    &cfg,
                    &test,
                    |_| Ok(Cow::Borrowed(&train)),
                    &mut rows,
                )?;
            }
        }
    }
    let records: Vec<Vec<String>> = rows.iter().map(ResultRow::record).collect();
    write_csv(cli.out.as_deref(), &RESULT_HEADER, &records)?;
    Ok(0)
}

fn run_activation(args: &ActivationArgs, cli: &Cli) -> Result<u8, CliError> {
    let inits = parse_inits(&args.inits)?;
    let names = parse_list::<String>(&args.activations, "activation")?;
    let activations: Vec<ActivationKind> = names
        .iter()
        .map(|n| parse_activation(n))
        .collect::<Result<_, _>>()?;
    let scale = image_scale(cli, args.epochs, args.batch_size, args.subset, 3, 2, 5);

    let pair = resolve_image(&cli.data_dir, &args.dataset)?;
    let train = apply_subset(&pair.train, scale.subset, cli.seed)?;
    let test = pair.test;

    let hash = hash_config(&ImageGridConfig {
        command: "bench_activation",
        dataset: &pair.source,
        inits: &inits,
        activations: &activations,
        depths: std::slice::from_ref(&args.depth),
        width: args.width,
        epochs: scale.epochs,
        batch_size: scale.batch_size,
        base_lr: args.base_lr,
        subset: scale.subset,
        k_shot: None,
        trials: scale.trials,
        seed: cli.seed,
    })?;

    let cfg = TrainConfig {
        epochs: scale.epochs,
        batch_size: scale.batch_size,
        base_lr: args.base_lr,
        loss: LossKind::CrossEntropy,
        record_dead_units: true,
        ..TrainConfig::default()
    };

    let mut rows = Vec::new();
    for init in &inits {
        for &activation in &activations {
            let widths = hidden_widths(
                train.feature_count(),
                args.width,
                args.depth,
                train.output_width(),
            );
            let spec = CellSpec {
                command: "bench_activation",
                hash: &hash,
                dataset: &pair.source,
                init: *init,
                activation,
                depth: args.depth,
                width: args.width,
                alpha0: None,
                k_shot: None,
            };
            sweep_cell(
                &spec,
                scale.trials,
                cli.seed,
                &widths,
                &cfg,
                &test,
                |_| Ok(Cow::Borrowed(&train)),
                &mut rows,
            )?;
        }
    }
    let records: Vec<Vec<String>> = rows.iter().map(ResultRow::record).collect();
    write_csv(cli.out.as_deref(), &RESULT_HEADER, &records)?;
    Ok(0)
}
