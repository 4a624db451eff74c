//! Feature standardization with a controlled mean shift, deterministic
//! train/test splits, and per-class subsampling.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, Labels};
use crate::init::RngStream;
use crate::linalg::DenseMatrix;

/// Target mean of every standardized feature. With unit variance the mean
/// equals the input rectification parameter the experiments sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub alpha0: f64,
}

/// Columns whose std falls at or below this are treated as constant.
const CONSTANT_STD_TOL: f64 = 1e-12;

/// Per-feature affine map fitted on one (training) matrix: drop constant
/// columns, then scale to std 1 and move the mean to `alpha0`.
#[derive(Clone, Debug)]
pub struct Standardizer {
    keep: Vec<usize>,
    dropped: Vec<usize>,
    means: Vec<f64>,
    inv_stds: Vec<f64>,
    alpha0: f64,
    fitted_cols: usize,
}

impl Standardizer {
    /// Fit on a feature matrix using population moments (denominator n).
    pub fn fit(features: &DenseMatrix, spec: ShiftSpec) -> Result<Self, DataError> {
        if !spec.alpha0.is_finite() {
            return Err(DataError::Empty(format!(
                "shift target {} is not finite",
                spec.alpha0
            )));
        }
        let n = features.rows();
        if n == 0 {
            return Err(DataError::Empty("cannot standardize zero rows".into()));
        }
        let mut keep = Vec::new();
        let mut dropped = Vec::new();
        let mut means = Vec::new();
        let mut inv_stds = Vec::new();
        for j in 0..features.cols() {
            let col = features.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let std = var.sqrt();
            if std <= CONSTANT_STD_TOL {
                dropped.push(j);
            } else {
                keep.push(j);
                means.push(mean);
                inv_stds.push(1.0 / std);
            }
        }
        if keep.is_empty() {
            return Err(DataError::Empty(
                "every feature column is constant".into(),
            ));
        }
        Ok(Self {
            keep,
            dropped,
            means,
            inv_stds,
            alpha0: spec.alpha0,
            fitted_cols: features.cols(),
        })
    }

    /// Constant columns found at fit time (removed by [`Standardizer::apply`]).
    pub fn dropped_columns(&self) -> &[usize] {
        &self.dropped
    }

    /// Apply the fitted map; the input must have the fitted column count.
    pub fn apply(&self, features: &DenseMatrix) -> Result<DenseMatrix, DataError> {
        if features.cols() != self.fitted_cols {
            return Err(DataError::Empty(format!(
                "standardizer fitted on {} columns, input has {}",
                self.fitted_cols,
                features.cols()
            )));
        }
        Ok(DenseMatrix::from_fn(
            features.rows(),
            self.keep.len(),
            |r, k| {
                (features.get(r, self.keep[k]) - self.means[k]) * self.inv_stds[k] + self.alpha0
            },
        ))
    }
}

/// Standardize a dataset against its own statistics. Returns the shifted
/// dataset and the indices of dropped constant columns.
pub fn standardize_shift(
    ds: &Dataset,
    spec: ShiftSpec,
) -> Result<(Dataset, Vec<usize>), DataError> {
    let standardizer = Standardizer::fit(&ds.features, spec)?;
    let features = standardizer.apply(&ds.features)?;
    let out = Dataset::new(ds.name.clone(), features, ds.labels.clone())?;
    Ok((out, standardizer.dropped))
}

const TAG_SPLIT: u64 = 0x20;
const TAG_SUBSET: u64 = 0x21;
const TAG_FEWSHOT: u64 = 0x22;

/// Largest-remainder allocation of `ceil(frac * total)` slots over groups.
fn allocate(counts: &[usize], frac: f64) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    let want = ((frac * total as f64).ceil() as usize).min(total);
    let mut take: Vec<usize> = counts
        .iter()
        .map(|&c| (frac * c as f64).floor() as usize)
        .collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = frac * counts[a] as f64 - take[a] as f64;
        let rb = frac * counts[b] as f64 - take[b] as f64;
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let mut need = want.saturating_sub(take.iter().sum::<usize>());
    for &g in order.iter().cycle().take(order.len() * 2) {
        if need == 0 {
            break;
        }
        if take[g] < counts[g] {
            take[g] += 1;
            need -= 1;
        }
    }
    take
}

fn shuffled(mut idx: Vec<usize>, stream: RngStream) -> Vec<usize> {
    idx.shuffle(&mut stream.rng());
    idx
}

/// Deterministic train/test split. Classification splits are stratified:
/// each class contributes its largest-remainder share of the
/// `ceil(test_fraction * n)` test rows. Row order within each side follows
/// the original dataset.
pub fn split_train_test(
    ds: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(DataError::Empty(format!(
            "test fraction {test_fraction} outside [0, 1)"
        )));
    }
    let stream = RngStream::new(seed).derive(TAG_SPLIT);
    let mut test_idx = Vec::new();
    match &ds.labels {
        Labels::Classes { .. } => {
            let buckets = ds.class_indices()?;
            let counts: Vec<usize> = buckets.iter().map(Vec::len).collect();
            let takes = allocate(&counts, test_fraction);
            for (class, (bucket, take)) in buckets.into_iter().zip(takes).enumerate() {
                let order = shuffled(bucket, stream.derive(class as u64));
                test_idx.extend_from_slice(&order[..take]);
            }
        }
        Labels::Targets(_) => {
            let take = ((test_fraction * ds.len() as f64).ceil() as usize).min(ds.len());
            let order = shuffled((0..ds.len()).collect(), stream);
            test_idx.extend_from_slice(&order[..take]);
        }
    }
    test_idx.sort_unstable();
    let mut in_test = vec![false; ds.len()];
    for &i in &test_idx {
        in_test[i] = true;
    }
    let train_idx: Vec<usize> = (0..ds.len()).filter(|&i| !in_test[i]).collect();
    Ok((ds.select(&train_idx), ds.select(&test_idx)))
}

/// Deterministic subset of about `total` rows preserving class proportions
/// (plain random subset for regression). Returns the dataset unchanged if
/// it is already small enough.
pub fn stratified_subset(ds: &Dataset, total: usize, seed: u64) -> Result<Dataset, DataError> {
    if ds.len() <= total {
        return Ok(ds.clone());
    }
    let stream = RngStream::new(seed).derive(TAG_SUBSET);
    let frac = total as f64 / ds.len() as f64;
    let mut idx = Vec::with_capacity(total);
    match &ds.labels {
        Labels::Classes { .. } => {
            let buckets = ds.class_indices()?;
            let counts: Vec<usize> = buckets.iter().map(Vec::len).collect();
            let takes = allocate(&counts, frac);
            for (class, (bucket, take)) in buckets.into_iter().zip(takes).enumerate() {
                let order = shuffled(bucket, stream.derive(class as u64));
                idx.extend_from_slice(&order[..take]);
            }
        }
        Labels::Targets(_) => {
            let order = shuffled((0..ds.len()).collect(), stream);
            idx.extend_from_slice(&order[..total]);
        }
    }
    idx.sort_unstable();
    Ok(ds.select(&idx))
}

/// Exactly `k` rows per class, drawn without replacement, deterministic in
/// the seed.
pub fn few_shot_sample(ds: &Dataset, k: usize, seed: u64) -> Result<Dataset, DataError> {
    let buckets = ds.class_indices()?;
    let stream = RngStream::new(seed).derive(TAG_FEWSHOT);
    let mut idx = Vec::with_capacity(k * buckets.len());
    for (class, bucket) in buckets.into_iter().enumerate() {
        if bucket.len() < k {
            return Err(DataError::InsufficientClassSamples {
                class,
                have: bucket.len(),
                want: k,
            });
        }
        let order = shuffled(bucket, stream.derive(class as u64));
        idx.extend_from_slice(&order[..k]);
    }
    idx.sort_unstable();
    Ok(ds.select(&idx))
}
