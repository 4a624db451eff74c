//! Locates datasets under the data directory.
//!
//! Image sets live in `<data_dir>/<name>/` as IDX files with the usual
//! names (`train-images-idx3-ubyte`, `train-labels-idx1-ubyte`, `t10k-...`),
//! optionally gzipped. Tabular sets live in `<data_dir>/tabular/` as
//! `<name>.csv` plus `<name>.schema.json`. Asking for `mnist` or `fashion`
//! when only the bundled `digits` set is present falls back to `digits`
//! with a notice, so desk-scale runs work offline.

use std::path::{Path, PathBuf};

use aligned_init::data::idx::{existing_variant, load_idx};
use aligned_init::data::tabular::{load_csv_tabular, TabularSchema};
use aligned_init::data::Dataset;

use crate::error::CliError;

/// A resolved train/test pair, with the directory name actually used.
pub struct ImagePair {
    pub train: Dataset,
    pub test: Dataset,
    pub source: String,
}

fn idx_pair(dir: &Path, stem: &str) -> Option<(PathBuf, PathBuf)> {
    let images = existing_variant(dir.join(format!("{stem}-images-idx3-ubyte")))?;
    let labels = existing_variant(dir.join(format!("{stem}-labels-idx1-ubyte")))?;
    Some((images, labels))
}

fn load_image_dir(dir: &Path, source: &str) -> Result<ImagePair, CliError> {
    let (train_images, train_labels) = idx_pair(dir, "train").ok_or_else(|| {
        CliError::Usage(format!("no IDX train files under {}", dir.display()))
    })?;
    let (test_images, test_labels) = idx_pair(dir, "t10k").ok_or_else(|| {
        CliError::Usage(format!("no IDX test files under {}", dir.display()))
    })?;
    Ok(ImagePair {
        train: load_idx(train_images, train_labels)?,
        test: load_idx(test_images, test_labels)?,
        source: source.to_string(),
    })
}

/// Resolve an image dataset by name, falling back to the bundled digits.
pub fn resolve_image(data_dir: &Path, name: &str) -> Result<ImagePair, CliError> {
    let dir = data_dir.join(name);
    if idx_pair(&dir, "train").is_some() {
        return load_image_dir(&dir, name);
    }
    if matches!(name, "mnist" | "fashion") {
        let fallback = data_dir.join("digits");
        if idx_pair(&fallback, "train").is_some() {
            eprintln!("note: {name} not found under {}, using bundled digits", dir.display());
            return load_image_dir(&fallback, "digits");
        }
    }
    Err(CliError::Usage(format!(
        "image dataset {name:?} not found under {}",
        data_dir.display()
    )))
}

/// Load a tabular dataset; reports dropped rows on stderr.
pub fn resolve_tabular(data_dir: &Path, name: &str) -> Result<Dataset, CliError> {
    let dir = data_dir.join("tabular");
    let schema = TabularSchema::from_path(dir.join(format!("{name}.schema.json")))?;
    let load = load_csv_tabular(dir.join(format!("{name}.csv")), &schema)?;
    if load.dropped_rows > 0 {
        eprintln!(
            "note: dropped {} rows of {name} with missing values",
            load.dropped_rows
        );
    }
    Ok(load.dataset)
}

/// Published hidden width for each tabular benchmark.
pub fn tabular_hidden_width(name: &str) -> usize {
    match name {
        "adult" => 8,
        "cancer" => 16,
        "pima" => 4,
        "ionosphere" => 16,
        "wine" => 8,
        "diabetes" => 8,
        _ => 8,
    }
}
