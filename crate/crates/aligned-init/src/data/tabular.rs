//! Tabular CSV ingestion driven by a JSON schema.
//!
//! The schema names the target column and lists every feature column with
//! its kind. Categorical values are encoded deterministically by the
//! lexicographic rank of the distinct values, either as a single integer
//! feature (default, keeps the published input widths) or one-hot.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, Labels, Task};
use crate::linalg::DenseMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    #[default]
    Numeric,
    Categorical,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// Lexicographic rank as one numeric feature.
    #[default]
    Integer,
    /// One indicator feature per distinct value.
    OneHot,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(default)]
    pub kind: ColumnKind,
    #[serde(default)]
    pub encoding: Encoding,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TabularSchema {
    pub name: String,
    pub task: Task,
    /// Name of the target column in the CSV header.
    pub target: String,
    /// Feature columns, in the order they enter the feature matrix.
    pub columns: Vec<ColumnSpec>,
    /// Cell value marking a missing entry; rows containing it are dropped.
    #[serde(default)]
    pub missing_marker: Option<String>,
}

impl TabularSchema {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// A loaded tabular dataset plus ingestion bookkeeping.
#[derive(Clone, Debug)]
pub struct TabularLoad {
    pub dataset: Dataset,
    /// Rows dropped because a used cell matched the missing marker.
    pub dropped_rows: usize,
}

/// Sorted distinct values of one column across the kept rows.
fn vocabulary<'a>(rows: &'a [csv::StringRecord], col: usize) -> BTreeMap<&'a str, usize> {
    let mut distinct: Vec<&str> = rows.iter().map(|r| r[col].trim()).collect();
    distinct.sort_unstable();
    distinct.dedup();
    distinct.into_iter().zip(0..).collect()
}

/// Read a CSV with a header row into a dataset, per the schema.
pub fn load_csv_tabular(
    path: impl AsRef<Path>,
    schema: &TabularSchema,
) -> Result<TabularLoad, DataError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => DataError::Io {
                path: path.to_path_buf(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => DataError::Csv(e),
        })?;
    let headers = reader.headers()?.clone();
    let index_of = |name: &str| -> Result<usize, DataError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };
    let target_col = index_of(&schema.target)?;
    let feature_cols: Vec<usize> = schema
        .columns
        .iter()
        .map(|c| index_of(&c.name))
        .collect::<Result<_, _>>()?;

    let mut kept: Vec<csv::StringRecord> = Vec::new();
    let mut dropped_rows = 0usize;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let used = feature_cols.iter().chain([&target_col]);
        let missing = schema.missing_marker.as_deref().is_some_and(|marker| {
            used.clone().any(|&c| record.get(c).map(str::trim) == Some(marker))
        });
        if missing {
            dropped_rows += 1;
            continue;
        }
        if record.len() != headers.len() {
            return Err(DataError::Parse {
                row: i + 1,
                column: "<record>".into(),
                message: format!(
                    "{} fields, header has {}",
                    record.len(),
                    headers.len()
                ),
            });
        }
        kept.push(record);
    }
    if kept.is_empty() {
        return Err(DataError::Empty(format!(
            "{}: no usable rows",
            path.display()
        )));
    }

    // Deterministic category vocabularies over the kept rows.
    let vocabs: Vec<Option<BTreeMap<&str, usize>>> = schema
        .columns
        .iter()
        .zip(&feature_cols)
        .map(|(spec, &col)| {
            (spec.kind == ColumnKind::Categorical).then(|| vocabulary(&kept, col))
        })
        .collect();
    let width: usize = schema
        .columns
        .iter()
        .zip(&vocabs)
        .map(|(spec, vocab)| match (spec.encoding, vocab) {
            (Encoding::OneHot, Some(v)) => v.len(),
            _ => 1,
        })
        .sum();

    let parse_numeric = |row: usize, column: &str, text: &str| -> Result<f64, DataError> {
        let v: f64 = text.parse().map_err(|_| DataError::Parse {
            row,
            column: column.to_string(),
            message: format!("{text:?} is not numeric"),
        })?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(DataError::Parse {
                row,
                column: column.to_string(),
                message: format!("{text:?} is not finite"),
            })
        }
    };

    let mut features = DenseMatrix::zeros(kept.len(), width);
    for (r, record) in kept.iter().enumerate() {
        let out = features.row_mut(r);
        let mut at = 0usize;
        for ((spec, &col), vocab) in schema.columns.iter().zip(&feature_cols).zip(&vocabs) {
            let cell = record[col].trim();
            match (spec.kind, vocab) {
                (ColumnKind::Numeric, _) => {
                    out[at] = parse_numeric(r + 1, &spec.name, cell)?;
                    at += 1;
                }
                (ColumnKind::Categorical, Some(v)) => {
                    let rank = v[cell];
                    match spec.encoding {
                        Encoding::Integer => {
                            out[at] = rank as f64;
                            at += 1;
                        }
                        Encoding::OneHot => {
                            out[at + rank] = 1.0;
                            at += v.len();
                        }
                    }
                }
                (ColumnKind::Categorical, None) => unreachable!("vocab built above"),
            }
        }
    }

    let labels = match schema.task {
        Task::Classification => {
            let vocab = vocabulary(&kept, target_col);
            let ids = kept
                .iter()
                .map(|r| vocab[r[target_col].trim()])
                .collect();
            Labels::Classes {
                ids,
                count: vocab.len(),
            }
        }
        Task::Regression => {
            let mut targets = Vec::with_capacity(kept.len());
            for (r, record) in kept.iter().enumerate() {
                targets.push(parse_numeric(r + 1, &schema.target, record[target_col].trim())?);
            }
            Labels::Targets(targets)
        }
    };

    let dataset = Dataset::new(schema.name.clone(), features, labels)?;
    Ok(TabularLoad {
        dataset,
        dropped_rows,
    })
}
