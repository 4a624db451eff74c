//! Dataset ingestion and bookkeeping.
//!
//! Image sets arrive as IDX files (optionally gzipped), tabular sets as CSV
//! plus a JSON schema. Everything downstream works on [`Dataset`]: a dense
//! feature matrix with one sample per row and either class ids or real
//! regression targets.

pub mod idx;
pub mod tabular;
pub mod transform;

use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

use crate::linalg::DenseMatrix;
use crate::nn::train::TrainTargets;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: expected IDX magic {expected:#010x}, got {got:#010x}")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        got: u32,
    },
    #[error("{path}: expected {expected} payload bytes, got {got}")]
    LengthMismatch {
        path: PathBuf,
        expected: usize,
        got: usize,
    },
    #[error("images hold {images} samples but labels hold {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("row {row}, column {column:?}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("schema column {0:?} missing from CSV header")]
    MissingColumn(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("class {class} has {have} samples, need {want}")]
    InsufficientClassSamples {
        class: usize,
        have: usize,
        want: usize,
    },
    #[error("{0}")]
    Empty(String),
    #[error("operation needs class labels, dataset {0:?} is a regression set")]
    NotClassification(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

/// Targets: class ids with a declared class count, or real values.
#[derive(Clone, Debug, PartialEq)]
pub enum Labels {
    Classes { ids: Vec<usize>, count: usize },
    Targets(Vec<f64>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Self::Classes { ids, .. } => ids.len(),
            Self::Targets(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, idx: &[usize]) -> Self {
        match self {
            Self::Classes { ids, count } => Self::Classes {
                ids: idx.iter().map(|&i| ids[i]).collect(),
                count: *count,
            },
            Self::Targets(t) => Self::Targets(idx.iter().map(|&i| t[i]).collect()),
        }
    }
}

/// One loaded dataset: feature rows plus aligned labels.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub features: DenseMatrix,
    pub labels: Labels,
}

impl Dataset {
    /// Construct after checking row/label alignment and feature finiteness.
    pub fn new(name: String, features: DenseMatrix, labels: Labels) -> Result<Self, DataError> {
        if features.rows() != labels.len() {
            return Err(DataError::CountMismatch {
                images: features.rows(),
                labels: labels.len(),
            });
        }
        if features.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(DataError::Empty(format!(
                "dataset {name:?} contains non-finite features"
            )));
        }
        if let Labels::Classes { ids, count } = &labels {
            if let Some(&bad) = ids.iter().find(|&&id| id >= *count) {
                return Err(DataError::Parse {
                    row: ids.iter().position(|&id| id == bad).unwrap_or(0),
                    column: "label".into(),
                    message: format!("class id {bad} outside 0..{count}"),
                });
            }
        }
        Ok(Self {
            name,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn feature_count(&self) -> usize {
        self.features.cols()
    }

    pub fn task(&self) -> Task {
        match self.labels {
            Labels::Classes { .. } => Task::Classification,
            Labels::Targets(_) => Task::Regression,
        }
    }

    pub fn class_count(&self) -> Option<usize> {
        match &self.labels {
            Labels::Classes { count, .. } => Some(*count),
            Labels::Targets(_) => None,
        }
    }

    /// Network output width for this task: classes, or 1 for regression.
    pub fn output_width(&self) -> usize {
        self.class_count().unwrap_or(1)
    }

    /// Rows gathered by index, in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        let features = DenseMatrix::from_fn(idx.len(), self.features.cols(), |r, c| {
            self.features.get(idx[r], c)
        });
        Self {
            name: self.name.clone(),
            features,
            labels: self.labels.select(idx),
        }
    }

    /// Targets in the shape the training loop consumes.
    pub fn train_targets(&self) -> TrainTargets {
        match &self.labels {
            Labels::Classes { ids, count } => TrainTargets::Classes {
                ids: ids.clone(),
                count: *count,
            },
            Labels::Targets(t) => TrainTargets::Values(
                DenseMatrix::from_vec(t.len(), 1, t.clone()).expect("column vector"),
            ),
        }
    }

    /// Per-class index lists, ordered by class then by row. Regression sets
    /// are reported as an error to the caller.
    pub fn class_indices(&self) -> Result<Vec<Vec<usize>>, DataError> {
        match &self.labels {
            Labels::Classes { ids, count } => {
                let mut buckets = vec![Vec::new(); *count];
                for (row, &id) in ids.iter().enumerate() {
                    buckets[id].push(row);
                }
                Ok(buckets)
            }
            Labels::Targets(_) => Err(DataError::NotClassification(self.name.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::new(
            "toy".into(),
            DenseMatrix::from_fn(6, 2, |r, c| (r * 2 + c) as f64),
            Labels::Classes {
                ids: vec![0, 1, 0, 1, 2, 2],
                count: 3,
            },
        )
        .unwrap()
    }

    #[test]
    fn select_gathers_rows_and_labels_together() {
        let ds = toy();
        let sub = ds.select(&[4, 0]);
        assert_eq!(sub.len(), 2);
        assert_eq!(sub.features.row(0), &[8.0, 9.0]);
        assert_eq!(
            sub.labels,
            Labels::Classes {
                ids: vec![2, 0],
                count: 3
            }
        );
    }

    #[test]
    fn class_indices_partition_the_rows() {
        let ds = toy();
        let buckets = ds.class_indices().unwrap();
        assert_eq!(buckets, vec![vec![0, 2], vec![1, 3], vec![4, 5]]);
    }

    #[test]
    fn label_range_is_validated() {
        let bad = Dataset::new(
            "bad".into(),
            DenseMatrix::zeros(2, 1),
            Labels::Classes {
                ids: vec![0, 5],
                count: 3,
            },
        );
        assert!(matches!(bad, Err(DataError::Parse { .. })));
    }

    #[test]
    fn non_finite_features_are_rejected() {
        let bad = Dataset::new(
            "bad".into(),
            DenseMatrix::from_vec(1, 2, vec![1.0, f64::NAN]).unwrap(),
            Labels::Targets(vec![0.0]),
        );
        assert!(matches!(bad, Err(DataError::Empty(_))));
    }

    #[test]
    fn regression_targets_become_a_column() {
        let ds = Dataset::new(
            "r".into(),
            DenseMatrix::zeros(3, 2),
            Labels::Targets(vec![1.0, 2.0, 3.0]),
        )
        .unwrap();
        assert_eq!(ds.task(), Task::Regression);
        assert_eq!(ds.output_width(), 1);
        match ds.train_targets() {
            TrainTargets::Values(v) => assert_eq!((v.rows(), v.cols()), (3, 1)),
            _ => panic!("expected values"),
        }
    }
}
