//! ReLU-aware semi-orthogonal weight initialization.
//!
//! The library draws weight matrices that are exactly semi-orthogonal and
//! map the all-ones input direction to the all-ones output direction, a
//! combination that keeps a predictable fraction of each ReLU layer active
//! at any depth. It also carries the supporting pieces used to study that
//! claim: dense linear algebra, signal-propagation statistics, a small
//! feedforward training stack, and dataset loading.

pub mod data;
pub mod init;
pub mod linalg;
pub mod nn;
pub mod stats;

pub use init::{
    alignment_score, generate_alg1, generate_alg2, generate_baseline, ones_direction,
    sample_weight, validate_membership, AlignedSemiOrthogonal, InitError, InitializerSpec,
    RngStream, ValidationReport, LEE_DEFAULT_EPSILON, MEMBERSHIP_TOL,
};
pub use linalg::{DenseMatrix, LinAlgError};
pub use nn::{ActivationKind, Mlp, OutputKind};
pub use stats::{
    clt_distance, empirical_transport, normal_cdf, normal_pdf, propagate_theory,
    rectified_moments, InputDistribution, LayerStats, MomentPair, MomentReport,
    PropagationReport, StatsError,
};
