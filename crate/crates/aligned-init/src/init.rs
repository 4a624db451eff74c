//! Samplers for aligned semi-orthogonal weight matrices and the baseline
//! initializations they are compared against.
//!
//! An aligned semi-orthogonal matrix W of shape m x n (m <= n) satisfies
//! `W W^T = I` and maps the normalized all-ones vector of length n to the
//! normalized all-ones vector of length m. Two samplers draw uniformly from
//! that set: [`generate_alg1`] builds W as a product of two sign-corrected
//! QR frames, [`generate_alg2`] reaches the same distribution with a single
//! QR pass and the closed-form Cholesky factor of the centering projector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::linalg::{cholesky_p, qr_thin, sign_correct, DenseMatrix, LinAlgError};

/// Default residual tolerance for membership validation.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum InitError {
    #[error("invalid dimensions m={m}, n={n}: need {need}")]
    InvalidDim {
        m: usize,
        n: usize,
        need: &'static str,
    },
    #[error("degenerate draw: QR stayed rank-deficient after one resample")]
    DegenerateDraw(#[source] LinAlgError),
    #[error("matrix fails membership validation at tolerance {tol:e}")]
    NotMember { tol: f64 },
    #[error("unknown initializer name {0:?}")]
    UnknownKind(String),
}

/// Seed domain for reproducible draws.
///
/// The base generator is ChaCha8 seeded from a u64. Layer substreams use
/// `seed XOR layer_index`; independent substreams (trials, epochs, classes)
/// go through a SplitMix64 mix so nearby tags cannot collide.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Substream for one layer of a network.
    pub fn layer(&self, layer_index: usize) -> Self {
        Self {
            seed: self.seed ^ layer_index as u64,
        }
    }

    /// Well-separated substream for an arbitrary tag.
    pub fn derive(&self, tag: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(tag)),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Weight initialization families covered by the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitializerSpec {
    ProposedAlg1,
    ProposedAlg2,
    He,
    Xavier,
    Random,
    Orthogonal,
    Lee { epsilon: f64 },
}

pub const LEE_DEFAULT_EPSILON: f64 = 1e-3;

impl InitializerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ProposedAlg1 => "proposed_alg1",
            Self::ProposedAlg2 => "proposed_alg2",
            Self::He => "he",
            Self::Xavier => "xavier",
            Self::Random => "random",
            Self::Orthogonal => "orthogonal",
            Self::Lee { .. } => "lee",
        }
    }

    pub fn is_proposed(&self) -> bool {
        matches!(self, Self::ProposedAlg1 | Self::ProposedAlg2)
    }
}

impl fmt::Display for InitializerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitializerSpec {
    type Err = InitError;

    /// Accepts the plain family name; `lee:<epsilon>` overrides the
    /// perturbation parameter.
    fn from_str(s: &str) -> Result<Self, InitError> {
        let lower = s.trim().to_ascii_lowercase();
        if let Some(eps) = lower.strip_prefix("lee:") {
            let epsilon: f64 = eps
                .parse()
                .map_err(|_| InitError::UnknownKind(s.to_string()))?;
            return Ok(Self::Lee { epsilon });
        }
        match lower.as_str() {
            "proposed_alg1" | "alg1" => Ok(Self::ProposedAlg1),
            "proposed_alg2" | "alg2" | "proposed" => Ok(Self::ProposedAlg2),
            "he" => Ok(Self::He),
            "xavier" => Ok(Self::Xavier),
            "random" => Ok(Self::Random),
            "orthogonal" => Ok(Self::Orthogonal),
            "lee" => Ok(Self::Lee {
                epsilon: LEE_DEFAULT_EPSILON,
            }),
            _ => Err(InitError::UnknownKind(s.to_string())),
        }
    }
}

/// A matrix known to lie in the aligned semi-orthogonal set.
#[derive(Clone, Debug)]
pub struct AlignedSemiOrthogonal {
    w: DenseMatrix,
}

impl AlignedSemiOrthogonal {
    /// Wrap an externally produced matrix after validating membership.
    pub fn from_matrix(w: DenseMatrix, tol: f64) -> Result<Self, InitError> {
        if validate_membership(&w, tol).passes {
            Ok(Self { w })
        } else {
            Err(InitError::NotMember { tol })
        }
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.w
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.w
    }

    pub fn rows(&self) -> usize {
        self.w.rows()
    }

    pub fn cols(&self) -> usize {
        self.w.cols()
    }
}

/// Residuals of the three membership conditions plus the alignment objective.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ValidationReport {
    pub rows: usize,
    pub cols: usize,
    /// `|| W W^T - I ||_F`
    pub semi_orthogonality: f64,
    /// `|| W xi_n - xi_m ||_inf`
    pub forward_alignment: f64,
    /// `|| W^T xi_m - xi_n ||_inf`
    pub adjoint_alignment: f64,
    /// `1^T W 1`; equals `sqrt(m n)` exactly on the aligned set.
    pub objective: f64,
    pub objective_target: f64,
    pub tol: f64,
    pub passes: bool,
}

/// Normalized all-ones vector of length k.
pub fn ones_direction(k: usize) -> Vec<f64> {
    vec![1.0 / (k as f64).sqrt(); k]
}

/// Check the three defining conditions of the aligned semi-orthogonal set.
///
/// Any shape is accepted; a matrix with more rows than columns simply fails
/// the semi-orthogonality residual.
pub fn validate_membership(w: &DenseMatrix, tol: f64) -> ValidationReport {
    let m = w.rows();
    let n = w.cols();
    let gram = w.matmul_nt(w).expect("gram product of self");
    let mut semi = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let target = if i == j { 1.0 } else { 0.0 };
            let d = gram.get(i, j) - target;
            semi += d * d;
        }
    }
    let semi = semi.sqrt();

    let xi_n = ones_direction(n);
    let xi_m = ones_direction(m);
    let forward = w
        .matvec(&xi_n)
        .expect("shape fixed")
        .iter()
        .zip(&xi_m)
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    let adjoint = w
        .tr_matvec(&xi_m)
        .expect("shape fixed")
        .iter()
        .zip(&xi_n)
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));

    let objective = w.sum();
    let objective_target = ((m * n) as f64).sqrt();
    ValidationReport {
        rows: m,
        cols: n,
        semi_orthogonality: semi,
        forward_alignment: forward,
        adjoint_alignment: adjoint,
        objective,
        objective_target,
        tol,
        passes: semi <= tol && forward <= tol && adjoint <= tol,
    }
}

/// Sum of all entries of W, the quantity the alignment constraint maximizes.
pub fn alignment_score(w: &DenseMatrix) -> f64 {
    w.sum()
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `[xi | A]`: prepend the normalized all-ones column.
fn prepend_ones_direction(a: &DenseMatrix) -> DenseMatrix {
    let rows = a.rows();
    let xi = 1.0 / (rows as f64).sqrt();
    DenseMatrix::from_fn(rows, a.cols() + 1, |i, j| {
        if j == 0 {
            xi
        } else {
            a.get(i, j - 1)
        }
    })
}

/// Retry a draw-dependent factorization once before giving up; Gaussian
/// inputs are rank-deficient with probability zero, so a repeat means
/// something is genuinely wrong.
fn with_one_resample<T>(
    mut attempt: impl FnMut() -> Result<T, LinAlgError>,
) -> Result<T, InitError> {
    match attempt() {
        Ok(v) => Ok(v),
        Err(LinAlgError::RankDeficient { .. }) => match attempt() {
            Ok(v) => Ok(v),
            Err(e) => Err(InitError::DegenerateDraw(e)),
        },
        Err(e) => Err(InitError::DegenerateDraw(e)),
    }
}

/// Overwrite column 0 with the normalized all-ones vector. After sign
/// correction that column is `+xi` up to rounding; pinning it exactly keeps
/// the alignment residuals at the rounding floor.
fn pin_ones_column(q: &mut DenseMatrix) {
    let xi = 1.0 / (q.rows() as f64).sqrt();
    for i in 0..q.rows() {
        q.set(i, 0, xi);
    }
}

/// Draw W uniformly from the aligned semi-orthogonal set via two QR frames.
///
/// U comes from the QR of `[xi_m | A]` with A an m x (m-1) Gaussian block,
/// V from the QR of `[xi_n | B]` with B n x (m-1); both are sign-corrected
/// so their first columns equal the all-ones directions, and `W = U V^T`.
/// Requires `2 <= m <= n`. Cost is dominated by the two factorizations,
/// O(m^3 + n m^2).
pub fn generate_alg1<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    rng: &mut R,
) -> Result<AlignedSemiOrthogonal, InitError> {
    if m < 2 || m > n {
        return Err(InitError::InvalidDim {
            m,
            n,
            need: "2 <= m <= n",
        });
    }
    // A is drawn before B, row-major, on every attempt.
    let (u, v) = with_one_resample(|| {
        let a = gaussian_matrix(m, m - 1, rng);
        let b = gaussian_matrix(n, m - 1, rng);
        let u = sign_correct(&qr_thin(&prepend_ones_direction(&a))?);
        let v = sign_correct(&qr_thin(&prepend_ones_direction(&b))?);
        Ok((u, v))
    })?;
    let mut u = u;
    let mut v = v;
    pin_ones_column(&mut u);
    pin_ones_column(&mut v);
    let w = u.matmul_nt(&v).expect("m x m times (n x m)^T");
    Ok(AlignedSemiOrthogonal { w })
}

/// Draw W uniformly from the aligned semi-orthogonal set with one QR pass.
///
/// Writes `W = L Q + xi_m xi_n^T` where L is the closed-form Cholesky factor
/// of the centering projector and Q stacks an orthonormal frame whose last
/// row is the all-ones direction of length n. Requires `1 <= m <= n`; for
/// m = 1 the set has the single element `xi_n^T` and no randomness is used.
/// Cost is O(m^2 + n m^2), one factorization instead of two.
pub fn generate_alg2<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    rng: &mut R,
) -> Result<AlignedSemiOrthogonal, InitError> {
    if m < 1 || m > n {
        return Err(InitError::InvalidDim {
            m,
            n,
            need: "1 <= m <= n",
        });
    }
    if m == 1 {
        let xi = 1.0 / (n as f64).sqrt();
        let w = DenseMatrix::from_fn(1, n, |_, _| xi);
        return Ok(AlignedSemiOrthogonal { w });
    }

    let (l, q) = alg2_parts(m, n, rng)?;
    let mut w = l.matmul(&q).expect("m x m times m x n");
    w.add_scalar(1.0 / ((m as f64).sqrt() * (n as f64).sqrt()));
    Ok(AlignedSemiOrthogonal { w })
}

/// The (L, Q) pair behind `generate_alg2`, exposed for inspection: L is the
/// centering-projector factor and Q is m x n with orthonormal rows whose
/// last row is exactly the all-ones direction.
fn alg2_parts<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    rng: &mut R,
) -> Result<(DenseMatrix, DenseMatrix), InitError> {
    let l = cholesky_p(m).expect("m >= 2 checked by caller");
    let frame = with_one_resample(|| {
        let a = gaussian_matrix(n, m - 1, rng);
        Ok(sign_correct(&qr_thin(&prepend_ones_direction(&a))?))
    })?;
    // Rows of Q are columns 1..m of the frame; the pinned all-ones column
    // moves to the last row, where the zero last column of L annihilates it.
    let xi = 1.0 / (n as f64).sqrt();
    let q = DenseMatrix::from_fn(m, n, |i, j| {
        if i + 1 == m {
            xi
        } else {
            frame.get(j, i + 1)
        }
    });
    Ok((l, q))
}

/// Sample one baseline weight matrix. Proposed kinds delegate to
/// [`sample_weight`] so the function is total over [`InitializerSpec`].
pub fn generate_baseline<R: Rng + ?Sized>(
    spec: &InitializerSpec,
    m: usize,
    n: usize,
    rng: &mut R,
) -> Result<DenseMatrix, InitError> {
    if m == 0 || n == 0 {
        return Err(InitError::InvalidDim {
            m,
            n,
            need: "m >= 1 and n >= 1",
        });
    }
    match spec {
        InitializerSpec::ProposedAlg1 | InitializerSpec::ProposedAlg2 => {
            sample_weight(spec, m, n, rng)
        }
        InitializerSpec::He => {
            // Variance 2 / fan_in with fan_in = n in the m x n (out x in) layout.
            let std = (2.0 / n as f64).sqrt();
            let mut g = gaussian_matrix(m, n, rng);
            g.scale(std);
            Ok(g)
        }
        InitializerSpec::Random => {
            let std = (1.0 / n as f64).sqrt();
            let mut g = gaussian_matrix(m, n, rng);
            g.scale(std);
            Ok(g)
        }
        InitializerSpec::Xavier => {
            let limit = (6.0 / (m + n) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit);
            Ok(DenseMatrix::from_fn(m, n, |_, _| dist.sample(rng)))
        }
        InitializerSpec::Orthogonal => {
            // Haar frame at the taller orientation, transposed if needed so
            // the shorter side is orthonormal.
            if m <= n {
                let q = with_one_resample(|| {
                    Ok(sign_correct(&qr_thin(&gaussian_matrix(n, m, rng))?))
                })?;
                Ok(q.transpose())
            } else {
                with_one_resample(|| Ok(sign_correct(&qr_thin(&gaussian_matrix(m, n, rng))?)))
            }
        }
        InitializerSpec::Lee { epsilon } => {
            // Orthogonal factor of the perturbed all-ones matrix 11^T + eps*I
            // at the square dimension, truncated to m x n.
            let s = m.max(n);
            let a = DenseMatrix::from_fn(s, s, |i, j| 1.0 + if i == j { *epsilon } else { 0.0 });
            // Deterministic input: a rank-deficient pivot (epsilon too small
            // for the threshold) cannot be resampled away.
            let q = sign_correct(&qr_thin(&a).map_err(InitError::DegenerateDraw)?);
            if m <= n {
                Ok(DenseMatrix::from_fn(m, n, |i, j| q.get(j, i)))
            } else {
                Ok(DenseMatrix::from_fn(m, n, |i, j| q.get(i, j)))
            }
        }
    }
}

/// Initialize one network layer of shape m x n (outputs x inputs).
///
/// Proposed kinds sample the aligned set when `m <= n`; an expanding layer
/// (m > n) transposes a draw at the flipped shape, which keeps orthonormal
/// columns and still maps the all-ones direction to the all-ones direction.
/// The m = 1 degenerate case is the deterministic single member.
pub fn sample_weight<R: Rng + ?Sized>(
    spec: &InitializerSpec,
    m: usize,
    n: usize,
    rng: &mut R,
) -> Result<DenseMatrix, InitError> {
    if m == 0 || n == 0 {
        return Err(InitError::InvalidDim {
            m,
            n,
            need: "m >= 1 and n >= 1",
        });
    }
    match spec {
        InitializerSpec::ProposedAlg1 | InitializerSpec::ProposedAlg2 => {
            if m > n {
                let flipped = sample_weight(spec, n, m, rng)?;
                return Ok(flipped.transpose());
            }
            if m == 1 {
                let xi = 1.0 / (n as f64).sqrt();
                return Ok(DenseMatrix::from_fn(1, n, |_, _| xi));
            }
            let drawn = match spec {
                InitializerSpec::ProposedAlg1 => generate_alg1(m, n, rng)?,
                _ => generate_alg2(m, n, rng)?,
            };
            Ok(drawn.into_matrix())
        }
        _ => generate_baseline(spec, m, n, rng),
    }
}
