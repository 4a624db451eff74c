//! Fully connected network with manual forward and backward passes.
//!
//! Batches are row-major: one sample per row. A network with widths
//! `[N0, N1, ..., NL]` applies the activation after every layer except the
//! last; the last layer's logits feed either a softmax classifier or a
//! linear regression head, chosen at construction.

pub mod activation;
pub mod train;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use activation::{ActivationKind, SELU_ALPHA, SELU_LAMBDA};

use crate::init::{sample_weight, InitError, InitializerSpec, RngStream};
use crate::linalg::DenseMatrix;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("batch has {got} features, network expects {want}")]
    FeatureMismatch { want: usize, got: usize },
    #[error("batch of {rows} rows does not match {want} targets")]
    TargetMismatch { rows: usize, want: usize },
    #[error("network needs at least two widths, got {0}")]
    TooShallow(usize),
    #[error("width {index} is zero")]
    ZeroWidth { index: usize },
    #[error(transparent)]
    Init(#[from] InitError),
}

/// Treatment of the final layer's logits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// Softmax probabilities, trained with cross-entropy.
    Softmax,
    /// Raw logits, trained with squared error.
    Linear,
}

/// Feedforward network. Weight `l` has shape `widths[l+1] x widths[l]`;
/// biases start at zero; PReLU keeps one trainable slope per hidden layer.
#[derive(Clone, Debug)]
pub struct Mlp {
    widths: Vec<usize>,
    weights: Vec<DenseMatrix>,
    biases: Vec<Vec<f64>>,
    activation: ActivationKind,
    output: OutputKind,
    prelu_slopes: Vec<f64>,
}

/// Per-layer intermediates kept for the backward pass and for dead-unit
/// accounting. `pre` has one entry per layer; `post` one per hidden layer.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub pre: Vec<DenseMatrix>,
    pub post: Vec<DenseMatrix>,
}

impl ForwardCache {
    pub fn logits(&self) -> &DenseMatrix {
        self.pre.last().expect("cache from a nonempty network")
    }
}

/// Parameter gradients, mirroring [`Mlp`]'s parameter shapes.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub weights: Vec<DenseMatrix>,
    pub biases: Vec<Vec<f64>>,
    pub slopes: Vec<f64>,
}

impl Gradients {
    pub(crate) fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net
                .weights
                .iter()
                .map(|w| DenseMatrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            slopes: vec![0.0; net.prelu_slopes.len()],
        }
    }

    /// Global Euclidean norm over every parameter gradient.
    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        for w in &self.weights {
            for v in w.as_slice() {
                acc += v * v;
            }
        }
        for b in &self.biases {
            for v in b {
                acc += v * v;
            }
        }
        for s in &self.slopes {
            acc += s * s;
        }
        acc.sqrt()
    }
}

impl Mlp {
    /// Build a network, drawing layer `l`'s weights from substream
    /// `stream.layer(l + 1)` so each layer is independently seeded.
    pub fn new(
        widths: &[usize],
        activation: ActivationKind,
        output: OutputKind,
        init: &InitializerSpec,
        stream: RngStream,
    ) -> Result<Self, NnError> {
        if widths.len() < 2 {
            return Err(NnError::TooShallow(widths.len()));
        }
        if let Some(index) = widths.iter().position(|&w| w == 0) {
            return Err(NnError::ZeroWidth { index });
        }
        let mut weights = Vec::with_capacity(widths.len() - 1);
        let mut biases = Vec::with_capacity(widths.len() - 1);
        for l in 0..widths.len() - 1 {
            let mut rng = stream.layer(l + 1).rng();
            weights.push(sample_weight(init, widths[l + 1], widths[l], &mut rng)?);
            biases.push(vec![0.0; widths[l + 1]]);
        }
        let hidden = widths.len() - 2;
        let prelu_slopes = if activation.has_trainable_slope() {
            vec![activation.initial_slope(); hidden]
        } else {
            Vec::new()
        };
        Ok(Self {
            widths: widths.to_vec(),
            weights,
            biases,
            activation,
            output,
            prelu_slopes,
        })
    }

    /// Build from explicit parameters (used by tests and oracles).
    pub fn from_parts(
        widths: Vec<usize>,
        weights: Vec<DenseMatrix>,
        biases: Vec<Vec<f64>>,
        activation: ActivationKind,
        output: OutputKind,
    ) -> Self {
        let hidden = widths.len().saturating_sub(2);
        let prelu_slopes = if activation.has_trainable_slope() {
            vec![activation.initial_slope(); hidden]
        } else {
            Vec::new()
        };
        Self {
            widths,
            weights,
            biases,
            activation,
            output,
            prelu_slopes,
        }
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    pub fn output(&self) -> OutputKind {
        self.output
    }

    /// Number of layers with weights.
    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    /// Number of hidden (activated) layers.
    pub fn hidden_depth(&self) -> usize {
        self.widths.len() - 2
    }

    pub fn weight(&self, l: usize) -> &DenseMatrix {
        &self.weights[l]
    }

    pub fn bias(&self, l: usize) -> &[f64] {
        &self.biases[l]
    }

    pub fn prelu_slopes(&self) -> &[f64] {
        &self.prelu_slopes
    }

    /// Mutable access to (weights, biases, prelu slopes) for optimizers
    /// and finite-difference probes.
    pub fn params_mut(&mut self) -> (&mut [DenseMatrix], &mut [Vec<f64>], &mut [f64]) {
        (
            &mut self.weights,
            &mut self.biases,
            &mut self.prelu_slopes,
        )
    }

    /// Slope used by hidden layer `l`'s activation during forward/backward.
    fn layer_slope(&self, l: usize) -> f64 {
        self.prelu_slopes.get(l).copied().unwrap_or(0.0)
    }

    /// Forward pass over a batch (rows are samples), keeping every pre and
    /// post activation.
    pub fn forward(&self, x: &DenseMatrix) -> Result<ForwardCache, NnError> {
        if x.cols() != self.widths[0] {
            return Err(NnError::FeatureMismatch {
                want: self.widths[0],
                got: x.cols(),
            });
        }
        let layers = self.weights.len();
        let mut pre = Vec::with_capacity(layers);
        let mut post = Vec::with_capacity(layers - 1);
        for l in 0..layers {
            let input = if l == 0 { x } else { &post[l - 1] };
            let mut z = input.matmul_nt(&self.weights[l]).expect("widths chain");
            let b = &self.biases[l];
            for r in 0..z.rows() {
                let row = z.row_mut(r);
                for (v, bias) in row.iter_mut().zip(b) {
                    *v += bias;
                }
            }
            if l + 1 < layers {
                let slope = self.layer_slope(l);
                let mut a = z.clone();
                for v in a.as_mut_slice() {
                    *v = self.activation.apply(*v, slope);
                }
                post.push(a);
            }
            pre.push(z);
        }
        Ok(ForwardCache { pre, post })
    }

    /// Backward pass from the loss gradient at the logits. `x` and `cache`
    /// must come from the matching [`Mlp::forward`] call.
    pub fn backward(
        &self,
        x: &DenseMatrix,
        cache: &ForwardCache,
        logit_grad: &DenseMatrix,
    ) -> Result<Gradients, NnError> {
        if logit_grad.rows() != x.rows() {
            return Err(NnError::TargetMismatch {
                rows: x.rows(),
                want: logit_grad.rows(),
            });
        }
        let layers = self.weights.len();
        let mut grads = Gradients::zeros_like(self);
        let mut delta = logit_grad.clone();
        for l in (0..layers).rev() {
            let input = if l == 0 { x } else { &cache.post[l - 1] };
            grads.weights[l] = delta.matmul_tn(input).expect("shape chain");
            let gb = &mut grads.biases[l];
            for r in 0..delta.rows() {
                for (g, d) in gb.iter_mut().zip(delta.row(r)) {
                    *g += d;
                }
            }
            if l == 0 {
                break;
            }
            // d(post[l-1]) then through the activation to d(pre[l-1]).
            let mut dpost = delta.matmul(&self.weights[l]).expect("shape chain");
            let slope = self.layer_slope(l - 1);
            let pre = &cache.pre[l - 1];
            if self.activation.has_trainable_slope() {
                let mut gs = 0.0;
                for (d, p) in dpost.as_slice().iter().zip(pre.as_slice()) {
                    gs += d * self.activation.slope_grad(*p);
                }
                grads.slopes[l - 1] = gs;
            }
            for (d, p) in dpost.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                *d *= self.activation.grad(*p, slope);
            }
            delta = dpost;
        }
        Ok(grads)
    }

    /// Fraction of dead (unit, sample) pairs per hidden layer; see
    /// [`ActivationKind::is_dead`] for the per-family notion of dead.
    pub fn dead_unit_fraction(&self, x: &DenseMatrix) -> Result<Vec<f64>, NnError> {
        let cache = self.forward(x)?;
        Ok(self.dead_fraction_from_cache(&cache))
    }

    pub fn dead_fraction_from_cache(&self, cache: &ForwardCache) -> Vec<f64> {
        cache
            .post
            .iter()
            .zip(&cache.pre)
            .map(|(post, pre)| {
                let dead = pre
                    .as_slice()
                    .iter()
                    .zip(post.as_slice())
                    .filter(|(p, a)| self.activation.is_dead(**p, **a))
                    .count();
                dead as f64 / post.as_slice().len() as f64
            })
            .collect()
    }
}

/// Gaussian batch helper shared by tests and calibration runs.
pub fn gaussian_batch<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    mean: f64,
    std: f64,
    rng: &mut R,
) -> DenseMatrix {
    use rand_distr::{Distribution, StandardNormal};
    DenseMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        mean + std * z
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_net(widths: &[usize], activation: ActivationKind) -> Mlp {
        let weights = widths
            .windows(2)
            .map(|p| {
                DenseMatrix::from_fn(p[1], p[0], |i, j| if i == j { 1.0 } else { 0.0 })
            })
            .collect();
        let biases = widths[1..].iter().map(|&w| vec![0.0; w]).collect();
        Mlp::from_parts(
            widths.to_vec(),
            weights,
            biases,
            activation,
            OutputKind::Linear,
        )
    }

    #[test]
    fn identity_hidden_layer_rectifies() {
        let net = identity_net(&[2, 2, 2], ActivationKind::Relu);
        let x = DenseMatrix::from_vec(1, 2, vec![-1.0, 2.0]).unwrap();
        let cache = net.forward(&x).unwrap();
        assert_eq!(cache.post[0].as_slice(), &[0.0, 2.0]);
        assert_eq!(cache.logits().as_slice(), &[0.0, 2.0]);
    }

    #[test]
    fn aligned_layer_transports_constant_inputs() {
        let stream = RngStream::new(3);
        let net = Mlp::new(
            &[12, 3, 3],
            ActivationKind::Relu,
            OutputKind::Linear,
            &InitializerSpec::ProposedAlg2,
            stream,
        )
        .unwrap();
        let c = 0.7;
        let x = DenseMatrix::from_fn(1, 12, |_, _| c);
        let cache = net.forward(&x).unwrap();
        let expect = c * (12f64 / 3.0).sqrt();
        for v in cache.pre[0].as_slice() {
            assert!((v - expect).abs() < 1e-10, "{v} vs {expect}");
        }
    }

    #[test]
    fn feature_mismatch_is_reported() {
        let net = identity_net(&[3, 3], ActivationKind::Relu);
        let x = DenseMatrix::zeros(2, 4);
        assert!(matches!(
            net.forward(&x),
            Err(NnError::FeatureMismatch { want: 3, got: 4 })
        ));
    }

    #[test]
    fn zero_logit_grad_gives_zero_parameter_grads() {
        let stream = RngStream::new(5);
        let net = Mlp::new(
            &[6, 5, 4],
            ActivationKind::LeakyRelu { slope: 0.01 },
            OutputKind::Softmax,
            &InitializerSpec::He,
            stream,
        )
        .unwrap();
        let x = gaussian_batch(3, 6, 0.0, 1.0, &mut RngStream::new(6).rng());
        let cache = net.forward(&x).unwrap();
        let zero = DenseMatrix::zeros(3, 4);
        let grads = net.backward(&x, &cache, &zero).unwrap();
        assert_eq!(grads.norm(), 0.0);
    }

    #[test]
    fn single_linear_layer_matches_least_squares_gradient() {
        // loss = mean over batch of (w x - t)^2 has weight gradient
        // (2/B) * sum_b (w x_b - t_b) x_b.
        let w = DenseMatrix::from_vec(1, 2, vec![0.5, -1.0]).unwrap();
        let net = Mlp::from_parts(
            vec![2, 1],
            vec![w],
            vec![vec![0.0]],
            ActivationKind::Relu,
            OutputKind::Linear,
        );
        let x = DenseMatrix::from_vec(2, 2, vec![1.0, 2.0, -3.0, 0.5]).unwrap();
        let t = [1.0, -2.0];
        let cache = net.forward(&x).unwrap();
        let z: Vec<f64> = cache.logits().as_slice().to_vec();
        let lg = DenseMatrix::from_vec(
            2,
            1,
            z.iter().zip(t).map(|(z, t)| 2.0 * (z - t) / 2.0).collect(),
        )
        .unwrap();
        let grads = net.backward(&x, &cache, &lg).unwrap();
        for j in 0..2 {
            let want: f64 = (0..2)
                .map(|b| 2.0 * (z[b] - t[b]) * x.get(b, j) / 2.0)
                .sum();
            assert!((grads.weights[0].get(0, j) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn dead_fraction_is_zero_for_positive_weights_and_inputs() {
        let widths = [4, 3, 3, 2];
        let weights = widths
            .windows(2)
            .map(|p| DenseMatrix::from_fn(p[1], p[0], |_, _| 0.3))
            .collect();
        let biases = widths[1..].iter().map(|&w| vec![0.0; w]).collect();
        let net = Mlp::from_parts(
            widths.to_vec(),
            weights,
            biases,
            ActivationKind::Relu,
            OutputKind::Softmax,
        );
        let x = DenseMatrix::from_fn(5, 4, |i, j| 0.1 + (i + j) as f64 * 0.05);
        let fractions = net.dead_unit_fraction(&x).unwrap();
        assert_eq!(fractions, vec![0.0, 0.0]);
    }

    #[test]
    fn prelu_slope_gradient_accumulates_negative_branch_inputs() {
        let w = DenseMatrix::identity(2);
        let out = DenseMatrix::identity(2);
        let net = Mlp::from_parts(
            vec![2, 2, 2],
            vec![w, out],
            vec![vec![0.0; 2], vec![0.0; 2]],
            ActivationKind::Prelu {
                initial_slope: 0.25,
            },
            OutputKind::Linear,
        );
        let x = DenseMatrix::from_vec(1, 2, vec![-2.0, 3.0]).unwrap();
        let cache = net.forward(&x).unwrap();
        assert_eq!(cache.post[0].as_slice(), &[-0.5, 3.0]);
        let lg = DenseMatrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap();
        let grads = net.backward(&x, &cache, &lg).unwrap();
        // d logits / d slope = pre on the negative branch only.
        assert_eq!(grads.slopes[0], -2.0);
    }
}
