//! Loss functions, Adam, and a deterministic minibatch training loop.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Gradients, Mlp, NnError, OutputKind};
use crate::init::RngStream;
use crate::linalg::DenseMatrix;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("loss {value} at epoch {epoch}, batch {batch}: training diverged")]
    Diverged {
        epoch: usize,
        batch: usize,
        value: f64,
    },
    #[error("{loss} loss needs a {want} output head")]
    LossOutputMismatch { loss: &'static str, want: &'static str },
    #[error("targets: {0}")]
    BadTargets(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    Mse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrRule {
    /// `base_lr / sqrt(hidden depth)`; the deeper the net, the smaller the step.
    SqrtDepthScaled,
    Fixed,
}

/// Training targets: class indices for cross-entropy, a row-per-sample
/// value matrix for squared error.
#[derive(Clone, Debug)]
pub enum TrainTargets {
    Classes { ids: Vec<usize>, count: usize },
    Values(DenseMatrix),
}

impl TrainTargets {
    pub fn len(&self) -> usize {
        match self {
            Self::Classes { ids, .. } => ids.len(),
            Self::Values(v) => v.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn gather(&self, idx: &[usize]) -> Self {
        match self {
            Self::Classes { ids, count } => Self::Classes {
                ids: idx.iter().map(|&i| ids[i]).collect(),
                count: *count,
            },
            Self::Values(v) => Self::Values(DenseMatrix::from_fn(
                idx.len(),
                v.cols(),
                |r, c| v.get(idx[r], c),
            )),
        }
    }
}

/// Mean loss over the batch and its gradient at the logits.
pub fn loss_and_grad(
    loss: LossKind,
    logits: &DenseMatrix,
    targets: &TrainTargets,
) -> Result<(f64, DenseMatrix), TrainError> {
    let b = logits.rows();
    if targets.len() != b {
        return Err(TrainError::BadTargets(format!(
            "{} targets for a batch of {b}",
            targets.len()
        )));
    }
    let inv_b = 1.0 / b as f64;
    match (loss, targets) {
        (LossKind::CrossEntropy, TrainTargets::Classes { ids, count }) => {
            if logits.cols() != *count {
                return Err(TrainError::BadTargets(format!(
                    "{count} classes but {} logits",
                    logits.cols()
                )));
            }
            let mut total = 0.0;
            let mut grad = DenseMatrix::zeros(b, *count);
            for r in 0..b {
                let row = logits.row(r);
                let y = ids[r];
                if y >= *count {
                    return Err(TrainError::BadTargets(format!(
                        "class {y} out of range 0..{count}"
                    )));
                }
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = row.iter().map(|z| (z - max).exp()).sum();
                let lse = max + sum.ln();
                total += lse - row[y];
                let g = grad.row_mut(r);
                for (j, z) in row.iter().enumerate() {
                    let p = (z - lse).exp();
                    g[j] = (p - if j == y { 1.0 } else { 0.0 }) * inv_b;
                }
            }
            Ok((total * inv_b, grad))
        }
        (LossKind::Mse, TrainTargets::Values(t)) => {
            if t.cols() != logits.cols() {
                return Err(TrainError::BadTargets(format!(
                    "target width {} vs logit width {}",
                    t.cols(),
                    logits.cols()
                )));
            }
            let mut total = 0.0;
            let grad = DenseMatrix::from_fn(b, logits.cols(), |r, c| {
                let d = logits.get(r, c) - t.get(r, c);
                total += d * d;
                2.0 * d * inv_b
            });
            Ok((total * inv_b, grad))
        }
        _ => Err(TrainError::BadTargets(
            "loss kind does not match target kind".into(),
        )),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub lr_rule: LrRule,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub loss: LossKind,
    pub seed: u64,
    /// When set, each epoch records the worst per-layer dead-unit fraction
    /// on a probe slice of the training set.
    pub record_dead_units: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 3,
            batch_size: 256,
            base_lr: 1e-3,
            lr_rule: LrRule::SqrtDepthScaled,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            loss: LossKind::CrossEntropy,
            seed: 0,
            record_dead_units: false,
        }
    }
}

/// Learning rate shrunk with network depth.
pub fn depth_scaled_lr(base_lr: f64, hidden_depth: usize) -> f64 {
    base_lr / (hidden_depth.max(1) as f64).sqrt()
}

impl TrainConfig {
    pub fn effective_lr(&self, net: &Mlp) -> f64 {
        match self.lr_rule {
            LrRule::SqrtDepthScaled => depth_scaled_lr(self.base_lr, net.hidden_depth()),
            LrRule::Fixed => self.base_lr,
        }
    }
}

/// First and second Adam moments, mirroring the parameter shapes.
#[derive(Clone, Debug)]
pub struct AdamState {
    t: u64,
    m: Gradients,
    v: Gradients,
}

impl AdamState {
    pub fn new(net: &Mlp) -> Self {
        Self {
            t: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

fn adam_update(p: &mut f64, g: f64, m: &mut f64, v: &mut f64, k: &AdamKnobs) {
    *m = k.beta1 * *m + (1.0 - k.beta1) * g;
    *v = k.beta2 * *v + (1.0 - k.beta2) * g * g;
    let m_hat = *m / k.bc1;
    let v_hat = *v / k.bc2;
    *p -= k.lr * m_hat / (v_hat.sqrt() + k.eps);
}

struct AdamKnobs {
    beta1: f64,
    beta2: f64,
    eps: f64,
    lr: f64,
    bc1: f64,
    bc2: f64,
}

/// One Adam step with bias correction over every parameter of the network.
pub fn adam_step(net: &mut Mlp, grads: &Gradients, state: &mut AdamState, lr: f64, cfg: &TrainConfig) {
    state.t += 1;
    let k = AdamKnobs {
        beta1: cfg.beta1,
        beta2: cfg.beta2,
        eps: cfg.eps,
        lr,
        bc1: 1.0 - cfg.beta1.powi(state.t as i32),
        bc2: 1.0 - cfg.beta2.powi(state.t as i32),
    };
    let (weights, biases, slopes) = net.params_mut();
    for (l, w) in weights.iter_mut().enumerate() {
        let gw = grads.weights[l].as_slice();
        let mw = state.m.weights[l].as_mut_slice();
        let vw = state.v.weights[l].as_mut_slice();
        for (i, p) in w.as_mut_slice().iter_mut().enumerate() {
            adam_update(p, gw[i], &mut mw[i], &mut vw[i], &k);
        }
    }
    for (l, b) in biases.iter_mut().enumerate() {
        for (i, p) in b.iter_mut().enumerate() {
            adam_update(
                p,
                grads.biases[l][i],
                &mut state.m.biases[l][i],
                &mut state.v.biases[l][i],
                &k,
            );
        }
    }
    for (i, p) in slopes.iter_mut().enumerate() {
        adam_update(
            p,
            grads.slopes[i],
            &mut state.m.slopes[i],
            &mut state.v.slopes[i],
            &k,
        );
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Mean over batches of the global parameter-gradient norm.
    pub grad_norm: f64,
    /// Worst per-layer dead fraction on the probe slice, when recorded.
    pub dead_unit_max: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub effective_lr: f64,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.mean_loss)
    }
}

fn check_loss_matches_head(loss: LossKind, output: OutputKind) -> Result<(), TrainError> {
    match (loss, output) {
        (LossKind::CrossEntropy, OutputKind::Softmax) | (LossKind::Mse, OutputKind::Linear) => {
            Ok(())
        }
        (LossKind::CrossEntropy, _) => Err(TrainError::LossOutputMismatch {
            loss: "cross-entropy",
            want: "softmax",
        }),
        (LossKind::Mse, _) => Err(TrainError::LossOutputMismatch {
            loss: "squared-error",
            want: "linear",
        }),
    }
}

fn gather_rows(features: &DenseMatrix, idx: &[usize]) -> DenseMatrix {
    DenseMatrix::from_fn(idx.len(), features.cols(), |r, c| features.get(idx[r], c))
}

const SHUFFLE_TAG: u64 = 0x10;
const PROBE_ROWS: usize = 512;

/// Minibatch training with Adam. Shuffling is deterministic in
/// `cfg.seed`; two runs from identical nets and configs produce identical
/// parameters. The net is left in its last state even on divergence, so
/// the caller can inspect it.
pub fn train(
    net: &mut Mlp,
    features: &DenseMatrix,
    targets: &TrainTargets,
    cfg: &TrainConfig,
) -> Result<TrainReport, TrainError> {
    check_loss_matches_head(cfg.loss, net.output())?;
    if features.rows() != targets.len() {
        return Err(TrainError::BadTargets(format!(
            "{} feature rows vs {} targets",
            features.rows(),
            targets.len()
        )));
    }
    if features.rows() == 0 || cfg.batch_size == 0 {
        return Err(TrainError::BadTargets("empty batch or dataset".into()));
    }
    let lr = cfg.effective_lr(net);
    let mut state = AdamState::new(net);
    let mut indices: Vec<usize> = (0..features.rows()).collect();
    let mut report = TrainReport {
        epochs: Vec::with_capacity(cfg.epochs),
        effective_lr: lr,
    };
    for epoch in 0..cfg.epochs {
        let mut rng = RngStream::new(cfg.seed)
            .derive(SHUFFLE_TAG)
            .derive(epoch as u64)
            .rng();
        indices.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut norm_sum = 0.0;
        let mut batches = 0usize;
        for (batch_no, chunk) in indices.chunks(cfg.batch_size).enumerate() {
            let x = gather_rows(features, chunk);
            let t = targets.gather(chunk);
            let cache = net.forward(&x)?;
            let (loss, lg) = loss_and_grad(cfg.loss, cache.logits(), &t)?;
            if !loss.is_finite() {
                return Err(TrainError::Diverged {
                    epoch,
                    batch: batch_no,
                    value: loss,
                });
            }
            let grads = net.backward(&x, &cache, &lg)?;
            norm_sum += grads.norm();
            adam_step(net, &grads, &mut state, lr, cfg);
            loss_sum += loss;
            batches += 1;
        }
        let dead_unit_max = if cfg.record_dead_units {
            let probe = gather_rows(features, &indices[..indices.len().min(PROBE_ROWS)]);
            net.dead_unit_fraction(&probe)?
                .into_iter()
                .fold(None, |acc: Option<f64>, f| Some(acc.map_or(f, |a| a.max(f))))
        } else {
            None
        };
        report.epochs.push(EpochStats {
            epoch,
            mean_loss: loss_sum / batches as f64,
            grad_norm: norm_sum / batches as f64,
            dead_unit_max,
        });
    }
    Ok(report)
}

/// Logits for a large input, evaluated in bounded-memory chunks.
pub fn predict(net: &Mlp, features: &DenseMatrix, chunk: usize) -> Result<DenseMatrix, NnError> {
    let rows = features.rows();
    let out = net.widths()[net.widths().len() - 1];
    let mut logits = DenseMatrix::zeros(rows, out);
    let mut start = 0;
    while start < rows {
        let stop = (start + chunk.max(1)).min(rows);
        let idx: Vec<usize> = (start..stop).collect();
        let x = gather_rows(features, &idx);
        let cache = net.forward(&x)?;
        for (r, row) in (start..stop).zip(0..) {
            let src = cache.logits().row(row);
            logits.row_mut(r).copy_from_slice(src);
        }
        start = stop;
    }
    Ok(logits)
}

/// Task metric: classification accuracy for a softmax head, root mean
/// squared error for a linear head.
pub fn evaluate(
    net: &Mlp,
    features: &DenseMatrix,
    targets: &TrainTargets,
) -> Result<f64, TrainError> {
    if features.rows() != targets.len() {
        return Err(TrainError::BadTargets(format!(
            "{} feature rows vs {} targets",
            features.rows(),
            targets.len()
        )));
    }
    let logits = predict(net, features, 512)?;
    match (net.output(), targets) {
        (OutputKind::Softmax, TrainTargets::Classes { ids, .. }) => {
            let mut hits = 0usize;
            for (r, &y) in ids.iter().enumerate() {
                let row = logits.row(r);
                let mut best = 0;
                for (j, v) in row.iter().enumerate() {
                    if *v > row[best] {
                        best = j;
                    }
                }
                hits += usize::from(best == y);
            }
            Ok(hits as f64 / ids.len() as f64)
        }
        (OutputKind::Linear, TrainTargets::Values(t)) => {
            let mut acc = 0.0;
            for (z, v) in logits.as_slice().iter().zip(t.as_slice()) {
                let d = z - v;
                acc += d * d;
            }
            Ok((acc / logits.as_slice().len() as f64).sqrt())
        }
        _ => Err(TrainError::BadTargets(
            "output head does not match target kind".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::InitializerSpec;
    use crate::nn::{gaussian_batch, ActivationKind};

    fn scalar_net(p0: f64) -> Mlp {
        Mlp::from_parts(
            vec![1, 1],
            vec![DenseMatrix::from_vec(1, 1, vec![p0]).unwrap()],
            vec![vec![0.0]],
            ActivationKind::Relu,
            OutputKind::Linear,
        )
    }

    #[test]
    fn adam_constant_gradient_trajectory() {
        // With a constant gradient g the bias-corrected moments equal g and
        // g^2 at every step, so each step moves by lr * g / (|g| + eps).
        let mut net = scalar_net(1.0);
        let mut state = AdamState::new(&net);
        let cfg = TrainConfig::default();
        let g = 2.0;
        let grads = Gradients {
            weights: vec![DenseMatrix::from_vec(1, 1, vec![g]).unwrap()],
            biases: vec![vec![0.0]],
            slopes: vec![],
        };
        for _ in 0..3 {
            adam_step(&mut net, &grads, &mut state, 0.1, &cfg);
        }
        let expected = 1.0 - 3.0 * 0.1 * (g / (g + 1e-8));
        assert!((net.weight(0).get(0, 0) - expected).abs() < 1e-12);
        assert_eq!(state.step_count(), 3);
    }

    #[test]
    fn adam_zero_gradient_is_a_no_op() {
        let mut net = scalar_net(0.75);
        let mut state = AdamState::new(&net);
        let cfg = TrainConfig::default();
        let grads = Gradients::zeros_like(&net);
        adam_step(&mut net, &grads, &mut state, 0.1, &cfg);
        assert_eq!(net.weight(0).get(0, 0), 0.75);
    }

    #[test]
    fn cross_entropy_matches_closed_form() {
        let logits = DenseMatrix::from_vec(1, 2, vec![0.0, 0.0]).unwrap();
        let targets = TrainTargets::Classes {
            ids: vec![0],
            count: 2,
        };
        let (loss, grad) = loss_and_grad(LossKind::CrossEntropy, &logits, &targets).unwrap();
        assert!((loss - 2.0f64.ln()).abs() < 1e-15);
        assert!((grad.get(0, 0) + 0.5).abs() < 1e-15);
        assert!((grad.get(0, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cross_entropy_survives_huge_logits() {
        let logits = DenseMatrix::from_vec(1, 3, vec![1000.0, -1000.0, 999.0]).unwrap();
        let targets = TrainTargets::Classes {
            ids: vec![0],
            count: 3,
        };
        let (loss, grad) = loss_and_grad(LossKind::CrossEntropy, &logits, &targets).unwrap();
        assert!(loss.is_finite());
        assert!(grad.as_slice().iter().all(|g| g.is_finite()));
    }

    #[test]
    fn mse_matches_closed_form() {
        let logits = DenseMatrix::from_vec(2, 1, vec![1.0, -1.0]).unwrap();
        let targets = TrainTargets::Values(DenseMatrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap());
        let (loss, grad) = loss_and_grad(LossKind::Mse, &logits, &targets).unwrap();
        assert!((loss - (1.0 + 4.0) / 2.0).abs() < 1e-15);
        assert_eq!(grad.as_slice(), &[1.0, -2.0]);
    }

    #[test]
    fn mismatched_loss_and_head_is_rejected() {
        let mut net = scalar_net(1.0);
        let cfg = TrainConfig {
            loss: LossKind::CrossEntropy,
            ..TrainConfig::default()
        };
        let x = DenseMatrix::zeros(1, 1);
        let t = TrainTargets::Classes {
            ids: vec![0],
            count: 1,
        };
        assert!(matches!(
            train(&mut net, &x, &t, &cfg),
            Err(TrainError::LossOutputMismatch { .. })
        ));
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let widths = [6, 5, 5, 3];
        let make = || {
            Mlp::new(
                &widths,
                ActivationKind::Relu,
                OutputKind::Softmax,
                &InitializerSpec::ProposedAlg2,
                RngStream::new(11),
            )
            .unwrap()
        };
        let x = gaussian_batch(40, 6, 1.0, 0.5, &mut RngStream::new(12).rng());
        let t = TrainTargets::Classes {
            ids: (0..40).map(|i| i % 3).collect(),
            count: 3,
        };
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 8,
            seed: 5,
            ..TrainConfig::default()
        };
        let mut a = make();
        let mut b = make();
        let ra = train(&mut a, &x, &t, &cfg).unwrap();
        let rb = train(&mut b, &x, &t, &cfg).unwrap();
        for l in 0..a.depth() {
            assert_eq!(a.weight(l), b.weight(l));
        }
        assert_eq!(ra.epochs[1].mean_loss, rb.epochs[1].mean_loss);
    }

    #[test]
    fn loss_decreases_on_a_separable_problem() {
        let mut net = Mlp::new(
            &[4, 8, 2],
            ActivationKind::Relu,
            OutputKind::Softmax,
            &InitializerSpec::ProposedAlg2,
            RngStream::new(21),
        )
        .unwrap();
        let x = DenseMatrix::from_fn(60, 4, |r, c| {
            let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
            sign * (1.0 + 0.1 * ((r + c) % 5) as f64)
        });
        let t = TrainTargets::Classes {
            ids: (0..60).map(|r| r % 2).collect(),
            count: 2,
        };
        let cfg = TrainConfig {
            epochs: 20,
            batch_size: 16,
            base_lr: 0.01,
            lr_rule: LrRule::Fixed,
            seed: 3,
            ..TrainConfig::default()
        };
        let report = train(&mut net, &x, &t, &cfg).unwrap();
        assert!(report.epochs[19].mean_loss < 0.3 * report.epochs[0].mean_loss);
        let acc = evaluate(&net, &x, &t).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn divergence_is_reported_with_location() {
        let mut net = scalar_net(1.0);
        let x = DenseMatrix::from_vec(2, 1, vec![1.0, 2.0]).unwrap();
        let t = TrainTargets::Values(DenseMatrix::from_vec(2, 1, vec![0.0, 0.0]).unwrap());
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 2,
            base_lr: 1e300,
            lr_rule: LrRule::Fixed,
            loss: LossKind::Mse,
            ..TrainConfig::default()
        };
        match train(&mut net, &x, &t, &cfg) {
            Err(TrainError::Diverged { epoch, .. }) => assert!(epoch <= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn rmse_evaluation_matches_hand_value() {
        let net = scalar_net(2.0);
        let x = DenseMatrix::from_vec(2, 1, vec![1.0, 3.0]).unwrap();
        let t = TrainTargets::Values(DenseMatrix::from_vec(2, 1, vec![1.0, 5.0]).unwrap());
        // Predictions 2 and 6, errors 1 and 1.
        let rmse = evaluate(&net, &x, &t).unwrap();
        assert!((rmse - 1.0).abs() < 1e-15);
    }
}
