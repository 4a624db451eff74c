//! Signal-propagation statistics for aligned semi-orthogonal layers.
//!
//! Closed-form pieces: standard normal pdf/cdf, the moments of a rectified
//! Gaussian, and the layer-by-layer recursion that predicts how the
//! rectification parameter drifts with depth. Monte-Carlo pieces: moment
//! transport through a fixed matrix and a Kolmogorov-Smirnov distance that
//! tracks how quickly projected coordinates become Gaussian.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::init::{generate_alg2, AlignedSemiOrthogonal, InitError};
use crate::linalg::dot;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("sigma must be positive, got {got}")]
    NonpositiveSigma { got: f64 },
    #[error("unsupported distribution: {0}")]
    UnsupportedDistribution(String),
    #[error(transparent)]
    Generation(#[from] InitError),
}

/// Floor and ceiling for the clamped normal CDF. The ceiling keeps
/// `1 - cdf` representable; the floor avoids log-of-zero downstream.
const CDF_FLOOR: f64 = 1e-300;
const CDF_CEIL: f64 = 1.0 - 1e-16;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.39894228040143267794;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF via the complementary error function, clamped to
/// `[1e-300, 1 - 1e-16]` so extreme rectification parameters (|alpha| up to
/// 50 appears in the saturated-input experiments) stay finite and nonzero.
pub fn normal_cdf(x: f64) -> f64 {
    let phi = 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2);
    phi.clamp(CDF_FLOOR, CDF_CEIL)
}

/// Mean and variance of a scalar distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub mean: f64,
    pub variance: f64,
}

/// Moments of `max(0, z)` for `z ~ N(mu, sigma^2)`.
///
/// With `alpha = mu/sigma`: mean is `sigma*pdf(alpha) + mu*cdf(alpha)` and
/// variance is `(mu^2 + sigma^2)*cdf(alpha) + mu*sigma*pdf(alpha) - mean^2`.
/// Both are clamped at zero: the exact values are nonnegative but the
/// floating-point forms can land at -1e-299 in the fully dead regime.
pub fn rectified_moments(mu: f64, sigma: f64) -> Result<MomentPair, StatsError> {
    if !(sigma > 0.0) {
        return Err(StatsError::NonpositiveSigma { got: sigma });
    }
    let alpha = mu / sigma;
    let pdf = normal_pdf(alpha);
    let cdf = normal_cdf(alpha);
    let mean = (sigma * pdf + mu * cdf).max(0.0);
    let variance = ((mu * mu + sigma * sigma) * cdf + mu * sigma * pdf - mean * mean).max(0.0);
    Ok(MomentPair { mean, variance })
}

/// Pre-activation Gaussian parameters entering one layer.
///
/// `mu` and `sigma` describe the approximately Gaussian pre-activation of
/// layer `layer_index`, so `alpha = mu/sigma` directly and
/// `active_fraction = cdf(alpha)` is the predicted fraction of live units.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LayerStats {
    pub layer_index: usize,
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub active_fraction: f64,
}

/// Output of [`propagate_theory`].
#[derive(Clone, Debug, Serialize)]
pub struct PropagationReport {
    pub layers: Vec<LayerStats>,
    /// Set when the widths are not non-increasing; the recursion still runs
    /// but its Gaussian approximation is derived under shrinking widths.
    pub non_monotone_widths: bool,
}

/// Iterate the mean-field recursion for a ReLU network with aligned
/// semi-orthogonal layers.
///
/// Inputs have i.i.d. components with moments `(mu0, sigma0^2)`. Each layer
/// maps post-activation moments `(mu, sigma^2)` at width `N_prev` to
/// pre-activation moments `(sqrt(N_prev/N_next)*mu, sigma^2)`, then applies
/// [`rectified_moments`]. One [`LayerStats`] row is produced per layer of
/// `widths` after the first.
pub fn propagate_theory(
    widths: &[usize],
    mu0: f64,
    sigma0: f64,
) -> Result<PropagationReport, StatsError> {
    if !(sigma0 > 0.0) {
        return Err(StatsError::NonpositiveSigma { got: sigma0 });
    }
    let non_monotone = widths.windows(2).any(|w| w[1] > w[0]);
    let mut layers = Vec::with_capacity(widths.len().saturating_sub(1));
    let mut mu = mu0;
    let mut var = sigma0 * sigma0;
    for (idx, pair) in widths.windows(2).enumerate() {
        let (n_prev, n_next) = (pair[0] as f64, pair[1] as f64);
        let pre_mu = (n_prev / n_next).sqrt() * mu;
        let pre_sigma = var.sqrt();
        let alpha = pre_mu / pre_sigma;
        layers.push(LayerStats {
            layer_index: idx + 1,
            mu: pre_mu,
            sigma: pre_sigma,
            alpha,
            active_fraction: normal_cdf(alpha),
        });
        let post = rectified_moments(pre_mu, pre_sigma)?;
        mu = post.mean;
        var = post.variance;
    }
    Ok(PropagationReport {
        layers,
        non_monotone_widths: non_monotone,
    })
}

/// Input laws with i.i.d. components used by the Monte-Carlo checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum InputDistribution {
    Normal { mean: f64, std: f64 },
    /// `shift + scale * chi2(k)`.
    ChiSquared { k: f64, shift: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl InputDistribution {
    pub fn standard_normal() -> Self {
        Self::Normal { mean: 0.0, std: 1.0 }
    }

    pub fn chi_squared(k: f64) -> Self {
        Self::ChiSquared {
            k,
            shift: 0.0,
            scale: 1.0,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Normal { mean, .. } => *mean,
            Self::ChiSquared { k, shift, scale } => shift + scale * k,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Self::Normal { std, .. } => std * std,
            Self::ChiSquared { k, scale, .. } => scale * scale * 2.0 * k,
            Self::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
        }
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }

    fn sampler(&self) -> Result<Sampler, StatsError> {
        match *self {
            Self::Normal { mean, std } => Normal::new(mean, std)
                .map(Sampler::Normal)
                .map_err(|e| StatsError::UnsupportedDistribution(format!("normal: {e}"))),
            Self::ChiSquared { k, shift, scale } => {
                if !scale.is_finite() || !shift.is_finite() {
                    return Err(StatsError::UnsupportedDistribution(
                        "chi-squared: shift and scale must be finite".into(),
                    ));
                }
                ChiSquared::new(k)
                    .map(|d| Sampler::ChiSquared {
                        dist: d,
                        shift,
                        scale,
                    })
                    .map_err(|e| StatsError::UnsupportedDistribution(format!("chi-squared: {e}")))
            }
            Self::Uniform { lo, hi } => {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(StatsError::UnsupportedDistribution(format!(
                        "uniform: need finite lo < hi, got [{lo}, {hi}]"
                    )));
                }
                Ok(Sampler::Uniform(Uniform::new_inclusive(lo, hi)))
            }
        }
    }
}

impl fmt::Display for InputDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Normal { mean, std } => write!(f, "normal:{mean},{std}"),
            Self::ChiSquared { k, shift, scale } => {
                if *shift == 0.0 && *scale == 1.0 {
                    write!(f, "chisq:{k}")
                } else {
                    write!(f, "chisq:{k},{shift},{scale}")
                }
            }
            Self::Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
        }
    }
}

impl FromStr for InputDistribution {
    type Err = StatsError;

    /// Accepts `normal[:mean,std]`, `chisq<k>`, `chisq:k[,shift,scale]`,
    /// and `uniform[:lo,hi]`.
    fn from_str(s: &str) -> Result<Self, StatsError> {
        let bad = || StatsError::UnsupportedDistribution(s.to_string());
        let lower = s.trim().to_ascii_lowercase();
        let (head, args) = match lower.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (lower.as_str(), None),
        };
        let nums = |a: Option<&str>| -> Result<Vec<f64>, StatsError> {
            match a {
                None => Ok(Vec::new()),
                Some(a) => a
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
                    .collect(),
            }
        };
        match head {
            "normal" | "gaussian" => match nums(args)?.as_slice() {
                [] => Ok(Self::standard_normal()),
                [mean, std] => Ok(Self::Normal {
                    mean: *mean,
                    std: *std,
                }),
                _ => Err(bad()),
            },
            "uniform" => match nums(args)?.as_slice() {
                [] => Ok(Self::Uniform { lo: 0.0, hi: 1.0 }),
                [lo, hi] => Ok(Self::Uniform { lo: *lo, hi: *hi }),
                _ => Err(bad()),
            },
            "chisq" | "chi2" => match nums(args)?.as_slice() {
                [k] => Ok(Self::chi_squared(*k)),
                [k, shift, scale] => Ok(Self::ChiSquared {
                    k: *k,
                    shift: *shift,
                    scale: *scale,
                }),
                _ => Err(bad()),
            },
            _ => {
                // Compact form like "chisq3".
                if let Some(k) = head.strip_prefix("chisq").or(head.strip_prefix("chi2")) {
                    if args.is_none() {
                        if let Ok(k) = k.parse::<f64>() {
                            return Ok(Self::chi_squared(k));
                        }
                    }
                }
                Err(bad())
            }
        }
    }
}

enum Sampler {
    Normal(Normal<f64>),
    ChiSquared {
        dist: ChiSquared<f64>,
        shift: f64,
        scale: f64,
    },
    Uniform(Uniform<f64>),
}

impl Sampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Normal(d) => d.sample(rng),
            Self::ChiSquared { dist, shift, scale } => shift + scale * dist.sample(rng),
            Self::Uniform(d) => d.sample(rng),
        }
    }
}

/// Empirical check of moment transport through a fixed aligned matrix.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentReport {
    pub rows: usize,
    pub cols: usize,
    pub trials: usize,
    /// Predicted common component mean, `mean(x) * sqrt(n/m)`.
    pub predicted_mean: f64,
    /// Predicted common component variance, `var(x)`.
    pub predicted_variance: f64,
    pub max_mean_dev: f64,
    pub max_var_dev: f64,
    pub max_cov_dev: f64,
    /// Deviations in empirical standard-error units.
    pub max_mean_z: f64,
    pub max_var_z: f64,
    pub max_cov_z: f64,
}

impl MomentReport {
    /// True when every deviation sits inside `band` standard errors.
    pub fn within(&self, band: f64) -> bool {
        self.max_mean_z <= band && self.max_var_z <= band && self.max_cov_z <= band
    }
}

/// Estimate component means and the covariance of `W x` over `trials`
/// draws of `x` with i.i.d. components, and compare with the predicted
/// mean vector and covariance. Deviation z-scores use empirical standard
/// errors: `sd/sqrt(T)` for means, `sqrt((m4 - v^2)/T)` for variances, and
/// `sqrt((v_i v_j + c_ij^2)/T)` for covariances.
pub fn empirical_transport<R: Rng + ?Sized>(
    w: &AlignedSemiOrthogonal,
    dist: &InputDistribution,
    trials: usize,
    rng: &mut R,
) -> Result<MomentReport, StatsError> {
    assert!(trials >= 2, "need at least two trials for variances");
    let sampler = dist.sampler()?;
    let m = w.rows();
    let n = w.cols();
    let t = trials as f64;

    let mut s1 = vec![0.0f64; m];
    let mut s2 = vec![0.0f64; m];
    let mut s3 = vec![0.0f64; m];
    let mut s4 = vec![0.0f64; m];
    // Upper-triangle cross products, row-packed.
    let mut cross = vec![0.0f64; m * (m - 1) / 2];
    let mut x = vec![0.0f64; n];
    for _ in 0..trials {
        for v in x.iter_mut() {
            *v = sampler.sample(rng);
        }
        let y = w.matrix().matvec(&x).expect("shape fixed");
        let mut k = 0;
        for i in 0..m {
            let yi = y[i];
            let sq = yi * yi;
            s1[i] += yi;
            s2[i] += sq;
            s3[i] += sq * yi;
            s4[i] += sq * sq;
            for &yj in &y[i + 1..] {
                cross[k] += yi * yj;
                k += 1;
            }
        }
    }

    let predicted_mean = dist.mean() * (n as f64 / m as f64).sqrt();
    let predicted_variance = dist.variance();

    let mean: Vec<f64> = s1.iter().map(|s| s / t).collect();
    let mut var = vec![0.0f64; m];
    let mut max_mean_dev = 0.0f64;
    let mut max_mean_z = 0.0f64;
    let mut max_var_dev = 0.0f64;
    let mut max_var_z = 0.0f64;
    for i in 0..m {
        let mu = mean[i];
        let v = (s2[i] / t - mu * mu).max(0.0);
        var[i] = v;
        let m4 = (s4[i] / t - 4.0 * mu * s3[i] / t + 6.0 * mu * mu * s2[i] / t
            - 3.0 * mu * mu * mu * mu)
            .max(0.0);
        let mean_dev = (mu - predicted_mean).abs();
        let var_dev = (v - predicted_variance).abs();
        max_mean_dev = max_mean_dev.max(mean_dev);
        max_var_dev = max_var_dev.max(var_dev);
        max_mean_z = max_mean_z.max(mean_dev / (v / t).sqrt());
        max_var_z = max_var_z.max(var_dev / ((m4 - v * v).max(f64::MIN_POSITIVE) / t).sqrt());
    }

    let mut max_cov_dev = 0.0f64;
    let mut max_cov_z = 0.0f64;
    let mut k = 0;
    for i in 0..m {
        for j in i + 1..m {
            let c = cross[k] / t - mean[i] * mean[j];
            k += 1;
            let se = ((var[i] * var[j] + c * c) / t).sqrt();
            max_cov_dev = max_cov_dev.max(c.abs());
            max_cov_z = max_cov_z.max(c.abs() / se);
        }
    }

    Ok(MomentReport {
        rows: m,
        cols: n,
        trials,
        predicted_mean,
        predicted_variance,
        max_mean_dev,
        max_var_dev,
        max_cov_dev,
        max_mean_z,
        max_var_z,
        max_cov_z,
    })
}

/// Kolmogorov-Smirnov statistic of a sample against the standard normal.
pub fn ks_statistic_standard_normal(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in sorted.iter().enumerate() {
        let f = normal_cdf(*x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Distance of one projected coordinate from normality.
///
/// Draws a single aligned matrix W of shape m x n, samples `trials` input
/// vectors with i.i.d. components from `dist`, standardizes the first
/// coordinate of `W x` by its exact mean `mean(x)*sqrt(n/m)` and std
/// `std(x)`, and returns the Kolmogorov-Smirnov statistic against the
/// standard normal. Only the first row of W enters the sampling loop.
pub fn clt_distance<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    dist: &InputDistribution,
    trials: usize,
    rng: &mut R,
) -> Result<f64, StatsError> {
    let sampler = dist.sampler()?;
    let w = generate_alg2(m, n, rng)?;
    let row0 = w.matrix().row(0);
    let shift = dist.mean() * (n as f64 / m as f64).sqrt();
    let scale = dist.std();
    let mut x = vec![0.0f64; n];
    let mut z = Vec::with_capacity(trials);
    for _ in 0..trials {
        for v in x.iter_mut() {
            *v = sampler.sample(rng);
        }
        z.push((dot(row0, &x) - shift) / scale);
    }
    Ok(ks_statistic_standard_normal(&z))
}
