//! ReLU-family activations with pointwise derivatives.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Published self-normalizing constants.
pub const SELU_LAMBDA: f64 = 1.0507009873554805;
pub const SELU_ALPHA: f64 = 1.6732632423543772;

pub const LEAKY_DEFAULT_SLOPE: f64 = 0.01;
pub const PRELU_DEFAULT_SLOPE: f64 = 0.25;
pub const ELU_DEFAULT_ALPHA: f64 = 1.0;

#[derive(Debug, Error)]
#[error("unknown activation {0:?}")]
pub struct ActivationParseError(String);

/// Activation families used in the experiments. PReLU's slope is a
/// trainable parameter shared across one layer; the others are fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ActivationKind {
    Relu,
    LeakyRelu { slope: f64 },
    Prelu { initial_slope: f64 },
    Elu { alpha: f64 },
    Selu,
}

impl ActivationKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Relu => "relu",
            Self::LeakyRelu { .. } => "leaky_relu",
            Self::Prelu { .. } => "prelu",
            Self::Elu { .. } => "elu",
            Self::Selu => "selu",
        }
    }

    /// PReLU trains its slope; everything else has fixed parameters.
    pub fn has_trainable_slope(&self) -> bool {
        matches!(self, Self::Prelu { .. })
    }

    pub fn initial_slope(&self) -> f64 {
        match self {
            Self::Prelu { initial_slope } => *initial_slope,
            _ => 0.0,
        }
    }

    /// Pointwise activation value; `slope` is the current trainable slope
    /// and is only read by PReLU.
    pub fn apply(&self, x: f64, slope: f64) -> f64 {
        if x > 0.0 {
            return match self {
                Self::Selu => SELU_LAMBDA * x,
                _ => x,
            };
        }
        match self {
            Self::Relu => 0.0,
            Self::LeakyRelu { slope } => slope * x,
            Self::Prelu { .. } => slope * x,
            Self::Elu { alpha } => alpha * x.exp_m1(),
            Self::Selu => SELU_LAMBDA * SELU_ALPHA * x.exp_m1(),
        }
    }

    /// Derivative with respect to the pre-activation at `x`. The kink at 0
    /// uses the left branch, matching [`apply`]'s `x > 0` test.
    pub fn grad(&self, x: f64, slope: f64) -> f64 {
        if x > 0.0 {
            return match self {
                Self::Selu => SELU_LAMBDA,
                _ => 1.0,
            };
        }
        match self {
            Self::Relu => 0.0,
            Self::LeakyRelu { slope } => *slope,
            Self::Prelu { .. } => slope,
            Self::Elu { alpha } => alpha * x.exp(),
            Self::Selu => SELU_LAMBDA * SELU_ALPHA * x.exp(),
        }
    }

    /// Derivative with respect to the trainable slope; zero for every
    /// family but PReLU, where it is `x` on the negative branch.
    pub fn slope_grad(&self, x: f64) -> f64 {
        match self {
            Self::Prelu { .. } if x <= 0.0 => x,
            _ => 0.0,
        }
    }

    /// A unit counts as dead when ReLU outputs exactly zero; the leaky
    /// variants never emit an exact zero, so the operative notion there is
    /// a negative pre-activation.
    pub fn is_dead(&self, pre: f64, post: f64) -> bool {
        match self {
            Self::Relu => post == 0.0,
            _ => pre < 0.0,
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = ActivationParseError;

    /// Accepts the family name, with `leaky_relu:<slope>`, `prelu:<slope>`,
    /// and `elu:<alpha>` overriding the defaults.
    fn from_str(s: &str) -> Result<Self, ActivationParseError> {
        let lower = s.trim().to_ascii_lowercase();
        let bad = || ActivationParseError(s.to_string());
        let (head, arg) = match lower.split_once(':') {
            Some((h, a)) => (h, Some(a.parse::<f64>().map_err(|_| bad())?)),
            None => (lower.as_str(), None),
        };
        match head {
            "relu" if arg.is_none() => Ok(Self::Relu),
            "selu" if arg.is_none() => Ok(Self::Selu),
            "leaky_relu" | "leaky" => Ok(Self::LeakyRelu {
                slope: arg.unwrap_or(LEAKY_DEFAULT_SLOPE),
            }),
            "prelu" => Ok(Self::Prelu {
                initial_slope: arg.unwrap_or(PRELU_DEFAULT_SLOPE),
            }),
            "elu" => Ok(Self::Elu {
                alpha: arg.unwrap_or(ELU_DEFAULT_ALPHA),
            }),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_values_and_grads() {
        let a = ActivationKind::Relu;
        assert_eq!(a.apply(2.0, 0.0), 2.0);
        assert_eq!(a.apply(-3.0, 0.0), 0.0);
        assert_eq!(a.grad(2.0, 0.0), 1.0);
        assert_eq!(a.grad(-3.0, 0.0), 0.0);
        assert!(a.is_dead(-1.0, 0.0));
        assert!(!a.is_dead(1.0, 1.0));
    }

    #[test]
    fn leaky_and_prelu_negative_branch() {
        let leaky = ActivationKind::LeakyRelu { slope: 0.01 };
        assert_eq!(leaky.apply(-2.0, 0.0), -0.02);
        assert_eq!(leaky.grad(-2.0, 0.0), 0.01);
        let prelu = ActivationKind::Prelu {
            initial_slope: 0.25,
        };
        assert_eq!(prelu.apply(-2.0, 0.3), -0.6);
        assert_eq!(prelu.grad(-2.0, 0.3), 0.3);
        assert_eq!(prelu.slope_grad(-2.0), -2.0);
        assert_eq!(prelu.slope_grad(2.0), 0.0);
        assert!(prelu.is_dead(-0.1, -0.025));
    }

    #[test]
    fn elu_and_selu_are_smooth_at_zero() {
        for kind in [
            ActivationKind::Elu { alpha: 1.0 },
            ActivationKind::Selu,
        ] {
            let eps = 1e-7;
            let below = kind.apply(-eps, 0.0);
            let above = kind.apply(eps, 0.0);
            assert!((above - below).abs() < 1e-6);
            // Derivative is continuous at 0 for ELU with alpha = 1 and for
            // SELU up to the lambda*(alpha - 1) gap; check the left limit.
            assert!((kind.grad(-eps, 0.0) - kind.grad(-1e-12, 0.0)).abs() < 1e-6);
        }
        let selu = ActivationKind::Selu;
        assert!((selu.apply(1.0, 0.0) - SELU_LAMBDA).abs() < 1e-15);
        assert!((selu.apply(-1e9, 0.0) + SELU_LAMBDA * SELU_ALPHA).abs() < 1e-9);
    }

    #[test]
    fn parsing_round_trips() {
        assert_eq!("relu".parse::<ActivationKind>().unwrap(), ActivationKind::Relu);
        assert_eq!(
            "leaky_relu".parse::<ActivationKind>().unwrap(),
            ActivationKind::LeakyRelu { slope: 0.01 }
        );
        assert_eq!(
            "elu:0.5".parse::<ActivationKind>().unwrap(),
            ActivationKind::Elu { alpha: 0.5 }
        );
        assert_eq!(
            "prelu:0.1".parse::<ActivationKind>().unwrap(),
            ActivationKind::Prelu { initial_slope: 0.1 }
        );
        assert!("swish".parse::<ActivationKind>().is_err());
        assert!("relu:2".parse::<ActivationKind>().is_err());
    }
}
