//! Concave penalties `r(lambda)` on the dual variable: the negated chi-square
//! and negated Kullback-Leibler divergences from the empirical node weights.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Lower clamp applied to `lambda_i` before taking logs.
pub const KL_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizerKind {
    Chi2,
    Kl,
}

impl fmt::Display for RegularizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegularizerKind::Chi2 => "chi2",
            RegularizerKind::Kl => "kl",
        })
    }
}

impl FromStr for RegularizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "chi2" => Ok(RegularizerKind::Chi2),
            "kl" => Ok(RegularizerKind::Kl),
            other => Err(Error::Param(format!("unknown regularizer {other:?}"))),
        }
    }
}

/// `alpha * r(lambda)` with `r = -divergence(lambda || p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Regularizer {
    pub kind: RegularizerKind,
    pub alpha: f64,
    weights: Vec<f64>,
}

impl Regularizer {
    pub fn new(kind: RegularizerKind, alpha: f64, weights: Vec<f64>) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::Param(format!(
                "alpha must be finite and >= 0, got {alpha}"
            )));
        }
        if weights.is_empty() || weights.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Param("reference weights must be positive".into()));
        }
        Ok(Regularizer {
            kind,
            alpha,
            weights,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Unscaled `r(lambda)` and its gradient.
    pub fn value_grad(&self, lambda: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(
            lambda.len(),
            self.weights.len(),
            "regularizer: dimension mismatch"
        );
        let p = &self.weights;
        match self.kind {
            RegularizerKind::Chi2 => {
                let mut value = 0.0;
                let grad = lambda
                    .iter()
                    .zip(p)
                    .map(|(&l, &pi)| {
                        value -= (l - pi) * (l - pi) / pi;
                        -2.0 * (l - pi) / pi
                    })
                    .collect();
                (value, grad)
            }
            RegularizerKind::Kl => {
                let mut value = 0.0;
                let grad = lambda
                    .iter()
                    .zip(p)
                    .map(|(&l, &pi)| {
                        let l = l.max(KL_FLOOR);
                        let log = (l / pi).ln();
                        value -= l * log;
                        -(log + 1.0)
                    })
                    .collect();
                (value, grad)
            }
        }
    }

    pub fn value(&self, lambda: &[f64]) -> f64 {
        self.value_grad(lambda).0
    }

    /// Strong-concavity modulus of `alpha * r` on the simplex
    /// (chi-square: `2 alpha / max p`; KL: `alpha`, from `1/lambda >= 1`).
    pub fn concavity(&self) -> f64 {
        let pmax = self.weights.iter().copied().fold(0.0, f64::max);
        match self.kind {
            RegularizerKind::Chi2 => 2.0 * self.alpha / pmax,
            RegularizerKind::Kl => self.alpha,
        }
    }

    /// Smoothness of `alpha * r` in lambda (chi-square: `2 alpha / min p`).
    /// KL is only smooth away from the boundary; the floor bounds it.
    pub fn smoothness(&self) -> f64 {
        let pmin = self.weights.iter().copied().fold(f64::INFINITY, f64::min);
        match self.kind {
            RegularizerKind::Chi2 => 2.0 * self.alpha / pmin,
            RegularizerKind::Kl => self.alpha / KL_FLOOR,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi2_values() {
        let r = Regularizer::new(RegularizerKind::Chi2, 1.0, vec![0.5, 0.5]).unwrap();
        let (v, g) = r.value_grad(&[0.5, 0.5]);
        assert_eq!(v, 0.0);
        assert_eq!(g, vec![0.0, 0.0]);
        let (v, g) = r.value_grad(&[0.75, 0.25]);
        assert!((v + 0.25).abs() < 1e-15);
        assert_eq!(g, vec![-1.0, 1.0]);
    }

    #[test]
    fn kl_at_reference_is_normal_to_simplex() {
        let p = vec![0.2, 0.3, 0.5];
        let r = Regularizer::new(RegularizerKind::Kl, 1.0, p.clone()).unwrap();
        let (v, g) = r.value_grad(&p);
        assert!(v.abs() < 1e-15);
        let mean = g.iter().sum::<f64>() / 3.0;
        assert!(g.iter().all(|x| (x - mean).abs() < 1e-15));
    }

    #[test]
    fn kl_boundary_is_finite() {
        let r = Regularizer::new(RegularizerKind::Kl, 1.0, vec![0.5, 0.5]).unwrap();
        let (v, g) = r.value_grad(&[1.0, 0.0]);
        assert!(v.is_finite() && g.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(Regularizer::new(RegularizerKind::Chi2, -1.0, vec![1.0]).is_err());
        assert!(Regularizer::new(RegularizerKind::Chi2, 1.0, vec![0.0, 1.0]).is_err());
        assert!("l2".parse::<RegularizerKind>().is_err());
    }
}
