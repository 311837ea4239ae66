//! L2-regularised logistic probes (binary and multinomial).

use serde::{Deserialize, Serialize};

use super::lbfgs::{self, LbfgsOptions};
use super::standardize::Standardizer;
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub inverse_reg_c: f64,
    pub max_iter: usize,
    /// Tolerance on the max-abs gradient of the objective divided by n.
    pub grad_tol: f64,
    pub k_folds: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            inverse_reg_c: 1.0,
            max_iter: 4000,
            grad_tol: 1e-6,
            k_folds: 5,
            seed: 0,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inverse_reg_c > 0.0 && self.inverse_reg_c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.inverse_reg_c)));
        }
        if self.k_folds < 2 {
            return Err(Error::Config(format!("k_folds must be >= 2, got {}", self.k_folds)));
        }
        if self.max_iter < 1 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::Config("grad_tol must be positive".into()));
        }
        Ok(())
    }
}

#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// The penalised training objective over standardised inputs.
///
/// Binary (`n_classes == 2`), parameters `[w; b]`:
/// `½‖w‖² + C Σ ln(1 + exp(−yᵢ(w·xᵢ + b)))` with `yᵢ ∈ {−1, +1}`.
///
/// Multinomial, parameters `[W row-major; b]`:
/// `½‖W‖² + C Σ (logsumexp(W xᵢ + b) − (W xᵢ + b)_{yᵢ})`. Biases are not penalised.
pub struct LogisticObjective<'a> {
    pub x: &'a Matrix,
    pub y: &'a [usize],
    pub n_classes: usize,
    pub c: f64,
}

impl LogisticObjective<'_> {
    pub fn n_params(&self) -> usize {
        let d = self.x.cols();
        if self.n_classes == 2 {
            d + 1
        } else {
            self.n_classes * (d + 1)
        }
    }

    /// Objective value; gradient written into `grad`.
    pub fn value_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.x.cols();
        if self.n_classes == 2 {
            let (w, b) = (&theta[..d], theta[d]);
            let mut value = 0.5 * dot(w, w);
            grad[..d].copy_from_slice(w);
            grad[d] = 0.0;
            for (i, &yi) in self.y.iter().enumerate() {
                let row = self.x.row(i);
                let sign = if yi == 1 { 1.0 } else { -1.0 };
                let margin = sign * (dot(w, row) + b);
                value += self.c * softplus(-margin);
                let coef = -self.c * sign * sigmoid(-margin);
                grad[..d].iter_mut().zip(row).for_each(|(g, xj)| *g += coef * xj);
                grad[d] += coef;
            }
            value
        } else {
            let k = self.n_classes;
            let (wmat, bias) = theta.split_at(k * d);
            let mut value = 0.5 * dot(wmat, wmat);
            grad[..k * d].copy_from_slice(wmat);
            grad[k * d..].iter_mut().for_each(|g| *g = 0.0);
            let mut z = vec![0.0; k];
            for (i, &yi) in self.y.iter().enumerate() {
                let row = self.x.row(i);
                for c in 0..k {
                    z[c] = dot(&wmat[c * d..(c + 1) * d], row) + bias[c];
                }
                let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = z.iter().map(|v| (v - zmax).exp()).sum();
                let lse = zmax + sum.ln();
                value += self.c * (lse - z[yi]);
                for c in 0..k {
                    let p = (z[c] - lse).exp();
                    let coef = self.c * (p - if c == yi { 1.0 } else { 0.0 });
                    grad[c * d..(c + 1) * d]
                        .iter_mut()
                        .zip(row)
                        .for_each(|(g, xj)| *g += coef * xj);
                    grad[k * d + c] += coef;
                }
            }
            value
        }
    }
}

/// Convergence diagnostics of one fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    /// Max-abs gradient of the objective divided by n at the returned point.
    pub grad_max_abs: f64,
    pub converged: bool,
    pub objective: f64,
}

/// A trained linear probe acting on raw (unstandardised) inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProbe {
    pub standardizer: Standardizer,
    /// One row for binary probes, `k` rows otherwise.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub class_order: Vec<String>,
    pub fit: FitDiagnostics,
}

impl LinearProbe {
    pub fn is_binary(&self) -> bool {
        self.class_order.len() == 2
    }

    /// Signed score `w·standardize(x) + b`; positive favours `class_order[1]`.
    pub fn decision_score(&self, x: &[f64]) -> Result<f64> {
        if !self.is_binary() {
            return Err(Error::NotBinary(self.class_order.len()));
        }
        if x.len() != self.standardizer.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.standardizer.dim(),
                got: x.len(),
            });
        }
        let mut z = vec![0.0; x.len()];
        self.standardizer.transform_row(x, &mut z);
        Ok(dot(&self.weights[0], &z) + self.bias[0])
    }

    /// Per-class scores; a single score for binary probes.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.standardizer.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.standardizer.dim(),
                got: x.len(),
            });
        }
        let mut z = vec![0.0; x.len()];
        self.standardizer.transform_row(x, &mut z);
        Ok(self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| dot(w, &z) + b)
            .collect())
    }

    /// Class index. Binary ties (score exactly 0) go to class 1; multinomial
    /// ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let s = self.scores(x)?;
        Ok(predict_from_scores(&s))
    }

    pub fn accuracy(&self, x: &Matrix, y: &[usize]) -> Result<f64> {
        if x.rows() == 0 {
            return Err(Error::Insufficient("accuracy on zero rows".into()));
        }
        let mut hits = 0usize;
        for (i, &yi) in y.iter().enumerate() {
            if self.predict(x.row(i))? == yi {
                hits += 1;
            }
        }
        Ok(hits as f64 / x.rows() as f64)
    }

    /// Negate every weight and bias.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.weights.iter_mut().flatten().for_each(|w| *w = -*w);
        out.bias.iter_mut().for_each(|b| *b = -*b);
        out
    }
}

pub fn predict_from_scores(scores: &[f64]) -> usize {
    if scores.len() == 1 {
        return usize::from(scores[0] >= 0.0);
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Fit a standardiser on `x`, then minimise the penalised logistic objective.
/// `y[i]` indexes into `class_order`.
pub fn train_probe(x: &Matrix, y: &[usize], class_order: &[String], config: &ProbeConfig) -> Result<LinearProbe> {
    config.validate()?;
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            got: y.len(),
        });
    }
    let k = class_order.len();
    if let Some(&bad) = y.iter().find(|&&c| c >= k) {
        return Err(Error::Config(format!("label {bad} outside class_order of length {k}")));
    }
    let mut present = vec![false; k];
    y.iter().for_each(|&c| present[c] = true);
    let n_present = present.iter().filter(|p| **p).count();
    if k < 2 || n_present < 2 {
        return Err(Error::SingleClass(n_present));
    }

    let standardizer = Standardizer::fit(x)?;
    let z = standardizer.apply(x)?;
    let objective = LogisticObjective {
        x: &z,
        y,
        n_classes: k,
        c: config.inverse_reg_c,
    };
    let n = x.rows() as f64;
    let result = lbfgs::minimize(
        |theta, grad| {
            let v = objective.value_grad(theta, grad);
            grad.iter_mut().for_each(|g| *g /= n);
            v / n
        },
        vec![0.0; objective.n_params()],
        &LbfgsOptions {
            max_iter: config.max_iter,
            grad_tol: config.grad_tol,
            memory: 10,
        },
    );
    let d = x.cols();
    let (weights, bias) = if k == 2 {
        (vec![result.x[..d].to_vec()], vec![result.x[d]])
    } else {
        let (w, b) = result.x.split_at(k * d);
        (w.chunks(d).map(<[f64]>::to_vec).collect(), b.to_vec())
    };
    if !result.converged {
        log::warn!(
            "probe did not reach grad_tol after {} iterations (max |grad| = {:.3e})",
            result.iterations,
            result.grad_max_abs
        );
    }
    Ok(LinearProbe {
        standardizer,
        weights,
        bias,
        class_order: class_order.to_vec(),
        fit: FitDiagnostics {
            iterations: result.iterations,
            grad_max_abs: result.grad_max_abs,
            converged: result.converged,
            objective: result.value * n,
        },
    })
}
