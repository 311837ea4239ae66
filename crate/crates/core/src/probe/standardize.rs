use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Column-wise z-score parameters. Population variance (divisor n);
/// zero-variance columns get scale 1 so they standardise to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::Insufficient("standardizer needs at least one row".into()));
        }
        if !x.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        let (n, d) = (x.rows(), x.cols());
        let mut means = vec![0.0; d];
        for row in x.iter_rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; d];
        for row in x.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&means) {
                let c = v - m;
                *s += c * c;
            }
        }
        let scales = var
            .iter()
            .zip(&means)
            .map(|(s, m)| {
                let sd = (s / n as f64).sqrt();
                if sd <= 1e-12 * m.abs().max(1.0) {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Self { means, scales })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(row).zip(&self.means).zip(&self.scales) {
            *o = (v - m) / s;
        }
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.cols(),
            });
        }
        let mut out = Matrix::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            self.transform_row(x.row(i), out.row_mut(i));
        }
        Ok(out)
    }

    pub fn invert(&self, z: &Matrix) -> Result<Matrix> {
        if z.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.cols(),
            });
        }
        let mut out = Matrix::zeros(z.rows(), z.cols());
        for i in 0..z.rows() {
            for (j, o) in out.row_mut(i).iter_mut().enumerate() {
                *o = z.get(i, j) * self.scales[j] + self.means[j];
            }
        }
        Ok(out)
    }
}
