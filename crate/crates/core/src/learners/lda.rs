//! Two-class linear discriminant analysis with a ridge-stabilized pooled
//! covariance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaFit {
    pub mean_positive: Vec<f64>,
    pub mean_negative: Vec<f64>,
    pub prior_positive: f64,
    /// Discriminant direction `Σ⁻¹(μ₊ − μ₋)`.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub ridge: f64,
}

impl LdaFit {
    /// Posterior log-odds of the positive class.
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>()
    }
}

/// Ridge added to the pooled covariance diagonal: `scale · trace/p`, falling
/// back to `scale` when the trace is zero.
pub fn lda_ridge(trace: f64, p: usize, scale: f64) -> f64 {
    let r = scale * trace / p.max(1) as f64;
    if r > 0.0 {
        r
    } else {
        scale
    }
}

pub fn fit_lda(x: &Matrix, positive: &[bool], ridge_scale: f64) -> Result<LdaFit, LearnError> {
    let n = x.nrows();
    let p = x.ncols();
    let n_pos = positive.iter().filter(|&&b| b).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(LearnError::SingleClass);
    }
    let mut mu_pos = vec![0.0; p];
    let mut mu_neg = vec![0.0; p];
    for (row, &pos) in x.rows_iter().zip(positive) {
        let m = if pos { &mut mu_pos } else { &mut mu_neg };
        for (a, v) in m.iter_mut().zip(row) {
            *a += v;
        }
    }
    mu_pos.iter_mut().for_each(|v| *v /= n_pos as f64);
    mu_neg.iter_mut().for_each(|v| *v /= n_neg as f64);

    let mut cov = DMatrix::<f64>::zeros(p, p);
    let mut centered = vec![0.0; p];
    for (row, &pos) in x.rows_iter().zip(positive) {
        let m = if pos { &mu_pos } else { &mu_neg };
        for j in 0..p {
            centered[j] = row[j] - m[j];
        }
        for a in 0..p {
            if centered[a] == 0.0 {
                continue;
            }
            for b in a..p {
                cov[(a, b)] += centered[a] * centered[b];
            }
        }
    }
    let dof = if n > 2 { (n - 2) as f64 } else { 1.0 };
    for a in 0..p {
        for b in a..p {
            cov[(a, b)] /= dof;
            cov[(b, a)] = cov[(a, b)];
        }
    }
    let ridge = lda_ridge(cov.trace(), p, ridge_scale);
    for a in 0..p {
        cov[(a, a)] += ridge;
    }
    let diff = DVector::from_iterator(p, mu_pos.iter().zip(&mu_neg).map(|(a, b)| a - b));
    let w = match cov.clone().cholesky() {
        Some(c) => c.solve(&diff),
        None => cov
            .lu()
            .solve(&diff)
            .ok_or_else(|| LearnError::Numerical("singular pooled covariance".into()))?,
    };
    let weights: Vec<f64> = w.iter().copied().collect();
    let mid: f64 = mu_pos
        .iter()
        .zip(&mu_neg)
        .zip(&weights)
        .map(|((a, b), w)| 0.5 * (a + b) * w)
        .sum();
    let prior_positive = n_pos as f64 / n as f64;
    let intercept = -mid + (n_pos as f64 / n_neg as f64).ln();
    Ok(LdaFit {
        mean_positive: mu_pos,
        mean_negative: mu_neg,
        prior_positive,
        weights,
        intercept,
        ridge,
    })
}
