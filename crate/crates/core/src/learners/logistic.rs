//! Ridge-stabilized logistic regression fitted by iteratively reweighted
//! least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{log1p_exp, sigmoid};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlsFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl IrlsFit {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum::<f64>()
    }
}

/// Penalized negative log-likelihood `Σ log(1+e^η) − y·η + ½·ridge·‖β_slopes‖²`.
pub fn penalized_nll(x: &Matrix, y: &[f64], intercept: f64, coef: &[f64], ridge: f64) -> f64 {
    let mut total = 0.0;
    for (row, &yi) in x.rows_iter().zip(y) {
        let eta = intercept + row.iter().zip(coef).map(|(a, b)| a * b).sum::<f64>();
        // same value as log(1+e^η) − y·η, without cancellation at large |η|
        total += yi * log1p_exp(-eta) + (1.0 - yi) * log1p_exp(eta);
    }
    total + 0.5 * ridge * coef.iter().map(|b| b * b).sum::<f64>()
}

/// Gradient of [`penalized_nll`], intercept first.
pub fn penalized_gradient(x: &Matrix, y: &[f64], intercept: f64, coef: &[f64], ridge: f64) -> Vec<f64> {
    let p = x.ncols();
    let mut g = vec![0.0; p + 1];
    for (row, &yi) in x.rows_iter().zip(y) {
        let eta = intercept + row.iter().zip(coef).map(|(a, b)| a * b).sum::<f64>();
        let r = sigmoid(eta) - yi;
        g[0] += r;
        for (gj, xj) in g[1..].iter_mut().zip(row) {
            *gj += r * xj;
        }
    }
    for (gj, b) in g[1..].iter_mut().zip(coef) {
        *gj += ridge * b;
    }
    g
}

/// Newton iterations on the penalized likelihood. The ridge applies to the
/// slopes only. Stops when the undamped Newton step changes no training
/// margin by more than `tol`, when progress has reached the rounding floor,
/// or after `max_iter` iterations; a step
/// that would raise the objective is halved until it does not.
pub fn irls(x: &Matrix, y: &[f64], ridge: f64, max_iter: usize, tol: f64) -> IrlsFit {
    let n = x.nrows();
    let p = x.ncols();
    let d = p + 1;
    let mut beta = vec![0.0; d];
    let mut objective = penalized_nll(x, y, 0.0, &beta[1..], ridge);
    let mut iterations = 0;
    let mut converged = false;
    let mut last_size = f64::INFINITY;
    while iterations < max_iter {
        iterations += 1;
        let mut hess = DMatrix::<f64>::zeros(d, d);
        let mut grad = DVector::<f64>::zeros(d);
        let mut z = vec![0.0; d];
        for i in 0..n {
            let row = x.row(i);
            z[0] = 1.0;
            z[1..].copy_from_slice(row);
            let eta: f64 = z.iter().zip(&beta).map(|(a, b)| a * b).sum();
            // y − μ and μ(1 − μ) without cancellation, so flipped labels give
            // exactly negated inputs.
            let (mu, nu) = (sigmoid(eta), sigmoid(-eta));
            let w = mu * nu;
            let r = if y[i] == 1.0 {
                nu
            } else if y[i] == 0.0 {
                -mu
            } else {
                y[i] - mu
            };
            for a in 0..d {
                grad[a] += r * z[a];
                if z[a] == 0.0 {
                    continue;
                }
                let wa = w * z[a];
                for b in a..d {
                    hess[(a, b)] += wa * z[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                hess[(a, b)] = hess[(b, a)];
            }
        }
        for j in 1..d {
            hess[(j, j)] += ridge;
            grad[j] -= ridge * beta[j];
        }
        let step = match hess.clone().cholesky() {
            Some(c) => c.solve(&grad),
            None => match hess.lu().solve(&grad) {
                Some(s) => s,
                None => break,
            },
        };
        // Size of the undamped step in margin space; directions the data
        // cannot see (collinear indicator groups) do not count.
        let newton_size = (0..n)
            .map(|i| (step[0] + x.row(i).iter().zip(step.iter().skip(1)).map(|(a, b)| a * b).sum::<f64>()).abs())
            .fold(0.0, f64::max);
        // Predicted decrease below the objective's rounding resolution while
        // the step has stopped shrinking: the rounding floor.
        let flat = step.dot(&grad) / 2.0 <= f64::EPSILON * (1.0 + objective.abs()) && newton_size > 0.5 * last_size;
        last_size = newton_size;
        let slack = 4.0 * f64::EPSILON * (1.0 + objective.abs());
        let mut scale = 1.0;
        let mut candidate = beta.clone();
        let mut accepted = false;
        for _ in 0..40 {
            for j in 0..d {
                candidate[j] = beta[j] + scale * step[j];
            }
            let obj = penalized_nll(x, y, candidate[0], &candidate[1..], ridge);
            // rounding noise in the objective must not veto a converging step
            if obj.is_finite() && obj <= objective + slack {
                objective = obj;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            converged = flat || newton_size < tol.sqrt();
            break;
        }
        beta = candidate;
        if flat || newton_size < tol {
            converged = true;
            break;
        }
    }
    IrlsFit {
        intercept: beta[0],
        coefficients: beta[1..].to_vec(),
        iterations,
        converged,
    }
}
