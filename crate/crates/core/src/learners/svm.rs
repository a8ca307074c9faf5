//! C-SVM with an RBF kernel, solved by SMO with second-order working-set
//! selection, and Platt scaling of the decision values.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

const TAU: f64 = 1e-12;

pub fn rbf(u: &[f64], v: &[f64], gamma: f64) -> f64 {
    let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

/// Dense symmetric kernel matrix over the rows of `x`.
pub fn gram_matrix(x: &Matrix, gamma: f64) -> Vec<f64> {
    let n = x.nrows();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let v = rbf(x.row(i), x.row(j), gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Default kernel width `1/(p · mean column variance)`, or 1 when the columns
/// have no spread.
pub fn default_gamma(x: &Matrix) -> f64 {
    let p = x.ncols();
    let n = x.nrows();
    if p == 0 || n == 0 {
        return 1.0;
    }
    let mut total = 0.0;
    for c in 0..p {
        let col = x.column(c);
        let mean = col.iter().sum::<f64>() / n as f64;
        total += col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    }
    let mean_var = total / p as f64;
    if mean_var > 0.0 {
        1.0 / (p as f64 * mean_var)
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Offset subtracted from the kernel expansion: `f(x) = Σ αᵢyᵢK(xᵢ,x) − rho`.
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Dual objective in minimization form, `½ αᵀQα − Σα` with `Q = yyᵀ∘K`.
pub fn dual_objective(kernel: &[f64], y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel[i * n + j];
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

/// Solves `min ½αᵀQα − eᵀα` subject to `0 ≤ α ≤ c`, `yᵀα = 0`, for labels in
/// {−1, +1} and a row-major `n×n` kernel matrix. `tol` bounds the maximal
/// KKT violation at termination.
pub fn smo(kernel: &[f64], y: &[f64], c: f64, tol: f64, max_iter: usize) -> SmoSolution {
    let n = y.len();
    assert_eq!(kernel.len(), n * n);
    let k = |i: usize, j: usize| kernel[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;
    while iterations < max_iter {
        // i maximizes −y·G over I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut gmax_idx = None;
        for t in 0..n {
            let in_up = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if in_up {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    gmax_idx = Some(t);
                }
            }
        }
        let Some(i) = gmax_idx else {
            converged = true;
            break;
        };
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best_obj = f64::INFINITY;
        let mut gmin_idx = None;
        for t in 0..n {
            let in_low = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
            if !in_low {
                continue;
            }
            let v = y[t] * grad[t];
            if v > gmax2 {
                gmax2 = v;
            }
            let grad_diff = gmax + v;
            if grad_diff > 0.0 {
                let quad = k(i, i) + k(t, t) - 2.0 * k(i, t);
                let obj = -grad_diff * grad_diff / if quad > 0.0 { quad } else { TAU };
                if obj < best_obj {
                    best_obj = obj;
                    gmin_idx = Some(t);
                }
            }
        }
        if gmax + gmax2 < tol {
            converged = true;
            break;
        }
        let Some(j) = gmin_idx else {
            converged = true;
            break;
        };
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = {
            let q = k(i, i) + k(j, j) - 2.0 * k(i, j);
            if q > 0.0 {
                q
            } else {
                TAU
            }
        };
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(t, i) * di + y[j] * k(t, j) * dj);
        }
    }
    let rho = compute_rho(y, &alpha, &grad, c);
    SmoSolution {
        alpha,
        rho,
        iterations,
        converged,
    }
}

fn compute_rho(y: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..y.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else {
        0.0
    }
}

/// Fits `P(y=1|f) = 1/(1+exp(A·f + B))` by Newton's method with backtracking
/// on Platt's regularized targets.
pub fn platt_fit(decision: &[f64], positive: &[bool]) -> (f64, f64) {
    let n_pos = positive.iter().filter(|&&p| p).count() as f64;
    let n_neg = positive.len() as f64 - n_pos;
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    let t: Vec<f64> = positive.iter().map(|&p| if p { hi } else { lo }).collect();
    let mut a = 0.0;
    let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).ln();
    let objective = |a: f64, b: f64| -> f64 {
        decision
            .iter()
            .zip(&t)
            .map(|(&f, &ti)| {
                let fab = f * a + b;
                if fab >= 0.0 {
                    ti * fab + (1.0 + (-fab).exp()).ln()
                } else {
                    (ti - 1.0) * fab + (1.0 + fab.exp()).ln()
                }
            })
            .sum()
    };
    let min_step = 1e-10;
    let sigma = 1e-12;
    let eps = 1e-5;
    let mut fval = objective(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (sigma, sigma, 0.0, 0.0, 0.0);
        for (&f, &ti) in decision.iter().zip(&t) {
            let fab = f * a + b;
            let (p, q) = if fab >= 0.0 {
                let e = (-fab).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = fab.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < eps && g2.abs() < eps {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        let mut moved = false;
        while step >= min_step {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                moved = true;
                break;
            }
            step /= 2.0;
        }
        if !moved {
            break;
        }
    }
    (a, b)
}

/// Fitted classifier: support vectors with their `αᵢyᵢ` coefficients and the
/// Platt sigmoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmFit {
    pub gamma: f64,
    pub support: Matrix,
    pub dual_coef: Vec<f64>,
    pub rho: f64,
    pub platt_a: f64,
    pub platt_b: f64,
}

impl SvmFit {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.support
            .rows_iter()
            .zip(&self.dual_coef)
            .map(|(sv, c)| c * rbf(sv, row, self.gamma))
            .sum::<f64>()
            - self.rho
    }

    /// Calibrated log-odds of the positive class.
    pub fn margin(&self, row: &[f64]) -> f64 {
        -(self.platt_a * self.decision(row) + self.platt_b)
    }
}

pub struct SvmTraining {
    pub fit: SvmFit,
    pub converged: bool,
}

pub fn fit_svm(x: &Matrix, positive: &[bool], c: f64, gamma: f64, tol: f64, max_iter: usize) -> SvmTraining {
    let y: Vec<f64> = positive.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect();
    let kernel = gram_matrix(x, gamma);
    let sol = smo(&kernel, &y, c, tol, max_iter);
    let n = y.len();
    let decision: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| sol.alpha[j] > 0.0)
                .map(|j| sol.alpha[j] * y[j] * kernel[i * n + j])
                .sum::<f64>()
                - sol.rho
        })
        .collect();
    let (platt_a, platt_b) = platt_fit(&decision, positive);
    let sv: Vec<usize> = (0..n).filter(|&i| sol.alpha[i] > 0.0).collect();
    SvmTraining {
        fit: SvmFit {
            gamma,
            support: x.select_rows(&sv),
            dual_coef: sv.iter().map(|&i| sol.alpha[i] * y[i]).collect(),
            rho: sol.rho,
            platt_a,
            platt_b,
        },
        converged: sol.converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_is_separated() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]);
        let positive = [true, true, false, false];
        let t = fit_svm(&x, &positive, 10.0, 1.0, 1e-3, 100_000);
        assert!(t.converged);
        for (row, &p) in x.rows_iter().zip(&positive) {
            assert_eq!(t.fit.decision(row) > 0.0, p);
        }
    }

    #[test]
    fn constraints_hold() {
        let x = Matrix::from_rows(&[[0.0], [0.3], [0.5], [0.9], [1.2], [2.0]]);
        let y = [-1.0, 1.0, -1.0, 1.0, -1.0, 1.0];
        let k = gram_matrix(&x, 2.0);
        let sol = smo(&k, &y, 1.0, 1e-3, 100_000);
        assert!(sol.converged);
        assert!(sol.alpha.iter().all(|&a| (0.0..=1.0).contains(&a)));
        let eq: f64 = sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
        assert!(eq.abs() < 1e-12);
    }

    #[test]
    fn platt_orders_probabilities_with_decisions() {
        let f = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
        let (a, _) = platt_fit(&f, &[false, false, true, false, true, true]);
        assert!(a < 0.0);
    }
}
