//! Gradient boosting on the logistic loss: first-order trees with Newton
//! leaves, and second-order regularized trees.

use super::tree::{grow_tree, BinnedMatrix, Criterion, GrowParams};
use super::{log1p_exp, sigmoid, GbmParams, NewtonParams, TreeEnsemble};
use crate::matrix::Matrix;

/// Mean logistic loss of margins `f` against 0/1 targets.
pub fn log_loss(f: &[f64], y: &[f64]) -> f64 {
    f.iter().zip(y).map(|(&fi, &yi)| log1p_exp(fi) - yi * fi).sum::<f64>() / f.len().max(1) as f64
}

/// Log-odds of the positive rate, clamped away from infinity.
pub fn base_margin(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let p = (y.iter().sum::<f64>() / n).clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

/// Halves `step` until moving the margins of `rows` by it strictly lowers
/// their summed loss; returns 0 when no such step is found.
fn guarded_step(rows: &[usize], f: &[f64], y: &[f64], step: f64) -> f64 {
    if step == 0.0 || !step.is_finite() {
        return 0.0;
    }
    let loss = |d: f64| -> f64 {
        rows.iter()
            .map(|&i| {
                let m = f[i] + d;
                log1p_exp(m) - y[i] * m
            })
            .sum()
    };
    let current = loss(0.0);
    let mut s = step;
    for _ in 0..60 {
        if loss(s) < current {
            return s;
        }
        s *= 0.5;
    }
    0.0
}

pub struct BoostOutcome {
    pub ensemble: TreeEnsemble,
    /// Training log-loss before the first stage and after each stage.
    pub loss_trace: Vec<f64>,
}

/// Friedman-style boosting: each stage fits a least-squares regression tree
/// to the residuals `y − p`, then sets every leaf to the shrunk Newton step
/// `η·Σr/Σp(1−p)`.
pub fn fit_gbm(x: &Matrix, positive: &[bool], params: &GbmParams) -> BoostOutcome {
    let y: Vec<f64> = positive.iter().map(|&p| if p { 1.0 } else { 0.0 }).collect();
    let n = y.len();
    let binned = BinnedMatrix::new(x);
    let base = base_margin(&y);
    let mut f = vec![base; n];
    let mut trees = Vec::with_capacity(params.n_stages);
    let mut loss_trace = vec![log_loss(&f, &y)];
    let grow = GrowParams {
        max_depth: Some(params.max_depth),
        min_leaf: params.min_leaf,
        mtry: None,
    };
    for _ in 0..params.n_stages {
        let stats: Vec<[f64; 2]> = (0..n).map(|i| [y[i] - sigmoid(f[i]), 1.0]).collect();
        let eta = params.learning_rate;
        let tree = grow_tree::<rand_chacha::ChaCha8Rng>(
            &binned,
            (0..n).collect(),
            &stats,
            Criterion::LeastSquares,
            grow,
            None,
            |rows, _| {
                let (num, den) = rows.iter().fold((0.0, 0.0), |(a, b), &i| {
                    let p = sigmoid(f[i]);
                    (a + y[i] - p, b + p * (1.0 - p))
                });
                let gamma = if den.abs() < 1e-150 { 0.0 } else { num / den };
                guarded_step(rows, &f, &y, eta * gamma)
            },
        );
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += tree.predict(x.row(i));
        }
        loss_trace.push(log_loss(&f, &y));
        trees.push(tree);
    }
    let weights = vec![1.0; trees.len()];
    BoostOutcome {
        ensemble: TreeEnsemble { base, trees, weights },
        loss_trace,
    }
}

/// Second-order boosting: trees maximize the regularized gain on gradients
/// `p − y` and hessians `p(1−p)`; leaves take `−η·G/(H+λ)`.
pub fn fit_newton_boost(x: &Matrix, positive: &[bool], params: &NewtonParams) -> BoostOutcome {
    let y: Vec<f64> = positive.iter().map(|&p| if p { 1.0 } else { 0.0 }).collect();
    let n = y.len();
    let binned = BinnedMatrix::new(x);
    let base = base_margin(&y);
    let mut f = vec![base; n];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut loss_trace = vec![log_loss(&f, &y)];
    let criterion = Criterion::SecondOrder {
        lambda: params.lambda,
        gamma: params.gamma,
        min_child_hessian: params.min_child_hessian,
    };
    let grow = GrowParams {
        max_depth: Some(params.max_depth),
        min_leaf: 1,
        mtry: None,
    };
    for _ in 0..params.n_rounds {
        let stats: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let p = sigmoid(f[i]);
                [p - y[i], p * (1.0 - p)]
            })
            .collect();
        let eta = params.learning_rate;
        let lambda = params.lambda;
        let tree = grow_tree::<rand_chacha::ChaCha8Rng>(
            &binned,
            (0..n).collect(),
            &stats,
            criterion,
            grow,
            None,
            |rows, total| {
                let den = total[1] + lambda;
                let w = if den > 0.0 { -total[0] / den } else { 0.0 };
                guarded_step(rows, &f, &y, eta * w)
            },
        );
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += tree.predict(x.row(i));
        }
        loss_trace.push(log_loss(&f, &y));
        trees.push(tree);
    }
    let weights = vec![1.0; trees.len()];
    BoostOutcome {
        ensemble: TreeEnsemble { base, trees, weights },
        loss_trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_data() -> (Matrix, Vec<bool>) {
        let x = Matrix::from_vec(8, 1, (0..8).map(f64::from).collect());
        let y = vec![false, false, true, false, true, true, true, true];
        (x, y)
    }

    #[test]
    fn zero_stages_predict_base_rate() {
        let (x, y) = step_data();
        let out = fit_gbm(&x, &y, &GbmParams { n_stages: 0, ..GbmParams::default() });
        assert!((sigmoid(out.ensemble.margin(x.row(0))) - 5.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn single_stump_matches_closed_form_newton_leaf() {
        let (x, y) = step_data();
        let params = GbmParams {
            n_stages: 1,
            max_depth: 1,
            learning_rate: 1.0,
            min_leaf: 1,
        };
        let out = fit_gbm(&x, &y, &params);
        let p0 = 5.0 / 8.0;
        let t = &out.ensemble.trees[0];
        // least-squares split on residuals lands between rows 3 and 4
        let r_left = 3.0 * (0.0 - p0) + (1.0 - p0);
        let gamma = r_left / (4.0 * p0 * (1.0 - p0));
        assert!((t.predict(&[0.0]) - gamma).abs() < 1e-12);
        assert!((t.predict(&[3.0]) - gamma).abs() < 1e-12);
        assert_ne!(t.predict(&[4.0]), gamma);
        assert!(out.loss_trace[1] < out.loss_trace[0]);
    }

    #[test]
    fn large_lambda_pins_predictions_at_base() {
        let (x, y) = step_data();
        let params = NewtonParams {
            lambda: 1e12,
            ..NewtonParams::default()
        };
        let out = fit_newton_boost(&x, &y, &params);
        let base = out.ensemble.base;
        for row in x.rows_iter() {
            assert!((out.ensemble.margin(row) - base).abs() < 1e-9);
        }
    }
}
