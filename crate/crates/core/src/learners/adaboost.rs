//! Discrete AdaBoost over weighted gini stumps.

use super::tree::{fit_cart_binned, BinnedMatrix, CartParams, DecisionTree};
use super::{AdaBoostParams, TreeEnsemble};
use crate::matrix::Matrix;

/// Error floor used for the stage weight of a perfect stump.
const MIN_ERROR: f64 = 1e-10;

pub fn stage_weight(error: f64) -> f64 {
    let e = error.clamp(MIN_ERROR, 1.0 - MIN_ERROR);
    0.5 * ((1.0 - e) / e).ln()
}

pub struct AdaBoostOutcome {
    pub ensemble: TreeEnsemble,
    /// Row weights in force when each stage was fitted.
    pub stage_row_weights: Vec<Vec<f64>>,
    pub stage_errors: Vec<f64>,
}

/// Stumps vote ±1 and are weighted by `α = ½ln((1−ε)/ε)`. Row weights are
/// multiplied by `exp(−α·y·h)` and renormalized. Stops early once a stump
/// has weighted error ≥ ½ (not added) or 0 (added, then stop).
pub fn fit_adaboost(x: &Matrix, positive: &[bool], params: &AdaBoostParams) -> AdaBoostOutcome {
    let n = x.nrows();
    let binned = BinnedMatrix::new(x);
    let rows: Vec<usize> = (0..n).collect();
    let stump = CartParams {
        max_depth: Some(1),
        min_leaf: 1,
        mtry: None,
    };
    let sign = |b: bool| if b { 1.0 } else { -1.0 };
    let mut w = vec![1.0 / n as f64; n];
    let mut trees: Vec<DecisionTree> = Vec::new();
    let mut alphas = Vec::new();
    let mut stage_row_weights = Vec::new();
    let mut stage_errors = Vec::new();
    for _ in 0..params.n_stumps {
        let mut tree = fit_cart_binned::<rand_chacha::ChaCha8Rng>(&binned, &rows, positive, &w, &stump, None);
        tree.map_leaves(|v| if v >= 0.5 { 1.0 } else { -1.0 });
        let h: Vec<f64> = (0..n).map(|i| tree.predict(x.row(i))).collect();
        let error: f64 = (0..n).filter(|&i| h[i] != sign(positive[i])).map(|i| w[i]).sum();
        if error >= 0.5 {
            break;
        }
        let alpha = stage_weight(error);
        stage_row_weights.push(w.clone());
        stage_errors.push(error);
        trees.push(tree);
        alphas.push(alpha);
        if error <= 0.0 {
            break;
        }
        for i in 0..n {
            w[i] *= (-alpha * sign(positive[i]) * h[i]).exp();
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
    }
    AdaBoostOutcome {
        ensemble: TreeEnsemble {
            base: 0.0,
            trees,
            weights: alphas,
        },
        stage_row_weights,
        stage_errors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_stage_weights_are_uniform_and_misclassified_rows_gain() {
        let x = Matrix::from_vec(6, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let y = [false, false, true, false, true, true];
        let out = fit_adaboost(&x, &y, &AdaBoostParams { n_stumps: 2 });
        assert!(out.stage_row_weights[0].iter().all(|&w| (w - 1.0 / 6.0).abs() < 1e-15));
        let alpha = out.ensemble.weights[0];
        let e = out.stage_errors[0];
        assert!((alpha - 0.5 * ((1.0 - e) / e).ln()).abs() < 1e-12);
        let w1 = &out.stage_row_weights[1];
        let first = &out.ensemble.trees[0];
        let (mut right, mut wrong) = (None, None);
        for i in 0..6 {
            let ok = (first.predict(x.row(i)) > 0.0) == y[i];
            if ok {
                right = Some(w1[i]);
            } else {
                wrong = Some(w1[i]);
            }
        }
        let ratio = wrong.unwrap() / right.unwrap();
        assert!((ratio - (2.0 * alpha).exp()).abs() < 1e-9);
    }

    #[test]
    fn perfect_stump_stops_early() {
        let x = Matrix::from_vec(4, 1, vec![0.0, 1.0, 2.0, 3.0]);
        let out = fit_adaboost(&x, &[false, false, true, true], &AdaBoostParams { n_stumps: 50 });
        assert_eq!(out.ensemble.trees.len(), 1);
    }
}
