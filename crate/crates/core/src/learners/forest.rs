//! Random forest of unpruned gini trees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tree::{fit_cart_binned, BinnedMatrix, CartParams};
use super::{RfParams, TreeEnsemble};
use crate::harness::bootstrap_resample;
use crate::matrix::Matrix;

pub fn default_mtry(p: usize) -> usize {
    ((p as f64).sqrt().floor() as usize).clamp(1, p.max(1))
}

/// Each tree sees a row bootstrap and samples `mtry` candidate columns per
/// split. Rows are put in canonical `row_id` order before sampling so the
/// fit does not depend on the order the rows arrive in.
pub fn fit_forest(x: &Matrix, positive: &[bool], row_ids: &[String], params: &RfParams, seed: u64) -> TreeEnsemble {
    let n = x.nrows();
    let p = x.ncols();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| row_ids[a].cmp(&row_ids[b]).then(a.cmp(&b)));
    let binned = BinnedMatrix::new(x);
    let weights = vec![1.0; n];
    let cart = CartParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        mtry: Some(params.mtry.unwrap_or_else(|| default_mtry(p)).min(p)),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        let rows = if params.bootstrap {
            bootstrap_resample(&order, &mut rng)
        } else {
            order.clone()
        };
        trees.push(fit_cart_binned(&binned, &rows, positive, &weights, &cart, Some(&mut rng)));
    }
    let w = 1.0 / params.n_trees.max(1) as f64;
    let weights = vec![w; trees.len()];
    TreeEnsemble {
        base: 0.0,
        trees,
        weights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::tree::fit_cart;

    #[test]
    fn one_tree_without_bootstrap_is_plain_cart() {
        let x = Matrix::from_rows(&[[1.0, 5.0], [2.0, 3.0], [3.0, 4.0], [4.0, 1.0], [5.0, 2.0]]);
        let y = [false, true, false, true, true];
        let ids: Vec<String> = (0..5).map(|i| format!("r{i}")).collect();
        let params = RfParams {
            n_trees: 1,
            mtry: Some(2),
            bootstrap: false,
            ..RfParams::default()
        };
        let forest = fit_forest(&x, &y, &ids, &params, 3);
        let single = fit_cart(&x, &y, &[1.0; 5], &CartParams::default());
        assert_eq!(forest.trees[0], single);
    }

    #[test]
    fn mtry_default_is_floor_sqrt() {
        assert_eq!(default_mtry(54), 7);
        assert_eq!(default_mtry(1), 1);
        assert_eq!(default_mtry(16), 4);
    }
}
