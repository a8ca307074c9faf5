//! Binary decision trees and the greedy grower shared by every tree-based
//! learner.
//!
//! Split search is exact: each column is mapped to the ranks of its distinct
//! training values, node histograms are accumulated over those ranks, and a
//! candidate threshold is the midpoint between two consecutive values present
//! in the node. Rows with `value < threshold` go left.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        cover: f64,
    },
    Leaf {
        value: f64,
        cover: f64,
    },
}

/// Tree stored as a node arena with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf(value: f64, cover: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value, cover }],
        }
    }

    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if row[*feature] < *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        match &self.nodes[self.leaf_index(row)] {
            Node::Leaf { value, .. } => *value,
            Node::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Columns tested by at least one split.
    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Rewrites every leaf value.
    pub fn map_leaves(&mut self, mut f: impl FnMut(f64) -> f64) {
        for n in &mut self.nodes {
            if let Node::Leaf { value, .. } = n {
                *value = f(*value);
            }
        }
    }
}

/// Training matrix with every column replaced by the rank of its value among
/// the column's distinct values.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    n_rows: usize,
    /// Column-major bin index per row.
    bins: Vec<Vec<u32>>,
    /// Sorted distinct values per column.
    uniques: Vec<Vec<f64>>,
}

impl BinnedMatrix {
    pub fn new(x: &Matrix) -> Self {
        let mut bins = Vec::with_capacity(x.ncols());
        let mut uniques = Vec::with_capacity(x.ncols());
        for c in 0..x.ncols() {
            let col = x.column(c);
            let mut u = col.clone();
            u.sort_by(f64::total_cmp);
            u.dedup();
            let b = col
                .iter()
                .map(|v| u.binary_search_by(|p| p.total_cmp(v)).expect("value present") as u32)
                .collect();
            bins.push(b);
            uniques.push(u);
        }
        Self {
            n_rows: x.nrows(),
            bins,
            uniques,
        }
    }

    pub fn nrows(&self) -> usize {
        self.n_rows
    }

    pub fn ncols(&self) -> usize {
        self.bins.len()
    }

    fn threshold(&self, col: usize, lo_bin: usize, hi_bin: usize) -> f64 {
        let lo = self.uniques[col][lo_bin];
        let hi = self.uniques[col][hi_bin];
        let mid = lo + (hi - lo) / 2.0;
        if mid > lo {
            mid
        } else {
            hi
        }
    }
}

/// How candidate splits are scored. Row statistics are pairs `[a, b]`:
///
/// * `Gini`: `[weight, weight·y]`; gain is the drop in weighted gini impurity.
/// * `LeastSquares`: `[residual, 1]`; gain is the drop in squared error.
/// * `SecondOrder`: `[gradient, hessian]`; gain is the regularized
///   second-order loss reduction `½(G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)) − γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    Gini,
    LeastSquares,
    SecondOrder {
        lambda: f64,
        gamma: f64,
        min_child_hessian: f64,
    },
}

impl Criterion {
    fn gain(&self, left: [f64; 2], right: [f64; 2], parent: [f64; 2]) -> f64 {
        match *self {
            Criterion::Gini => gini_impurity(parent) - gini_impurity(left) - gini_impurity(right),
            Criterion::LeastSquares => sq_score(left) + sq_score(right) - sq_score(parent),
            Criterion::SecondOrder { lambda, gamma, .. } => {
                let s = |v: [f64; 2]| v[0] * v[0] / (v[1] + lambda);
                0.5 * (s(left) + s(right) - s(parent)) - gamma
            }
        }
    }

    fn child_ok(&self, child: [f64; 2]) -> bool {
        match *self {
            Criterion::Gini => child[0] > 0.0,
            Criterion::LeastSquares => child[1] > 0.0,
            Criterion::SecondOrder {
                min_child_hessian, ..
            } => child[1] >= min_child_hessian,
        }
    }

    fn is_pure(&self, total: [f64; 2]) -> bool {
        match self {
            Criterion::Gini => total[1] <= 0.0 || total[1] >= total[0],
            _ => false,
        }
    }

    /// Magnitude used to make the "positive gain" test scale-aware.
    fn scale(&self, parent: [f64; 2]) -> f64 {
        match *self {
            Criterion::Gini => parent[0].abs(),
            Criterion::LeastSquares => sq_score(parent).abs(),
            Criterion::SecondOrder { lambda, .. } => (parent[0] * parent[0] / (parent[1] + lambda)).abs(),
        }
    }
}

fn gini_impurity(s: [f64; 2]) -> f64 {
    if s[0] <= 0.0 {
        0.0
    } else {
        2.0 * s[1] * (s[0] - s[1]) / s[0]
    }
}

fn sq_score(s: [f64; 2]) -> f64 {
    if s[1] <= 0.0 {
        0.0
    } else {
        s[0] * s[0] / s[1]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Columns sampled per split; `None` tries every column.
    pub mtry: Option<usize>,
}

struct Grower<'a, R, L> {
    binned: &'a BinnedMatrix,
    stats: &'a [[f64; 2]],
    criterion: Criterion,
    params: GrowParams,
    rng: Option<&'a mut R>,
    leaf_value: L,
    nodes: Vec<Node>,
    hist: Vec<[f64; 2]>,
    counts: Vec<u32>,
}

struct BestSplit {
    feature: usize,
    split_bin: usize,
    threshold: f64,
}

impl<R: Rng, L: FnMut(&[usize], [f64; 2]) -> f64> Grower<'_, R, L> {
    fn total(&self, rows: &[usize]) -> [f64; 2] {
        rows.iter().fold([0.0, 0.0], |acc, &i| {
            let s = self.stats[i];
            [acc[0] + s[0], acc[1] + s[1]]
        })
    }

    fn cover(&self, rows: &[usize], total: [f64; 2]) -> f64 {
        match self.criterion {
            Criterion::Gini => total[0],
            _ => rows.len() as f64,
        }
    }

    fn candidates(&mut self) -> Vec<usize> {
        let p = self.binned.ncols();
        match (self.params.mtry, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < p => {
                let mut c = sample(rng, p, m).into_vec();
                c.sort_unstable();
                c
            }
            _ => (0..p).collect(),
        }
    }

    fn find_split(&mut self, rows: &[usize], total: [f64; 2]) -> Option<BestSplit> {
        let min_leaf = self.params.min_leaf.max(1);
        if rows.len() < 2 * min_leaf {
            return None;
        }
        let tolerance = 1e-12 * (1.0 + self.criterion.scale(total));
        let mut best: Option<(f64, BestSplit)> = None;
        for feature in self.candidates() {
            let nb = self.binned.uniques[feature].len();
            if nb < 2 {
                continue;
            }
            let bins = &self.binned.bins[feature];
            self.hist[..nb].fill([0.0, 0.0]);
            self.counts[..nb].fill(0);
            for &i in rows {
                let b = bins[i] as usize;
                let s = self.stats[i];
                self.hist[b][0] += s[0];
                self.hist[b][1] += s[1];
                self.counts[b] += 1;
            }
            let mut left = [0.0, 0.0];
            let mut left_n = 0usize;
            let mut prev: Option<usize> = None;
            for b in 0..nb {
                if self.counts[b] == 0 {
                    continue;
                }
                if let Some(pb) = prev {
                    let right = [total[0] - left[0], total[1] - left[1]];
                    let right_n = rows.len() - left_n;
                    if left_n >= min_leaf
                        && right_n >= min_leaf
                        && self.criterion.child_ok(left)
                        && self.criterion.child_ok(right)
                    {
                        let gain = self.criterion.gain(left, right, total);
                        // strict comparison keeps the lowest column, then lowest threshold
                        if gain > tolerance && best.as_ref().is_none_or(|(g, _)| gain > *g) {
                            best = Some((
                                gain,
                                BestSplit {
                                    feature,
                                    split_bin: pb,
                                    threshold: self.binned.threshold(feature, pb, b),
                                },
                            ));
                        }
                    }
                }
                left[0] += self.hist[b][0];
                left[1] += self.hist[b][1];
                left_n += self.counts[b] as usize;
                prev = Some(b);
            }
        }
        best.map(|(_, s)| s)
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let total = self.total(&rows);
        let cover = self.cover(&rows, total);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0, cover });
        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        let split = if depth_ok && !self.criterion.is_pure(total) {
            self.find_split(&rows, total)
        } else {
            None
        };
        match split {
            None => {
                let value = (self.leaf_value)(&rows, total);
                self.nodes[id] = Node::Leaf { value, cover };
            }
            Some(s) => {
                let bins = &self.binned.bins[s.feature];
                let (l, r): (Vec<usize>, Vec<usize>) =
                    rows.into_iter().partition(|&i| bins[i] as usize <= s.split_bin);
                let left = self.grow(l, depth + 1);
                let right = self.grow(r, depth + 1);
                self.nodes[id] = Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                    cover,
                };
            }
        }
        id
    }
}

/// Grows one tree over `rows` (indices into `binned`, repetition allowed).
///
/// `leaf_value` receives the rows and summed statistics of each leaf.
pub fn grow_tree<R: Rng>(
    binned: &BinnedMatrix,
    rows: Vec<usize>,
    stats: &[[f64; 2]],
    criterion: Criterion,
    params: GrowParams,
    rng: Option<&mut R>,
    leaf_value: impl FnMut(&[usize], [f64; 2]) -> f64,
) -> DecisionTree {
    let max_bins = binned.uniques.iter().map(Vec::len).max().unwrap_or(0);
    let mut g = Grower {
        binned,
        stats,
        criterion,
        params,
        rng,
        leaf_value,
        nodes: Vec::new(),
        hist: vec![[0.0, 0.0]; max_bins],
        counts: vec![0; max_bins],
    };
    g.grow(rows, 0);
    DecisionTree { nodes: g.nodes }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub mtry: Option<usize>,
}

impl Default for CartParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_leaf: 1,
            mtry: None,
        }
    }
}

/// Weighted gini classification tree over `rows` of a binned matrix. Leaf
/// values are the weighted fraction of positive rows. Zero-weight rows are
/// ignored.
pub fn fit_cart_binned<R: Rng>(
    binned: &BinnedMatrix,
    rows: &[usize],
    positive: &[bool],
    weights: &[f64],
    params: &CartParams,
    rng: Option<&mut R>,
) -> DecisionTree {
    let stats: Vec<[f64; 2]> = weights
        .iter()
        .zip(positive)
        .map(|(&w, &p)| [w, if p { w } else { 0.0 }])
        .collect();
    let rows: Vec<usize> = rows.iter().copied().filter(|&i| weights[i] > 0.0).collect();
    if rows.is_empty() {
        return DecisionTree::leaf(0.5, 0.0);
    }
    grow_tree(
        binned,
        rows,
        &stats,
        Criterion::Gini,
        GrowParams {
            max_depth: params.max_depth,
            min_leaf: params.min_leaf,
            mtry: params.mtry,
        },
        rng,
        |_, total| total[1] / total[0],
    )
}

/// Weighted gini classification tree on a dense matrix.
pub fn fit_cart(x: &Matrix, positive: &[bool], weights: &[f64], params: &CartParams) -> DecisionTree {
    assert_eq!(x.nrows(), positive.len());
    assert_eq!(x.nrows(), weights.len());
    let binned = BinnedMatrix::new(x);
    let rows: Vec<usize> = (0..x.nrows()).collect();
    fit_cart_binned::<rand_chacha::ChaCha8Rng>(&binned, &rows, positive, weights, params, None)
}
