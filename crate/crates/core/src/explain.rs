//! Shapley attributions of model margins under an interventional value
//! function: a coalition keeps the explained row's values and takes the rest
//! from a background row, averaged over the background.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::learners::tree::{DecisionTree, Node};
use crate::learners::{Family, TrainedModel, TreeEnsemble};
use crate::matrix::Matrix;
use crate::seed::{self, tag};

pub const DEFAULT_EXACT_CAP: usize = 15;

#[derive(Debug, Error, PartialEq)]
pub enum ExplainError {
    #[error("{0} is not a tree model")]
    NotTreeModel(Family),
    #[error("{p} columns exceed the exact enumeration cap of {cap}")]
    TooManyColumns { p: usize, cap: usize },
    #[error("background set is empty")]
    EmptyBackground,
    #[error("permutation count must be at least 1")]
    NoPermutations,
    #[error("expected {expected} columns, got {got}")]
    ColumnMismatch { expected: usize, got: usize },
    #[error("attribution has {phi} columns but lineage has {lineage}")]
    LineageMismatch { phi: usize, lineage: usize },
    #[error("no explanations to summarize")]
    Empty,
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Anything with a real-valued margin over full-width rows.
pub trait MarginFn: Sync {
    fn margin(&self, row: &[f64]) -> f64;
}

impl MarginFn for TrainedModel {
    fn margin(&self, row: &[f64]) -> f64 {
        self.margin_row(row)
    }
}

impl MarginFn for TreeEnsemble {
    fn margin(&self, row: &[f64]) -> f64 {
        TreeEnsemble::margin(self, row)
    }
}

impl MarginFn for DecisionTree {
    fn margin(&self, row: &[f64]) -> f64 {
        self.predict(row)
    }
}

/// Adapter for closures.
pub struct FnMargin<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> MarginFn for FnMargin<F> {
    fn margin(&self, row: &[f64]) -> f64 {
        (self.0)(row)
    }
}

/// Column-level attribution of one row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    /// Mean margin over the background.
    pub base_value: f64,
    pub phi: Vec<f64>,
    pub margin: f64,
    /// Per-column standard errors for sampled estimates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_err: Option<Vec<f64>>,
}

impl Attribution {
    pub fn efficiency_gap(&self) -> f64 {
        (self.base_value + self.phi.iter().sum::<f64>() - self.margin).abs()
    }
}

fn check_inputs(x: &[f64], background: &Matrix) -> Result<(), ExplainError> {
    if background.nrows() == 0 {
        return Err(ExplainError::EmptyBackground);
    }
    if background.ncols() != x.len() {
        return Err(ExplainError::ColumnMismatch {
            expected: x.len(),
            got: background.ncols(),
        });
    }
    Ok(())
}

fn mean_margin<M: MarginFn + ?Sized>(model: &M, background: &Matrix) -> f64 {
    background.rows_iter().map(|z| model.margin(z)).sum::<f64>() / background.nrows() as f64
}

/// `a!·b!/(a+b+1)!`, the Shapley weight of a coalition of size `a` that
/// excludes `b` other players, for `a + b + 1` players.
fn shapley_weight(a: usize, b: usize) -> f64 {
    // 1 / ((a+b+1) · C(a+b, a)), with the binomial built incrementally
    let (small, large) = if a < b { (a, b) } else { (b, a) };
    let mut binom = 1.0;
    for k in 1..=small {
        binom = binom * (large + k) as f64 / k as f64;
    }
    1.0 / ((a + b + 1) as f64 * binom)
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Unset,
    FromX,
    FromZ,
}

struct PathState<'a> {
    tree: &'a DecisionTree,
    x: &'a [f64],
    z: &'a [f64],
    side: Vec<Side>,
    from_x: Vec<usize>,
    from_z: Vec<usize>,
}

impl PathState<'_> {
    fn walk(&mut self, node: usize, scale: f64, phi: &mut [f64]) {
        match &self.tree.nodes[node] {
            Node::Leaf { value, .. } => {
                let (na, nb) = (self.from_x.len(), self.from_z.len());
                if na + nb == 0 || *value == 0.0 {
                    return;
                }
                let v = scale * value;
                if na > 0 {
                    let w = v * shapley_weight(na - 1, nb);
                    for &i in &self.from_x {
                        phi[i] += w;
                    }
                }
                if nb > 0 {
                    let w = v * shapley_weight(na, nb - 1);
                    for &i in &self.from_z {
                        phi[i] -= w;
                    }
                }
            }
            Node::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                let f = *feature;
                let cx = if self.x[f] < *threshold { *left } else { *right };
                let cz = if self.z[f] < *threshold { *left } else { *right };
                match self.side[f] {
                    Side::FromX => self.walk(cx, scale, phi),
                    Side::FromZ => self.walk(cz, scale, phi),
                    Side::Unset if cx == cz => self.walk(cx, scale, phi),
                    Side::Unset => {
                        self.side[f] = Side::FromX;
                        self.from_x.push(f);
                        self.walk(cx, scale, phi);
                        self.from_x.pop();
                        self.side[f] = Side::FromZ;
                        self.from_z.push(f);
                        self.walk(cz, scale, phi);
                        self.from_z.pop();
                        self.side[f] = Side::Unset;
                    }
                }
            }
        }
    }
}

/// Adds `scale ×` the exact Shapley values of `tree` for `x` against the
/// single reference row `z` into `phi`.
fn tree_shap_single(tree: &DecisionTree, x: &[f64], z: &[f64], scale: f64, phi: &mut [f64]) {
    let mut state = PathState {
        tree,
        x,
        z,
        side: vec![Side::Unset; x.len()],
        from_x: Vec::new(),
        from_z: Vec::new(),
    };
    state.walk(0, scale, phi);
}

/// Interventional TreeSHAP: exact Shapley values of the ensemble margin,
/// computed per background row by following the paths where `x` and the
/// background row disagree, then averaged.
pub fn tree_shap(ensemble: &TreeEnsemble, x: &[f64], background: &Matrix) -> Result<Attribution, ExplainError> {
    check_inputs(x, background)?;
    let mut phi = vec![0.0; x.len()];
    let n_bg = background.nrows() as f64;
    for (tree, &w) in ensemble.trees.iter().zip(&ensemble.weights) {
        for z in background.rows_iter() {
            tree_shap_single(tree, x, z, w / n_bg, &mut phi);
        }
    }
    Ok(Attribution {
        base_value: mean_margin(ensemble, background),
        phi,
        margin: ensemble.margin(x),
        std_err: None,
    })
}

/// TreeSHAP for a fitted tree-family model.
pub fn tree_shap_model(model: &TrainedModel, x: &[f64], background: &Matrix) -> Result<Attribution, ExplainError> {
    let ensemble = model.tree_ensemble().ok_or(ExplainError::NotTreeModel(model.family))?;
    tree_shap(ensemble, x, background)
}

/// Exact Shapley values by enumerating all `2^p` coalitions.
pub fn exact_shapley<M: MarginFn + ?Sized>(
    model: &M,
    x: &[f64],
    background: &Matrix,
    cap: usize,
) -> Result<Attribution, ExplainError> {
    check_inputs(x, background)?;
    let p = x.len();
    if p > cap {
        return Err(ExplainError::TooManyColumns { p, cap });
    }
    let n_sets = 1usize << p;
    let mut values = vec![0.0; n_sets];
    let mut hybrid = vec![0.0; p];
    for (mask, value) in values.iter_mut().enumerate() {
        let mut total = 0.0;
        for z in background.rows_iter() {
            for j in 0..p {
                hybrid[j] = if mask & (1 << j) != 0 { x[j] } else { z[j] };
            }
            total += model.margin(&hybrid);
        }
        *value = total / background.nrows() as f64;
    }
    let mut phi = vec![0.0; p];
    for mask in 0..n_sets {
        let size = mask.count_ones() as usize;
        for (j, pj) in phi.iter_mut().enumerate() {
            if mask & (1 << j) == 0 {
                *pj += shapley_weight(size, p - size - 1) * (values[mask | (1 << j)] - values[mask]);
            }
        }
    }
    Ok(Attribution {
        base_value: values[0],
        phi,
        margin: model.margin(x),
        std_err: None,
    })
}

/// Permutation-sampling Shapley estimate. Each permutation is evaluated
/// against every background row, so each one satisfies efficiency on its
/// own; standard errors come from the spread across permutations.
pub fn sampled_shapley<M: MarginFn + ?Sized>(
    model: &M,
    x: &[f64],
    background: &Matrix,
    permutations: usize,
    seed: u64,
) -> Result<Attribution, ExplainError> {
    check_inputs(x, background)?;
    if permutations == 0 {
        return Err(ExplainError::NoPermutations);
    }
    let p = x.len();
    let n_bg = background.nrows() as f64;
    let mut rng = seed::rng_for(seed, &[tag::SHAP]);
    let mut order: Vec<usize> = (0..p).collect();
    let mut estimates: Vec<Vec<f64>> = Vec::with_capacity(permutations);
    let mut hybrid = vec![0.0; p];
    for _ in 0..permutations {
        order.shuffle(&mut rng);
        let mut est = vec![0.0; p];
        for z in background.rows_iter() {
            hybrid.copy_from_slice(z);
            let mut prev = model.margin(&hybrid);
            for &j in &order {
                hybrid[j] = x[j];
                let cur = model.margin(&hybrid);
                est[j] += cur - prev;
                prev = cur;
            }
        }
        est.iter_mut().for_each(|v| *v /= n_bg);
        estimates.push(est);
    }
    let m = permutations as f64;
    let phi: Vec<f64> = (0..p).map(|j| estimates.iter().map(|e| e[j]).sum::<f64>() / m).collect();
    let std_err: Vec<f64> = (0..p)
        .map(|j| {
            if permutations < 2 {
                return 0.0;
            }
            let var = estimates.iter().map(|e| (e[j] - phi[j]).powi(2)).sum::<f64>() / (m - 1.0);
            (var / m).sqrt()
        })
        .collect();
    Ok(Attribution {
        base_value: mean_margin(model, background),
        phi,
        margin: model.margin(x),
        std_err: Some(std_err),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum ShapMethod {
    /// TreeSHAP for tree models, sampling otherwise.
    Auto { permutations: usize, seed: u64 },
    Tree,
    Exact { cap: usize },
    Sampled { permutations: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureAttribution {
    pub feature: String,
    pub phi: f64,
    /// Source value of the feature in the explained row.
    pub value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    pub instance: String,
    pub base_value: f64,
    pub margin: f64,
    pub phi: Vec<f64>,
    pub phi_by_feature: Vec<FeatureAttribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_err: Option<Vec<f64>>,
}

/// Sums column attributions into their source features, in the dataset's
/// feature order.
pub fn group_by_feature(phi: &[f64], data: &Dataset) -> Result<Vec<(String, f64)>, ExplainError> {
    if phi.len() != data.lineage.len() {
        return Err(ExplainError::LineageMismatch {
            phi: phi.len(),
            lineage: data.lineage.len(),
        });
    }
    Ok(data
        .feature_groups()
        .into_iter()
        .map(|(f, cols)| {
            let s = cols.iter().map(|&j| phi[j]).sum();
            (f, s)
        })
        .collect())
}

fn attribute<M: MarginFn + ?Sized>(
    model: &M,
    trees: Option<&TreeEnsemble>,
    family: Family,
    x: &[f64],
    background: &Matrix,
    method: ShapMethod,
    instance: u64,
) -> Result<Attribution, ExplainError> {
    match method {
        ShapMethod::Tree => tree_shap(trees.ok_or(ExplainError::NotTreeModel(family))?, x, background),
        ShapMethod::Exact { cap } => exact_shapley(model, x, background, cap),
        ShapMethod::Sampled { permutations, seed } => {
            sampled_shapley(model, x, background, permutations, seed::derive(seed, &[instance]))
        }
        ShapMethod::Auto { permutations, seed } => match trees {
            Some(t) => tree_shap(t, x, background),
            None => sampled_shapley(model, x, background, permutations, seed::derive(seed, &[instance])),
        },
    }
}

/// Explains every row of `data` against `background` on `jobs` threads.
/// Output order follows the rows and does not depend on `jobs`.
pub fn explain_dataset(
    model: &TrainedModel,
    data: &Dataset,
    background: &Dataset,
    method: ShapMethod,
    jobs: usize,
) -> Result<Vec<ShapExplanation>, ExplainError> {
    if data.ncols() != model.n_columns() {
        return Err(ExplainError::ColumnMismatch {
            expected: model.n_columns(),
            got: data.ncols(),
        });
    }
    let trees = model.tree_ensemble();
    let sampling = match method {
        ShapMethod::Sampled { permutations, .. } => Some(permutations),
        ShapMethod::Auto { permutations, .. } if trees.is_none() => Some(permutations),
        _ => None,
    };
    if sampling == Some(0) {
        return Err(ExplainError::NoPermutations);
    }
    let one = |i: usize| -> Result<ShapExplanation, ExplainError> {
        let x = data.x.row(i);
        let a = attribute(model, trees, model.family, x, &background.x, method, i as u64)?;
        let decoded = data.decode_row(i);
        let phi_by_feature = group_by_feature(&a.phi, data)?
            .into_iter()
            .map(|(feature, phi)| FeatureAttribution {
                value: decoded.get(&feature).cloned().flatten(),
                feature,
                phi,
            })
            .collect();
        Ok(ShapExplanation {
            instance: data.row_ids[i].clone(),
            base_value: a.base_value,
            margin: a.margin,
            phi: a.phi,
            phi_by_feature,
            std_err: a.std_err,
        })
    };
    let rows: Vec<usize> = (0..data.nrows()).collect();
    if jobs <= 1 {
        rows.iter().map(|&i| one(i)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| ExplainError::Pool(e.to_string()))?;
        pool.install(|| rows.par_iter().map(|&i| one(i)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub mean_abs_shap: f64,
    /// 1-based; tied means share the smaller rank.
    pub rank: usize,
}

/// One beeswarm point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryPoint {
    pub feature: String,
    pub instance: String,
    pub phi: f64,
    /// Feature value min-max scaled over the explained rows; 0.5 when
    /// constant or non-numeric.
    pub normalized_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapSummary {
    /// Sorted by descending mean |phi|.
    pub features: Vec<FeatureImportance>,
    pub points: Vec<SummaryPoint>,
}

/// Numeric code of a source value: the number itself, or the level's
/// position in the feature's level list.
fn value_code(value: Option<&str>, levels: &[String]) -> Option<f64> {
    let v = value?;
    v.parse::<f64>()
        .ok()
        .or_else(|| levels.iter().position(|l| l == v).map(|i| i as f64))
}

pub fn shap_summary(explanations: &[ShapExplanation]) -> Result<ShapSummary, ExplainError> {
    let first = explanations.first().ok_or(ExplainError::Empty)?;
    let names: Vec<String> = first.phi_by_feature.iter().map(|f| f.feature.clone()).collect();
    for e in explanations {
        let n: Vec<&str> = e.phi_by_feature.iter().map(|f| f.feature.as_str()).collect();
        if n != names.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(ExplainError::LineageMismatch {
                phi: n.len(),
                lineage: names.len(),
            });
        }
    }
    let count = explanations.len() as f64;
    let mut features: Vec<FeatureImportance> = names
        .iter()
        .enumerate()
        .map(|(k, f)| FeatureImportance {
            feature: f.clone(),
            mean_abs_shap: explanations.iter().map(|e| e.phi_by_feature[k].phi.abs()).sum::<f64>() / count,
            rank: 0,
        })
        .collect();
    features.sort_by(|a, b| b.mean_abs_shap.total_cmp(&a.mean_abs_shap));
    for i in 0..features.len() {
        features[i].rank = if i > 0 && features[i].mean_abs_shap == features[i - 1].mean_abs_shap {
            features[i - 1].rank
        } else {
            i + 1
        };
    }

    let mut points = Vec::with_capacity(explanations.len() * names.len());
    for (k, feature) in names.iter().enumerate() {
        let mut levels: Vec<String> = explanations
            .iter()
            .filter_map(|e| e.phi_by_feature[k].value.clone())
            .collect();
        levels.sort();
        levels.dedup();
        let codes: Vec<Option<f64>> = explanations
            .iter()
            .map(|e| value_code(e.phi_by_feature[k].value.as_deref(), &levels))
            .collect();
        let present = codes.iter().flatten();
        let lo = present.clone().copied().fold(f64::INFINITY, f64::min);
        let hi = present.copied().fold(f64::NEG_INFINITY, f64::max);
        for (e, code) in explanations.iter().zip(codes) {
            let normalized_value = match code {
                Some(c) if hi > lo => (c - lo) / (hi - lo),
                _ => 0.5,
            };
            points.push(SummaryPoint {
                feature: feature.clone(),
                instance: e.instance.clone(),
                phi: e.phi_by_feature[k].phi,
                normalized_value,
            });
        }
    }
    Ok(ShapSummary { features, points })
}

/// Rows `instance,feature,phi,feature_value`, one per explained row and
/// source feature.
pub fn write_explanations_csv<W: Write>(explanations: &[ShapExplanation], sink: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["instance", "feature", "phi", "feature_value"])?;
    for e in explanations {
        for f in &e.phi_by_feature {
            w.write_record([
                e.instance.as_str(),
                f.feature.as_str(),
                &format!("{:?}", f.phi),
                f.value.as_deref().unwrap_or(""),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Ranking records for JSON export.
pub fn ranking_json(summary: &ShapSummary) -> serde_json::Value {
    let rows: Vec<BTreeMap<&str, serde_json::Value>> = summary
        .features
        .iter()
        .map(|f| {
            BTreeMap::from([
                ("feature", serde_json::json!(f.feature)),
                ("mean_abs_shap", serde_json::json!(f.mean_abs_shap)),
                ("rank", serde_json::json!(f.rank)),
            ])
        })
        .collect();
    serde_json::json!(rows)
}
