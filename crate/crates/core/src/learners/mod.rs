//! Seven binary classifiers behind one fit / score contract.
//!
//! Tree and boosting families consume the dataset columns as they are. LR,
//! LDA and SVM-RBF drop the first level of every categorical feature and
//! z-score numeric columns on the training rows; that preprocessing is stored
//! inside the model so every scoring call takes full-width dataset rows.

pub mod adaboost;
pub mod boost;
pub mod forest;
pub mod lda;
pub mod logistic;
pub mod preprocess;
pub mod svm;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Treatment};
use crate::matrix::Matrix;
use preprocess::Preprocessor;
use tree::DecisionTree;

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("training set has a single class")]
    SingleClass,
    #[error("training set is empty")]
    Empty,
    #[error("training matrix contains non-finite values")]
    NonFinite,
    #[error("expected {expected} columns, got {got}")]
    ColumnMismatch { expected: usize, got: usize },
    #[error("invalid {family} hyperparameter: {message}")]
    InvalidHyperparameter { family: Family, message: String },
    #[error("threshold {0} outside (0, 1)")]
    Threshold(f64),
    #[error("unknown model family {0:?}")]
    UnknownFamily(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    AdaBoost,
    #[serde(rename = "GBM")]
    Gbm,
    #[serde(rename = "LDA")]
    Lda,
    #[serde(rename = "LR")]
    Lr,
    #[serde(rename = "RF")]
    Rf,
    #[serde(rename = "SVM-RBF", alias = "SVM_RBF")]
    SvmRbf,
    NewtonBoost,
}

impl Family {
    /// Reporting order.
    pub const ALL: [Family; 7] = [
        Family::AdaBoost,
        Family::Gbm,
        Family::Lda,
        Family::Lr,
        Family::Rf,
        Family::SvmRbf,
        Family::NewtonBoost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::AdaBoost => "AdaBoost",
            Family::Gbm => "GBM",
            Family::Lda => "LDA",
            Family::Lr => "LR",
            Family::Rf => "RF",
            Family::SvmRbf => "SVM-RBF",
            Family::NewtonBoost => "NewtonBoost",
        }
    }

    pub fn is_tree_based(self) -> bool {
        matches!(self, Family::AdaBoost | Family::Gbm | Family::Rf | Family::NewtonBoost)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = LearnError;

    /// Case-insensitive; also accepts "SVM", "SVM_RBF" and "XGBoost".
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "adaboost" => Family::AdaBoost,
            "gbm" => Family::Gbm,
            "lda" => Family::Lda,
            "lr" => Family::Lr,
            "rf" => Family::Rf,
            "svmrbf" | "svm" | "svmr" => Family::SvmRbf,
            "newtonboost" | "xgboost" => Family::NewtonBoost,
            _ => return Err(LearnError::UnknownFamily(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfParams {
    pub n_trees: usize,
    /// Columns tried per split; `None` means ⌊√p⌋.
    pub mtry: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub bootstrap: bool,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            n_trees: 500,
            mtry: None,
            max_depth: None,
            min_leaf: 1,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbmParams {
    pub n_stages: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
}

impl Default for GbmParams {
    fn default() -> Self {
        Self {
            n_stages: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_hessian: f64,
}

impl Default for NewtonParams {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            max_depth: 6,
            learning_rate: 0.3,
            lambda: 1.0,
            gamma: 0.0,
            min_child_hessian: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaBoostParams {
    pub n_stumps: usize,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        Self { n_stumps: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrParams {
    pub ridge: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LrParams {
    fn default() -> Self {
        Self {
            ridge: 1e-6,
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdaParams {
    /// Diagonal ridge as a fraction of the mean covariance diagonal.
    pub ridge_scale: f64,
}

impl Default for LdaParams {
    fn default() -> Self {
        Self { ridge_scale: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    /// Kernel width; `None` means `1/(p · mean column variance)`.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum Hyperparameters {
    AdaBoost(AdaBoostParams),
    #[serde(rename = "GBM")]
    Gbm(GbmParams),
    #[serde(rename = "LDA")]
    Lda(LdaParams),
    #[serde(rename = "LR")]
    Lr(LrParams),
    #[serde(rename = "RF")]
    Rf(RfParams),
    #[serde(rename = "SVM-RBF", alias = "SVM_RBF")]
    SvmRbf(SvmParams),
    NewtonBoost(NewtonParams),
}

impl Hyperparameters {
    pub fn defaults(family: Family) -> Self {
        match family {
            Family::AdaBoost => Self::AdaBoost(AdaBoostParams::default()),
            Family::Gbm => Self::Gbm(GbmParams::default()),
            Family::Lda => Self::Lda(LdaParams::default()),
            Family::Lr => Self::Lr(LrParams::default()),
            Family::Rf => Self::Rf(RfParams::default()),
            Family::SvmRbf => Self::SvmRbf(SvmParams::default()),
            Family::NewtonBoost => Self::NewtonBoost(NewtonParams::default()),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Self::AdaBoost(_) => Family::AdaBoost,
            Self::Gbm(_) => Family::Gbm,
            Self::Lda(_) => Family::Lda,
            Self::Lr(_) => Family::Lr,
            Self::Rf(_) => Family::Rf,
            Self::SvmRbf(_) => Family::SvmRbf,
            Self::NewtonBoost(_) => Family::NewtonBoost,
        }
    }
}

/// A family with its hyperparameters and seed. Serializes flat, e.g.
/// `{"family": "GBM", "n_stages": 100, "learning_rate": 0.1, "seed": 7}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    #[serde(flatten)]
    pub params: Hyperparameters,
    #[serde(default)]
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(family: Family, seed: u64) -> Self {
        Self {
            params: Hyperparameters::defaults(family),
            seed,
        }
    }

    pub fn family(&self) -> Family {
        self.params.family()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            params: self.params.clone(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let family = self.family();
        let bad = |message: &str| {
            Err(LearnError::InvalidHyperparameter {
                family,
                message: message.to_string(),
            })
        };
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let non_negative = |v: f64| v >= 0.0 && v.is_finite();
        match &self.params {
            Hyperparameters::Rf(p) => {
                if p.n_trees < 1 {
                    return bad("n_trees must be at least 1");
                }
                if p.min_leaf < 1 {
                    return bad("min_leaf must be at least 1");
                }
                if p.mtry == Some(0) {
                    return bad("mtry must be at least 1");
                }
                if p.max_depth == Some(0) {
                    return bad("max_depth must be at least 1");
                }
            }
            Hyperparameters::Gbm(p) => {
                if !positive(p.learning_rate) {
                    return bad("learning_rate must be > 0");
                }
                if p.max_depth < 1 {
                    return bad("max_depth must be at least 1");
                }
                if p.min_leaf < 1 {
                    return bad("min_leaf must be at least 1");
                }
            }
            Hyperparameters::NewtonBoost(p) => {
                if !positive(p.learning_rate) {
                    return bad("learning_rate must be > 0");
                }
                if p.max_depth < 1 {
                    return bad("max_depth must be at least 1");
                }
                if !non_negative(p.lambda) {
                    return bad("lambda must be >= 0");
                }
                if !non_negative(p.gamma) {
                    return bad("gamma must be >= 0");
                }
                if !non_negative(p.min_child_hessian) {
                    return bad("min_child_hessian must be >= 0");
                }
            }
            Hyperparameters::AdaBoost(p) => {
                if p.n_stumps < 1 {
                    return bad("n_stumps must be at least 1");
                }
            }
            Hyperparameters::Lr(p) => {
                if !non_negative(p.ridge) {
                    return bad("ridge must be >= 0");
                }
                if p.max_iter < 1 {
                    return bad("max_iter must be at least 1");
                }
                if !positive(p.tol) {
                    return bad("tol must be > 0");
                }
            }
            Hyperparameters::Lda(p) => {
                if !non_negative(p.ridge_scale) {
                    return bad("ridge_scale must be >= 0");
                }
            }
            Hyperparameters::SvmRbf(p) => {
                if !positive(p.c) {
                    return bad("C must be > 0");
                }
                if let Some(g) = p.gamma {
                    if !positive(g) {
                        return bad("gamma must be > 0");
                    }
                }
                if !positive(p.tol) {
                    return bad("tol must be > 0");
                }
                if p.max_iter < 1 {
                    return bad("max_iter must be at least 1");
                }
            }
        }
        Ok(())
    }
}

/// Additive tree model: `margin(x) = base + Σ weightₜ · treeₜ(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub base: f64,
    pub trees: Vec<DecisionTree>,
    pub weights: Vec<f64>,
}

impl TreeEnsemble {
    pub fn single(tree: DecisionTree) -> Self {
        Self {
            base: 0.0,
            trees: vec![tree],
            weights: vec![1.0],
        }
    }

    pub fn margin(&self, row: &[f64]) -> f64 {
        self.base
            + self
                .trees
                .iter()
                .zip(&self.weights)
                .map(|(t, w)| w * t.predict(row))
                .sum::<f64>()
    }
}

/// What a model's margin measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginScale {
    LogOdds,
    /// Random forest: the mean tree class fraction.
    Probability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelBody {
    Trees(TreeEnsemble),
    Logistic(logistic::IrlsFit),
    Lda(lda::LdaFit),
    Svm(svm::SvmFit),
}

/// Probabilities are kept inside the open unit interval.
const PROBABILITY_FLOOR: f64 = 1e-15;
const FOREST_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub family: Family,
    pub preprocess: Preprocessor,
    pub body: ModelBody,
    /// False when an iterative solver stopped at its iteration cap.
    pub converged: bool,
    /// Training log-loss per boosting stage, initial value first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_trace: Vec<f64>,
}

impl TrainedModel {
    pub fn n_columns(&self) -> usize {
        self.preprocess.input_columns
    }

    pub fn margin_scale(&self) -> MarginScale {
        if self.family == Family::Rf {
            MarginScale::Probability
        } else {
            MarginScale::LogOdds
        }
    }

    pub fn tree_ensemble(&self) -> Option<&TreeEnsemble> {
        match &self.body {
            ModelBody::Trees(e) if self.preprocess.is_identity() => Some(e),
            _ => None,
        }
    }

    /// Margin of one full-width dataset row.
    pub fn margin_row(&self, row: &[f64]) -> f64 {
        debug_assert_eq!(row.len(), self.n_columns());
        match &self.body {
            ModelBody::Trees(e) => {
                if self.preprocess.is_identity() {
                    e.margin(row)
                } else {
                    e.margin(&self.preprocess.transform_row(row))
                }
            }
            ModelBody::Logistic(f) => f.margin(&self.preprocess.transform_row(row)),
            ModelBody::Lda(f) => f.margin(&self.preprocess.transform_row(row)),
            ModelBody::Svm(f) => f.margin(&self.preprocess.transform_row(row)),
        }
    }

    fn check_columns(&self, x: &Matrix) -> Result<(), LearnError> {
        if x.ncols() != self.n_columns() {
            return Err(LearnError::ColumnMismatch {
                expected: self.n_columns(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    pub fn margins(&self, x: &Matrix) -> Result<Vec<f64>, LearnError> {
        self.check_columns(x)?;
        Ok(x.rows_iter().map(|r| self.margin_row(r)).collect())
    }

    pub fn proba_from_margin(&self, margin: f64) -> f64 {
        match self.margin_scale() {
            MarginScale::Probability => margin.clamp(FOREST_FLOOR, 1.0 - FOREST_FLOOR),
            MarginScale::LogOdds => sigmoid(margin).clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR),
        }
    }

    /// P(Chemotherapy) per row.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>, LearnError> {
        Ok(self.margins(x)?.into_iter().map(|m| self.proba_from_margin(m)).collect())
    }

    pub fn predict_label(&self, x: &Matrix, threshold: f64) -> Result<Vec<Treatment>, LearnError> {
        labels_from_probabilities(&self.predict_proba(x)?, threshold)
    }
}

/// Chemotherapy iff probability ≥ threshold.
pub fn labels_from_probabilities(proba: &[f64], threshold: f64) -> Result<Vec<Treatment>, LearnError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(LearnError::Threshold(threshold));
    }
    Ok(proba.iter().map(|&p| Treatment::from_positive(p >= threshold)).collect())
}

/// Fits `spec` on `train`. Deterministic given `spec.seed`.
pub fn fit(spec: &ClassifierSpec, train: &Dataset) -> Result<TrainedModel, LearnError> {
    spec.validate()?;
    if train.nrows() == 0 {
        return Err(LearnError::Empty);
    }
    if !train.has_both_classes() {
        return Err(LearnError::SingleClass);
    }
    if !train.x.all_finite() {
        return Err(LearnError::NonFinite);
    }
    let positive: Vec<bool> = train.y.iter().map(|t| t.is_positive()).collect();
    let p = train.ncols();
    let family = spec.family();
    let model = match &spec.params {
        Hyperparameters::Rf(params) => TrainedModel {
            family,
            preprocess: Preprocessor::identity(p),
            body: ModelBody::Trees(forest::fit_forest(&train.x, &positive, &train.row_ids, params, spec.seed)),
            converged: true,
            loss_trace: Vec::new(),
        },
        Hyperparameters::Gbm(params) => {
            let out = boost::fit_gbm(&train.x, &positive, params);
            TrainedModel {
                family,
                preprocess: Preprocessor::identity(p),
                body: ModelBody::Trees(out.ensemble),
                converged: true,
                loss_trace: out.loss_trace,
            }
        }
        Hyperparameters::NewtonBoost(params) => {
            let out = boost::fit_newton_boost(&train.x, &positive, params);
            TrainedModel {
                family,
                preprocess: Preprocessor::identity(p),
                body: ModelBody::Trees(out.ensemble),
                converged: true,
                loss_trace: out.loss_trace,
            }
        }
        Hyperparameters::AdaBoost(params) => TrainedModel {
            family,
            preprocess: Preprocessor::identity(p),
            body: ModelBody::Trees(adaboost::fit_adaboost(&train.x, &positive, params).ensemble),
            converged: true,
            loss_trace: Vec::new(),
        },
        Hyperparameters::Lr(params) => {
            let pre = Preprocessor::linear(train);
            let x = pre.transform(&train.x);
            let y: Vec<f64> = positive.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            let fit = logistic::irls(&x, &y, params.ridge, params.max_iter, params.tol);
            if !fit.converged {
                log::warn!("LR stopped after {} iterations without converging", fit.iterations);
            }
            TrainedModel {
                family,
                preprocess: pre,
                converged: fit.converged,
                body: ModelBody::Logistic(fit),
                loss_trace: Vec::new(),
            }
        }
        Hyperparameters::Lda(params) => {
            let pre = Preprocessor::linear(train);
            let x = pre.transform(&train.x);
            let fit = lda::fit_lda(&x, &positive, params.ridge_scale)?;
            TrainedModel {
                family,
                preprocess: pre,
                body: ModelBody::Lda(fit),
                converged: true,
                loss_trace: Vec::new(),
            }
        }
        Hyperparameters::SvmRbf(params) => {
            let pre = Preprocessor::linear(train);
            let x = pre.transform(&train.x);
            let gamma = params.gamma.unwrap_or_else(|| svm::default_gamma(&x));
            let out = svm::fit_svm(&x, &positive, params.c, gamma, params.tol, params.max_iter);
            if !out.converged {
                log::warn!("SMO reached its iteration cap without converging");
            }
            TrainedModel {
                family,
                preprocess: pre,
                body: ModelBody::Svm(out.fit),
                converged: out.converged,
                loss_trace: Vec::new(),
            }
        }
    };
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
            let json = serde_json::to_string(&f).unwrap();
            assert_eq!(json, format!("\"{}\"", f.name()));
        }
        assert_eq!("xgboost".parse::<Family>().unwrap(), Family::NewtonBoost);
        assert!("kmeans".parse::<Family>().is_err());
    }

    #[test]
    fn spec_json_is_flat_with_defaults() {
        let spec: ClassifierSpec = serde_json::from_str(r#"{"family":"GBM","learning_rate":0.05,"seed":9}"#).unwrap();
        assert_eq!(spec.seed, 9);
        match &spec.params {
            Hyperparameters::Gbm(p) => {
                assert_eq!(p.learning_rate, 0.05);
                assert_eq!(p.n_stages, 100);
            }
            other => panic!("{other:?}"),
        }
        let back: ClassifierSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn invalid_hyperparameters_are_rejected() {
        let mut spec = ClassifierSpec::new(Family::SvmRbf, 0);
        if let Hyperparameters::SvmRbf(p) = &mut spec.params {
            p.c = 0.0;
        }
        assert!(matches!(spec.validate(), Err(LearnError::InvalidHyperparameter { .. })));
        let mut rf = ClassifierSpec::new(Family::Rf, 0);
        if let Hyperparameters::Rf(p) = &mut rf.params {
            p.n_trees = 0;
        }
        assert!(rf.validate().is_err());
    }

    #[test]
    fn threshold_boundary_and_range() {
        let labels = labels_from_probabilities(&[0.49, 0.5, 0.51], 0.5).unwrap();
        assert_eq!(
            labels,
            vec![Treatment::HormoneTherapy, Treatment::Chemotherapy, Treatment::Chemotherapy]
        );
        assert_eq!(labels_from_probabilities(&[0.5], 1.0), Err(LearnError::Threshold(1.0)));
        assert_eq!(labels_from_probabilities(&[0.5], 0.0), Err(LearnError::Threshold(0.0)));
    }

    #[test]
    fn stable_logistic_helpers() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((log1p_exp(800.0) - 800.0).abs() < 1e-12);
        assert!((log1p_exp(0.0) - 2f64.ln()).abs() < 1e-15);
    }
}
