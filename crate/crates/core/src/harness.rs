//! Bootstrap × cross-validation evaluation loop.
//!
//! Folds are drawn once from the master seed and held fixed. Every iteration
//! resamples each fold's training rows with replacement, trains every model on
//! that resample, scores the held-out fold, and computes one metric vector per
//! model from the predictions pooled over all folds.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Treatment};
use crate::eval::{compute_metrics, confusion, EvalError, Metric, MetricVector};
use crate::learners::{self, ClassifierSpec, LearnError};
use crate::seed::{self, tag};
use crate::stats::{mean, quantile_sorted, sample_sd, sorted_copy};

/// Resample attempts per fold before giving up on getting both classes.
pub const MAX_RESAMPLE_RETRIES: usize = 100;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("need at least {k} rows for {k} folds, got {n}")]
    TooFewRows { n: usize, k: usize },
    #[error("fold count must be at least 2, got {0}")]
    InvalidFolds(usize),
    #[error("iteration count must be at least 1")]
    NoIterations,
    #[error("no models to evaluate")]
    NoModels,
    #[error("iteration {iteration}, fold {fold}: no two-class resample after {retries} draws")]
    ResampleExhausted { iteration: usize, fold: usize, retries: usize },
    #[error("iteration {iteration}, fold {fold}, model {model}: {source}")]
    Fit {
        iteration: usize,
        fold: usize,
        model: String,
        source: LearnError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("nothing to summarize")]
    EmptySummary,
    #[error("malformed iteration record: {0}")]
    Malformed(String),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    /// Fold id of every row.
    pub assignment: Vec<usize>,
    pub master_seed: u64,
    pub stratified: bool,
}

impl FoldAssignment {
    pub fn n_rows(&self) -> usize {
        self.assignment.len()
    }

    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.assignment[i] != fold).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &f in &self.assignment {
            s[f] += 1;
        }
        s
    }
}

fn check_folds(n: usize, k: usize) -> Result<(), HarnessError> {
    if k < 2 {
        return Err(HarnessError::InvalidFolds(k));
    }
    if n < k {
        return Err(HarnessError::TooFewRows { n, k });
    }
    Ok(())
}

/// Uniform random permutation of the rows chunked into `k` near-equal folds.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldAssignment, HarnessError> {
    check_folds(n, k)?;
    let mut rng = seed::rng_for(seed, &[tag::FOLDS]);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut assignment = vec![0; n];
    for (pos, &row) in perm.iter().enumerate() {
        // the first n mod k folds receive one extra row
        assignment[row] = fold_of_position(pos, n, k);
    }
    Ok(FoldAssignment {
        k,
        assignment,
        master_seed: seed,
        stratified: false,
    })
}

fn fold_of_position(pos: usize, n: usize, k: usize) -> usize {
    let base = n / k;
    let extra = n % k;
    let big = extra * (base + 1);
    if pos < big {
        pos / (base + 1)
    } else {
        extra + (pos - big) / base
    }
}

/// Folds that deal each class round-robin after a per-class shuffle, so class
/// proportions are preserved and fold sizes still differ by at most one.
pub fn make_stratified_folds(labels: &[Treatment], k: usize, seed: u64) -> Result<FoldAssignment, HarnessError> {
    let n = labels.len();
    check_folds(n, k)?;
    let mut rng = seed::rng_for(seed, &[tag::FOLDS]);
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for class in [Treatment::Chemotherapy, Treatment::HormoneTherapy] {
        let mut rows: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        rows.shuffle(&mut rng);
        order.extend(rows);
    }
    let mut assignment = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        assignment[row] = pos % k;
    }
    Ok(FoldAssignment {
        k,
        assignment,
        master_seed: seed,
        stratified: true,
    })
}

/// Same-length sample of `indices` drawn with replacement.
pub fn bootstrap_resample<R: Rng + ?Sized>(indices: &[usize], rng: &mut R) -> Vec<usize> {
    let n = indices.len();
    (0..n).map(|_| indices[rng.random_range(0..n)]).collect()
}

/// Unique display names for a model list: the family name, suffixed with
/// `#2`, `#3`, … on repeats.
pub fn model_names(specs: &[ClassifierSpec]) -> Vec<String> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    specs
        .iter()
        .map(|s| {
            let name = s.family().name();
            let c = seen.entry(name).or_insert(0);
            *c += 1;
            if *c == 1 {
                name.to_string()
            } else {
                format!("{name}#{c}")
            }
        })
        .collect()
}

/// One model's pooled out-of-fold predictions, in dataset row order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPredictions {
    pub model: String,
    pub scores: Vec<f64>,
    pub labels: Vec<Treatment>,
    /// How many times each row was predicted; all ones when coverage holds.
    pub times_predicted: Vec<u32>,
    pub metrics: MetricVector,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationResult {
    /// 1-based.
    pub iteration: usize,
    pub models: Vec<ModelPredictions>,
    /// Single-class training resamples that had to be redrawn.
    pub redrawn_resamples: usize,
}

pub fn iteration_seed(master_seed: u64, iteration: usize) -> u64 {
    seed::derive(master_seed, &[tag::ITERATION, iteration as u64])
}

pub fn run_iteration(
    dataset: &Dataset,
    folds: &FoldAssignment,
    specs: &[ClassifierSpec],
    iteration: usize,
    iteration_seed: u64,
) -> Result<IterationResult, HarnessError> {
    if specs.is_empty() {
        return Err(HarnessError::NoModels);
    }
    check_folds(dataset.nrows(), folds.k)?;
    let n = dataset.nrows();
    let names = model_names(specs);
    let mut scores = vec![vec![f64::NAN; n]; specs.len()];
    let mut times = vec![vec![0u32; n]; specs.len()];
    let mut converged = vec![true; specs.len()];
    let mut redrawn = 0;
    for fold in 0..folds.k {
        let test = folds.test_rows(fold);
        let train = folds.train_rows(fold);
        if train.is_empty() || test.is_empty() {
            return Err(HarnessError::TooFewRows { n, k: folds.k });
        }
        let mut rng = seed::rng_for(iteration_seed, &[tag::FOLD_RESAMPLE, fold as u64]);
        let mut attempts = 0;
        let sample = loop {
            let s = bootstrap_resample(&train, &mut rng);
            let pos = s.iter().filter(|&&i| dataset.y[i].is_positive()).count();
            if pos > 0 && pos < s.len() {
                break s;
            }
            attempts += 1;
            redrawn += 1;
            if attempts >= MAX_RESAMPLE_RETRIES {
                return Err(HarnessError::ResampleExhausted {
                    iteration,
                    fold,
                    retries: attempts,
                });
            }
        };
        let train_set = dataset.select_rows(&sample);
        let test_x = dataset.x.select_rows(&test);
        for (m, spec) in specs.iter().enumerate() {
            let seeded = spec.with_seed(seed::derive(iteration_seed, &[tag::MODEL, fold as u64, m as u64]));
            let model = learners::fit(&seeded, &train_set).map_err(|source| HarnessError::Fit {
                iteration,
                fold,
                model: names[m].clone(),
                source,
            })?;
            converged[m] &= model.converged;
            let proba = model.predict_proba(&test_x).map_err(|source| HarnessError::Fit {
                iteration,
                fold,
                model: names[m].clone(),
                source,
            })?;
            for (&row, p) in test.iter().zip(proba) {
                scores[m][row] = p;
                times[m][row] += 1;
            }
        }
    }
    let mut models = Vec::with_capacity(specs.len());
    for (m, name) in names.into_iter().enumerate() {
        let labels = learners::labels_from_probabilities(&scores[m], DEFAULT_THRESHOLD).expect("valid threshold");
        let cm = confusion(&dataset.y, &labels)?;
        let metrics = compute_metrics(&cm, &scores[m], &dataset.y)?;
        models.push(ModelPredictions {
            model: name,
            scores: std::mem::take(&mut scores[m]),
            labels,
            times_predicted: std::mem::take(&mut times[m]),
            metrics,
            converged: converged[m],
        });
    }
    Ok(IterationResult {
        iteration,
        models,
        redrawn_resamples: redrawn,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub iterations: usize,
    pub folds: usize,
    pub master_seed: u64,
    pub stratified: bool,
    /// Worker threads; 1 runs serially on the calling thread.
    pub jobs: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            iterations: 1000,
            folds: 5,
            master_seed: 0,
            stratified: false,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub folds: FoldAssignment,
    pub models: Vec<String>,
    pub results: Vec<IterationResult>,
}

pub fn run_experiment(
    dataset: &Dataset,
    specs: &[ClassifierSpec],
    options: &ExperimentOptions,
) -> Result<Experiment, HarnessError> {
    if options.iterations < 1 {
        return Err(HarnessError::NoIterations);
    }
    if specs.is_empty() {
        return Err(HarnessError::NoModels);
    }
    let folds = if options.stratified {
        make_stratified_folds(&dataset.y, options.folds, options.master_seed)?
    } else {
        make_folds(dataset.nrows(), options.folds, options.master_seed)?
    };
    let one = |it: usize| {
        let r = run_iteration(dataset, &folds, specs, it, iteration_seed(options.master_seed, it));
        if let Ok(res) = &r {
            log::debug!("iteration {it} done ({} redrawn resamples)", res.redrawn_resamples);
        }
        r
    };
    let ids: Vec<usize> = (1..=options.iterations).collect();
    let results: Result<Vec<IterationResult>, HarnessError> = if options.jobs <= 1 {
        ids.iter().map(|&it| one(it)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .map_err(|e| HarnessError::Pool(e.to_string()))?;
        pool.install(|| ids.par_iter().map(|&it| one(it)).collect())
    };
    Ok(Experiment {
        folds,
        models: model_names(specs),
        results: results?,
    })
}

/// One (iteration, model, metric) value as persisted.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub iteration: usize,
    pub model: String,
    pub metric: Metric,
    pub value: Option<f64>,
}

pub fn metric_records(results: &[IterationResult]) -> Vec<MetricRecord> {
    let mut out = Vec::new();
    for r in results {
        for m in &r.models {
            for metric in Metric::ALL {
                out.push(MetricRecord {
                    iteration: r.iteration,
                    model: m.model.clone(),
                    metric,
                    value: m.metrics.get(metric),
                });
            }
        }
    }
    out
}

/// CSV with columns `iteration,model,metric,value`. Values use the shortest
/// representation that parses back to the same number; absent values are
/// empty.
pub fn write_iterations_csv<W: Write>(records: &[MetricRecord], sink: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["iteration", "model", "metric", "value"])?;
    for r in records {
        let value = r.value.map(|v| format!("{v:?}")).unwrap_or_default();
        w.write_record([r.iteration.to_string(), r.model.clone(), r.metric.as_str().to_string(), value])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_iterations_csv<R: Read>(source: R) -> Result<Vec<MetricRecord>, HarnessError> {
    let mut rdr = csv::Reader::from_reader(source);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["iteration", "model", "metric", "value"] {
        return Err(HarnessError::Malformed(format!("unexpected header {headers:?}")));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| HarnessError::Malformed(format!("line {}: {what}", line + 2));
        let iteration = rec[0].parse().map_err(|_| bad("iteration"))?;
        let metric = Metric::parse(&rec[2]).ok_or_else(|| bad("metric"))?;
        let value = if rec[3].is_empty() {
            None
        } else {
            Some(rec[3].parse::<f64>().map_err(|_| bad("value"))?)
        };
        out.push(MetricRecord {
            iteration,
            model: rec[1].to_string(),
            metric,
            value,
        });
    }
    Ok(out)
}

/// Standard-error interval `mean ± 1.96·sd/√n`.
pub fn ci_bounds(mean: f64, sd: f64, n: usize) -> (f64, f64) {
    let half = 1.96 * sd / (n as f64).sqrt();
    (mean - half, mean + half)
}

/// Rounds exactly as fixed-point display does, so a printed value parses
/// back to the rounded one.
pub fn round_to(v: f64, decimals: usize) -> f64 {
    format!("{v:.decimals$}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// 2.5th and 97.5th percentiles of the iteration values.
    pub percentile_low: f64,
    pub percentile_high: f64,
    /// Iterations with a defined value.
    pub n: usize,
    /// Iterations whose value was undefined and skipped.
    pub n_missing: usize,
}

/// Summary of one metric over iterations. Absent values are skipped and
/// counted. Fewer than two values give `sd = 0`.
pub fn summarize_values(values: &[Option<f64>]) -> Option<SummaryStats> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.is_empty() {
        return None;
    }
    let n = present.len();
    let m = mean(&present);
    let sd = if n > 1 { sample_sd(&present) } else { 0.0 };
    let sorted = sorted_copy(&present);
    let (lower_bound, upper_bound) = ci_bounds(m, sd, n);
    Some(SummaryStats {
        mean: m,
        median: quantile_sorted(&sorted, 0.5),
        sd,
        lower_bound,
        upper_bound,
        percentile_low: quantile_sorted(&sorted, 0.025),
        percentile_high: quantile_sorted(&sorted, 0.975),
        n,
        n_missing: values.len() - n,
    })
}

impl SummaryStats {
    pub fn rounded(&self, decimals: usize) -> Self {
        Self {
            mean: round_to(self.mean, decimals),
            median: round_to(self.median, decimals),
            sd: round_to(self.sd, decimals),
            lower_bound: round_to(self.lower_bound, decimals),
            upper_bound: round_to(self.upper_bound, decimals),
            percentile_low: round_to(self.percentile_low, decimals),
            percentile_high: round_to(self.percentile_high, decimals),
            n: self.n,
            n_missing: self.n_missing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub metric: Metric,
    /// `None` when every iteration's value was undefined.
    pub stats: Option<SummaryStats>,
    pub n_missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub n_iterations: usize,
    /// Grouped by model in run order, metrics in reporting order.
    pub rows: Vec<SummaryRow>,
}

impl BootstrapSummary {
    pub fn models(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.model) {
                out.push(r.model.clone());
            }
        }
        out
    }

    pub fn get(&self, model: &str, metric: Metric) -> Option<&SummaryStats> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.metric == metric)
            .and_then(|r| r.stats.as_ref())
    }

    pub fn rounded(&self, decimals: usize) -> Self {
        Self {
            n_iterations: self.n_iterations,
            rows: self
                .rows
                .iter()
                .map(|r| SummaryRow {
                    stats: r.stats.map(|s| s.rounded(decimals)),
                    ..r.clone()
                })
                .collect(),
        }
    }
}

/// Summarizes persisted metric records; models keep first-appearance order.
pub fn summarize_records(records: &[MetricRecord]) -> Result<BootstrapSummary, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::EmptySummary);
    }
    let mut models: Vec<&str> = Vec::new();
    let mut values: BTreeMap<(&str, Metric), Vec<(usize, Option<f64>)>> = BTreeMap::new();
    for r in records {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
        values.entry((&r.model, r.metric)).or_default().push((r.iteration, r.value));
    }
    let mut iterations: Vec<usize> = records.iter().map(|r| r.iteration).collect();
    iterations.sort_unstable();
    iterations.dedup();
    let mut rows = Vec::new();
    for model in models {
        for metric in Metric::ALL {
            let mut v = values.remove(&(model, metric)).unwrap_or_default();
            v.sort_by_key(|(it, _)| *it);
            let vals: Vec<Option<f64>> = v.into_iter().map(|(_, x)| x).collect();
            let stats = summarize_values(&vals);
            let n_missing = stats.map_or(vals.len(), |s| s.n_missing);
            rows.push(SummaryRow {
                model: model.to_string(),
                metric,
                stats,
                n_missing,
            });
        }
    }
    Ok(BootstrapSummary {
        n_iterations: iterations.len(),
        rows,
    })
}

pub fn summarize(results: &[IterationResult]) -> Result<BootstrapSummary, HarnessError> {
    summarize_records(&metric_records(results))
}

/// Highest mean accuracy; ties go to the higher mean AUROC, then the
/// lexicographically smaller name.
pub fn select_best(summary: &BootstrapSummary) -> Result<String, HarnessError> {
    let key = |model: &str, metric: Metric| summary.get(model, metric).map_or(f64::NEG_INFINITY, |s| s.mean);
    summary
        .models()
        .into_iter()
        .min_by(|a, b| {
            key(b, Metric::Accuracy)
                .total_cmp(&key(a, Metric::Accuracy))
                .then(key(b, Metric::Auroc).total_cmp(&key(a, Metric::Auroc)))
                .then(a.cmp(b))
        })
        .ok_or(HarnessError::EmptySummary)
}
