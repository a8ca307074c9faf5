//! Subcommand bodies. Every artifact lands in the configured output
//! directory and is written through a temporary file plus rename.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use treatclf::dataset::{ingest, Dataset, EncodingPolicy, Ingested, Schema};
use treatclf::explain::{explain_dataset, ranking_json, shap_summary, write_explanations_csv, ShapMethod};
use treatclf::harness::{
    metric_records, read_iterations_csv, run_experiment, select_best, summarize_records, write_iterations_csv,
    BootstrapSummary,
};
use treatclf::learners::{fit, ClassifierSpec, Family};
use treatclf::report::{build_report, parse_table3_csv, render_table3_text, table3_json, write_table3_csv};
use treatclf::seed::{self, tag};
use treatclf::stats::bivariate_report;
use treatclf::synth::{synthetic_table, SynthOptions};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const DATASET_FILE: &str = "dataset.csv";
pub const INGEST_REPORT_FILE: &str = "ingest_report.json";
pub const ITERATIONS_FILE: &str = "iterations.csv";
pub const SUMMARY_CSV: &str = "summary_table.csv";
pub const SHAP_VALUES_FILE: &str = "shap_values.csv";
pub const SHAP_RANKING_FILE: &str = "shap_ranking.json";
pub const SYNTH_FILE: &str = "synthetic.csv";

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Writes `bytes` to `dir/name` by way of a sibling temporary file.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, &path).map_err(|e| CliError::Runtime(format!("cannot move into {}: {e}", path.display())))?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn json_bytes(v: &impl serde::Serialize) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("artifact serializes");
    b.push(b'\n');
    b
}

/// Opens a file that an earlier command should have produced.
fn open_artifact(path: &Path, producer: &str) -> Result<fs::File, CliError> {
    fs::File::open(path).map_err(|e| {
        CliError::Data(format!(
            "cannot open {} ({e}); run `treatclf {producer}` with the same --out first",
            path.display()
        ))
    })
}

fn ingest_input(cfg: &ExperimentConfig) -> Result<Ingested, CliError> {
    let path = cfg.input_path()?;
    let file = fs::File::open(path).map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    Ok(ingest(file, &Schema::clinical(), EncodingPolicy::FullOneHot)?)
}

pub fn cmd_ingest(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let ing = ingest_input(cfg)?;
    let r = &ing.report;
    log::info!(
        "parsed {}, labeled {}, complete cases {} ({} chemotherapy, {} hormone therapy)",
        r.parsed,
        r.labeled,
        r.complete_cases,
        r.chemotherapy,
        r.hormone_therapy
    );
    let mut csv = Vec::new();
    ing.dataset.write_csv(&mut csv)?;
    write_atomic(&cfg.out, DATASET_FILE, &csv)?;
    write_atomic(&cfg.out, INGEST_REPORT_FILE, &json_bytes(&ing.report))?;
    Ok(())
}

pub fn cmd_describe(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let ing = ingest_input(cfg)?;
    let report = bivariate_report(&ing.records, &Schema::clinical())?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv).map_err(runtime)?;
    write_atomic(&cfg.out, "bivariate.txt", report.render_text().as_bytes())?;
    write_atomic(&cfg.out, "bivariate.csv", &csv)?;
    write_atomic(&cfg.out, "bivariate.json", &json_bytes(&report))?;
    Ok(())
}

/// Loads the encoded dataset written by `ingest`.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset, CliError> {
    let file = open_artifact(&cfg.out.join(DATASET_FILE), "ingest")?;
    let mut ds = Dataset::read_csv(file)?;
    // ingest always z-scores numeric columns for the linear families
    ds.standardize = true;
    Ok(ds)
}

fn run_metadata(cfg: &ExperimentConfig, best: Option<&str>) -> serde_json::Value {
    json!({
        "iterations": cfg.iterations,
        "folds": cfg.folds,
        "master_seed": cfg.master_seed,
        "stratify": cfg.stratify,
        "models": cfg.models,
        "best_model": best,
    })
}

fn write_summary(cfg: &ExperimentConfig, summary: &BootstrapSummary) -> Result<(), CliError> {
    let best = select_best(summary).ok();
    let mut csv = Vec::new();
    write_table3_csv(summary, &mut csv).map_err(runtime)?;
    write_atomic(&cfg.out, "summary_table.txt", render_table3_text(summary).as_bytes())?;
    write_atomic(&cfg.out, SUMMARY_CSV, &csv)?;
    let meta = run_metadata(cfg, best.as_deref());
    write_atomic(&cfg.out, "summary_table.json", &json_bytes(&table3_json(summary, &meta)))?;
    Ok(())
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let data = load_dataset(cfg)?;
    let specs = cfg.specs()?;
    log::info!(
        "running {} iterations of {}-fold CV for {} models on {} rows",
        cfg.iterations,
        cfg.folds,
        specs.len(),
        data.nrows()
    );
    let experiment = run_experiment(&data, &specs, &cfg.experiment_options())?;
    let records = metric_records(&experiment.results);
    let mut csv = Vec::new();
    write_iterations_csv(&records, &mut csv)?;
    write_atomic(&cfg.out, ITERATIONS_FILE, &csv)?;
    let summary = summarize_records(&records)?;
    write_summary(cfg, &summary)?;
    if let Ok(best) = select_best(&summary) {
        log::info!("best model by mean accuracy: {best}");
    }
    Ok(())
}

/// Resolves the explained model name and its spec.
fn explain_target(cfg: &ExperimentConfig) -> Result<(String, ClassifierSpec), CliError> {
    let name = if cfg.shap.target.eq_ignore_ascii_case("best") {
        let file = open_artifact(&cfg.out.join(SUMMARY_CSV), "run")?;
        let summary = parse_table3_csv(file)?;
        select_best(&summary)?
    } else {
        cfg.shap.target.clone()
    };
    let named = cfg.named_specs()?;
    if let Some((n, s)) = named.iter().find(|(n, _)| *n == name) {
        return Ok((n.clone(), s.clone()));
    }
    let family: Family = name
        .parse()
        .map_err(|_| CliError::Config(format!("shap target {name:?} is neither \"best\" nor a model of this run")))?;
    match named.iter().find(|(_, s)| s.family() == family) {
        Some((n, s)) => Ok((n.clone(), s.clone())),
        None => Ok((family.name().to_string(), ClassifierSpec::new(family, 0))),
    }
}

fn background_rows(n: usize, m: Option<usize>) -> Vec<usize> {
    match m {
        Some(m) if m < n => (0..m).map(|i| i * n / m).collect(),
        _ => (0..n).collect(),
    }
}

pub fn cmd_explain(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let (name, spec) = explain_target(cfg)?;
    let family = spec.family();
    if !family.is_tree_based() && cfg.shap.permutations == 0 {
        return Err(CliError::Config(format!(
            "{name} has no trees, so shap.permutations must be at least 1"
        )));
    }
    let data = load_dataset(cfg)?;
    let spec = spec.with_seed(seed::derive(cfg.master_seed, &[tag::MODEL, spec.seed]));
    let model = fit(&spec, &data)?;
    let background = data.select_rows(&background_rows(data.nrows(), cfg.shap.background_rows));
    let method = ShapMethod::Auto {
        permutations: cfg.shap.permutations,
        seed: seed::derive(cfg.master_seed, &[tag::SHAP]),
    };
    log::info!(
        "explaining {} rows with {name} ({}) against {} background rows",
        data.nrows(),
        if family.is_tree_based() { "TreeSHAP" } else { "sampled Shapley" },
        background.nrows()
    );
    let explanations = explain_dataset(&model, &data, &background, method, cfg.jobs)?;
    let summary = shap_summary(&explanations)?;
    let mut csv = Vec::new();
    write_explanations_csv(&explanations, &mut csv).map_err(runtime)?;
    write_atomic(&cfg.out, SHAP_VALUES_FILE, &csv)?;
    write_atomic(&cfg.out, SHAP_RANKING_FILE, &json_bytes(&ranking_json(&summary)))?;
    let top: Vec<&str> = summary.features.iter().take(4).map(|f| f.feature.as_str()).collect();
    log::info!("top features: {}", top.join(", "));
    Ok(())
}

pub fn cmd_report(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let file = open_artifact(&cfg.out.join(ITERATIONS_FILE), "run")?;
    let records = read_iterations_csv(file)?;
    let summary = summarize_records(&records)?;
    let best = select_best(&summary).ok();
    let files = build_report(&records, &summary, &run_metadata(cfg, best.as_deref()))?;
    for (name, bytes) in &files.files {
        write_atomic(&cfg.out, name, bytes)?;
    }
    log::info!("rendered {} panels", files.panels);
    Ok(())
}

pub fn cmd_synth(cfg: &ExperimentConfig, null: bool) -> Result<(), CliError> {
    let opts = SynthOptions {
        seed: cfg.master_seed,
        null,
        ..SynthOptions::default()
    };
    write_atomic(&cfg.out, SYNTH_FILE, synthetic_table(&opts).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn background_rows_are_evenly_spaced() {
        assert_eq!(background_rows(10, Some(5)), vec![0, 2, 4, 6, 8]);
        assert_eq!(background_rows(3, Some(5)), vec![0, 1, 2]);
        assert_eq!(background_rows(4, None), vec![0, 1, 2, 3]);
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "a.txt", b"one").unwrap();
        write_atomic(dir.path(), "a.txt", b"two").unwrap();
        assert_eq!(fs::read(dir.path().join("a.txt")).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
