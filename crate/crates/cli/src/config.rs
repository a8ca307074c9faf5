//! Experiment configuration: one JSON file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use treatclf::harness::{model_names, ExperimentOptions};
use treatclf::learners::{ClassifierSpec, Family};

use crate::error::CliError;

/// A model entry: a bare family name, or a family with hyperparameter
/// overrides such as `{"family": "GBM", "n_stages": 50}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelEntry {
    Name(String),
    Spec(ClassifierSpec),
}

impl ModelEntry {
    pub fn to_spec(&self) -> Result<ClassifierSpec, CliError> {
        match self {
            ModelEntry::Name(n) => {
                let family: Family = n.parse().map_err(|e: treatclf::learners::LearnError| CliError::Config(e.to_string()))?;
                Ok(ClassifierSpec::new(family, 0))
            }
            ModelEntry::Spec(s) => Ok(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapConfig {
    /// `"best"` or a model name from the run.
    pub target: String,
    /// Permutations per row for models without trees.
    pub permutations: usize,
    /// Evenly spaced background rows; `None` uses every row.
    pub background_rows: Option<usize>,
}

impl Default for ShapConfig {
    fn default() -> Self {
        Self {
            target: "best".to_string(),
            permutations: 200,
            background_rows: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Raw clinical table.
    pub input: Option<PathBuf>,
    /// Directory for every artifact.
    pub out: PathBuf,
    #[serde(alias = "k")]
    pub folds: usize,
    #[serde(alias = "N")]
    pub iterations: usize,
    pub master_seed: u64,
    pub models: Vec<ModelEntry>,
    pub stratify: bool,
    pub jobs: usize,
    pub shap: ShapConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            input: None,
            out: PathBuf::from("out"),
            folds: 5,
            iterations: 1000,
            master_seed: 0,
            models: Family::ALL.iter().map(|f| ModelEntry::Name(f.name().to_string())).collect(),
            stratify: false,
            jobs: 1,
            shap: ShapConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub folds: Option<usize>,
    pub models: Option<Vec<String>>,
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies flag overrides. A `--models` family that the file configures
    /// keeps its file hyperparameters.
    pub fn apply(mut self, o: &Overrides) -> Result<Self, CliError> {
        if let Some(v) = &o.input {
            self.input = Some(v.clone());
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = o.seed {
            self.master_seed = v;
        }
        if let Some(v) = o.iterations {
            self.iterations = v;
        }
        if let Some(v) = o.folds {
            self.folds = v;
        }
        if let Some(v) = o.jobs {
            self.jobs = v;
        }
        if let Some(names) = &o.models {
            let configured = self.specs()?;
            let mut models = Vec::new();
            for n in names {
                let family: Family = n.parse().map_err(|e: treatclf::learners::LearnError| CliError::Config(e.to_string()))?;
                models.push(match configured.iter().find(|s| s.family() == family) {
                    Some(s) => ModelEntry::Spec(s.clone()),
                    None => ModelEntry::Name(family.name().to_string()),
                });
            }
            self.models = models;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.iterations < 1 {
            return Err(CliError::Config("iterations must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(CliError::Config(format!("folds must be at least 2, got {}", self.folds)));
        }
        if self.jobs < 1 {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        if self.models.is_empty() {
            return Err(CliError::Config("model list is empty".into()));
        }
        for s in self.specs()? {
            s.validate()?;
        }
        if self.shap.background_rows == Some(0) {
            return Err(CliError::Config("shap.background_rows must be at least 1".into()));
        }
        Ok(())
    }

    pub fn specs(&self) -> Result<Vec<ClassifierSpec>, CliError> {
        self.models.iter().map(ModelEntry::to_spec).collect()
    }

    /// Run names with their specs, in configuration order.
    pub fn named_specs(&self) -> Result<Vec<(String, ClassifierSpec)>, CliError> {
        let specs = self.specs()?;
        Ok(model_names(&specs).into_iter().zip(specs).collect())
    }

    pub fn experiment_options(&self) -> ExperimentOptions {
        ExperimentOptions {
            iterations: self.iterations,
            folds: self.folds,
            master_seed: self.master_seed,
            stratified: self.stratify,
            jobs: self.jobs,
        }
    }

    pub fn input_path(&self) -> Result<&Path, CliError> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::Config("no input table; pass --input or set \"input\" in the config".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_cover_all_families() {
        let c = ExperimentConfig::default();
        assert_eq!(c.specs().unwrap().len(), 7);
        assert_eq!((c.folds, c.iterations), (5, 1000));
        c.validate().unwrap();
    }

    #[test]
    fn file_keys_accept_short_aliases_and_overrides() {
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"k": 3, "N": 7, "models": ["rf", {"family": "GBM", "n_stages": 5}]}"#).unwrap();
        assert_eq!((c.folds, c.iterations), (3, 7));
        let specs = c.specs().unwrap();
        assert_eq!(specs[0].family(), Family::Rf);
        assert_eq!(specs[1].family(), Family::Gbm);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"itertions": 3}"#).is_err());
    }

    #[test]
    fn flags_win_and_keep_file_hyperparameters() {
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"iterations": 9, "models": [{"family": "GBM", "n_stages": 5}]}"#).unwrap();
        let o = Overrides {
            iterations: Some(2),
            models: Some(vec!["GBM".into(), "LR".into()]),
            ..Default::default()
        };
        let c = c.apply(&o).unwrap();
        assert_eq!(c.iterations, 2);
        let file_spec: ClassifierSpec = serde_json::from_str(r#"{"family": "GBM", "n_stages": 5}"#).unwrap();
        assert_eq!(c.specs().unwrap()[0], file_spec);
        assert_eq!(c.specs().unwrap()[1].family(), Family::Lr);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let o = Overrides {
            folds: Some(1),
            ..Default::default()
        };
        let e = ExperimentConfig::default().apply(&o).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let o = Overrides {
            models: Some(vec!["knn".into()]),
            ..Default::default()
        };
        assert_eq!(ExperimentConfig::default().apply(&o).unwrap_err().exit_code(), 2);
    }
}
