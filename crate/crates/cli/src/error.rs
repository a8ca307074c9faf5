use thiserror::Error;

/// Failure classes, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl From<treatclf::dataset::DatasetError> for CliError {
    fn from(e: treatclf::dataset::DatasetError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<treatclf::stats::StatsError> for CliError {
    fn from(e: treatclf::stats::StatsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<treatclf::harness::HarnessError> for CliError {
    fn from(e: treatclf::harness::HarnessError) -> Self {
        use treatclf::harness::HarnessError as H;
        match e {
            H::TooFewRows { .. } | H::InvalidFolds(_) | H::NoIterations | H::NoModels => CliError::Config(e.to_string()),
            H::Malformed(_) | H::Csv(_) | H::EmptySummary => CliError::Data(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<treatclf::learners::LearnError> for CliError {
    fn from(e: treatclf::learners::LearnError) -> Self {
        use treatclf::learners::LearnError as L;
        match e {
            L::InvalidHyperparameter { .. } | L::UnknownFamily(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<treatclf::explain::ExplainError> for CliError {
    fn from(e: treatclf::explain::ExplainError) -> Self {
        use treatclf::explain::ExplainError as X;
        match e {
            X::NoPermutations | X::NotTreeModel(_) | X::TooManyColumns { .. } => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<treatclf::report::ReportError> for CliError {
    fn from(e: treatclf::report::ReportError) -> Self {
        CliError::Data(e.to_string())
    }
}
