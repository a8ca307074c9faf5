//! Treatment-classification toolkit: clinical recoding, bivariate statistics,
//! seven classifiers, a bootstrap cross-validation harness, Shapley
//! explanations and report rendering.

pub mod dataset;
pub mod eval;
pub mod explain;
pub mod harness;
pub mod learners;
pub mod matrix;
pub mod report;
pub mod seed;
pub mod stats;
pub mod synth;
