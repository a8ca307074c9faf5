//! Per-family column selection and z-scoring, fitted on training rows only.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::matrix::Matrix;

/// Maps a full-width dataset row to the columns a model was trained on:
/// `out[k] = (row[columns[k]] - center[k]) / scale[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub input_columns: usize,
    pub columns: Vec<usize>,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Preprocessor {
    pub fn identity(p: usize) -> Self {
        Self {
            input_columns: p,
            columns: (0..p).collect(),
            center: vec![0.0; p],
            scale: vec![1.0; p],
        }
    }

    /// Drop-first columns of `train`, with numeric columns z-scored on the
    /// training rows when the dataset asks for standardization. A column with
    /// zero spread keeps scale 1.
    pub fn linear(train: &Dataset) -> Self {
        let columns = train.drop_first_columns();
        let mut center = vec![0.0; columns.len()];
        let mut scale = vec![1.0; columns.len()];
        if train.standardize {
            for (k, &j) in columns.iter().enumerate() {
                if !train.lineage[j].is_numeric() {
                    continue;
                }
                let col = train.x.column(j);
                let n = col.len() as f64;
                let mean = col.iter().sum::<f64>() / n;
                let var = if col.len() > 1 {
                    col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
                center[k] = mean;
                let sd = var.sqrt();
                scale[k] = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
            }
        }
        Self {
            input_columns: train.ncols(),
            columns,
            center,
            scale,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.columns.len() == self.input_columns
            && self.columns.iter().enumerate().all(|(k, &j)| k == j)
            && self.center.iter().all(|&c| c == 0.0)
            && self.scale.iter().all(|&s| s == 1.0)
    }

    pub fn output_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn transform_row_into(&self, row: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.columns
                .iter()
                .zip(self.center.iter().zip(&self.scale))
                .map(|(&j, (c, s))| (row[j] - c) / s),
        );
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.columns.len());
        self.transform_row_into(row, &mut out);
        out
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        if self.is_identity() {
            return x.clone();
        }
        let mut data = Vec::with_capacity(x.nrows() * self.columns.len());
        let mut buf = Vec::with_capacity(self.columns.len());
        for row in x.rows_iter() {
            self.transform_row_into(row, &mut buf);
            data.extend_from_slice(&buf);
        }
        Matrix::from_vec(x.nrows(), self.columns.len(), data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnLevel, ColumnLineage, EncodingPolicy, Treatment};

    fn fixture() -> Dataset {
        let lineage = vec![
            ColumnLineage {
                feature: "Age".into(),
                level: ColumnLevel::Numeric,
            },
            ColumnLineage {
                feature: "ER".into(),
                level: ColumnLevel::Category("Negative".into()),
            },
            ColumnLineage {
                feature: "ER".into(),
                level: ColumnLevel::Category("Positive".into()),
            },
            ColumnLineage {
                feature: "Const".into(),
                level: ColumnLevel::Numeric,
            },
        ];
        Dataset {
            x: Matrix::from_rows(&[[40.0, 1.0, 0.0, 3.0], [50.0, 0.0, 1.0, 3.0], [60.0, 0.0, 1.0, 3.0]]),
            y: vec![Treatment::Chemotherapy, Treatment::HormoneTherapy, Treatment::Chemotherapy],
            lineage,
            row_ids: vec!["a".into(), "b".into(), "c".into()],
            features: vec!["Age".into(), "ER".into(), "Const".into()],
            policy: EncodingPolicy::FullOneHot,
            standardize: true,
        }
    }

    #[test]
    fn linear_drops_first_level_and_scales_numeric() {
        let p = Preprocessor::linear(&fixture());
        assert_eq!(p.columns, vec![0, 2, 3]);
        assert_eq!(p.center, vec![50.0, 0.0, 3.0]);
        assert_eq!(p.scale, vec![10.0, 1.0, 1.0]);
        assert_eq!(p.transform_row(&[60.0, 0.0, 1.0, 3.0]), vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn identity_is_a_no_op() {
        let d = fixture();
        let p = Preprocessor::identity(4);
        assert!(p.is_identity());
        assert_eq!(p.transform(&d.x), d.x);
    }
}
