use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{DatasetError, RawRecord, Schema, Treatment};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingPolicy {
    FullOneHot,
    DropFirst,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnLevel {
    Numeric,
    Category(String),
}

/// Source of one encoded column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnLineage {
    pub feature: String,
    pub level: ColumnLevel,
}

impl ColumnLineage {
    pub fn is_numeric(&self) -> bool {
        self.level == ColumnLevel::Numeric
    }

    /// Header label: the feature name for numeric columns, `feature=level`
    /// for indicators.
    pub fn label(&self) -> String {
        match &self.level {
            ColumnLevel::Numeric => self.feature.clone(),
            ColumnLevel::Category(c) => format!("{}={}", self.feature, c),
        }
    }

    pub fn parse_label(label: &str) -> Self {
        match label.split_once('=') {
            Some((f, c)) => Self {
                feature: f.to_string(),
                level: ColumnLevel::Category(c.to_string()),
            },
            None => Self {
                feature: label.to_string(),
                level: ColumnLevel::Numeric,
            },
        }
    }
}

/// Encoded design matrix with labels and column lineage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<Treatment>,
    pub lineage: Vec<ColumnLineage>,
    pub row_ids: Vec<String>,
    /// Source features in schema order.
    pub features: Vec<String>,
    pub policy: EncodingPolicy,
    /// Numeric columns are to be z-scored at training time.
    pub standardize: bool,
}

#[derive(Debug, Clone)]
pub struct Encoded {
    pub dataset: Dataset,
    pub warnings: Vec<String>,
}

/// Expands complete-case records into a numeric design matrix.
///
/// Categorical features emit one indicator per observed category, in schema
/// order; `DropFirst` omits the first observed one. A feature with a single
/// observed level under `DropFirst` produces no columns and a warning.
pub fn encode(
    records: &[RawRecord],
    schema: &Schema,
    policy: EncodingPolicy,
    standardize: bool,
) -> Result<Encoded, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::NoCompleteCases);
    }
    let mut lineage = Vec::new();
    let mut warnings = Vec::new();
    // (feature index, Some(category) or None)
    let mut sources: Vec<(usize, Option<String>)> = Vec::new();
    for (fi, f) in schema.features.iter().enumerate() {
        if f.is_numeric() {
            lineage.push(ColumnLineage {
                feature: f.name.clone(),
                level: ColumnLevel::Numeric,
            });
            sources.push((fi, None));
            continue;
        }
        let observed: Vec<&String> = f
            .categories
            .iter()
            .filter(|c| records.iter().any(|r| r.value(&f.name) == Some(c.as_str())))
            .collect();
        let skip = match policy {
            EncodingPolicy::FullOneHot => 0,
            EncodingPolicy::DropFirst => 1,
        };
        if observed.len() <= skip {
            warnings.push(format!(
                "{}: single observed level under drop-first encoding, feature dropped",
                f.name
            ));
            continue;
        }
        for c in observed.into_iter().skip(skip) {
            lineage.push(ColumnLineage {
                feature: f.name.clone(),
                level: ColumnLevel::Category(c.clone()),
            });
            sources.push((fi, Some(c.clone())));
        }
    }

    let mut x = Matrix::zeros(records.len(), lineage.len());
    let mut y = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        for (j, (fi, cat)) in sources.iter().enumerate() {
            let f = &schema.features[*fi];
            let value = r.value(&f.name).ok_or_else(|| {
                DatasetError::Invalid(format!("{}: {} is absent", r.patient_id, f.name))
            })?;
            let v = match cat {
                None => value.trim().parse::<f64>().map_err(|_| {
                    DatasetError::Invalid(format!("{}: {} is not numeric: {value:?}", r.patient_id, f.name))
                })?,
                Some(c) => {
                    if f.category_index(value).is_none() {
                        return Err(DatasetError::Invalid(format!(
                            "{}: {} value {value:?} is not a category label",
                            r.patient_id, f.name
                        )));
                    }
                    if value == c {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            x.set(i, j, v);
        }
        y.push(r.label.ok_or_else(|| DatasetError::Invalid(format!("{} has no label", r.patient_id)))?);
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Encoded {
        dataset: Dataset {
            x,
            y,
            lineage,
            row_ids: records.iter().map(|r| r.patient_id.clone()).collect(),
            features: schema.names().map(String::from).collect(),
            policy,
            standardize,
        },
        warnings,
    })
}

impl Dataset {
    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.lineage.iter().map(ColumnLineage::label).collect()
    }

    /// 1.0 for Chemotherapy rows.
    pub fn targets(&self) -> Vec<f64> {
        self.y.iter().map(|t| t.indicator()).collect()
    }

    pub fn positives(&self) -> usize {
        self.y.iter().filter(|t| t.is_positive()).count()
    }

    pub fn has_both_classes(&self) -> bool {
        let p = self.positives();
        p > 0 && p < self.nrows()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            lineage: self.lineage.clone(),
            row_ids: idx.iter().map(|&i| self.row_ids[i].clone()).collect(),
            features: self.features.clone(),
            policy: self.policy,
            standardize: self.standardize,
        }
    }

    /// Column indices grouped by source feature, in feature order.
    pub fn feature_groups(&self) -> Vec<(String, Vec<usize>)> {
        let mut groups: Vec<(String, Vec<usize>)> = self
            .features
            .iter()
            .map(|f| (f.clone(), Vec::new()))
            .collect();
        for (j, l) in self.lineage.iter().enumerate() {
            match groups.iter_mut().find(|(f, _)| *f == l.feature) {
                Some((_, cols)) => cols.push(j),
                None => groups.push((l.feature.clone(), vec![j])),
            }
        }
        groups.retain(|(_, cols)| !cols.is_empty());
        groups
    }

    /// Columns kept when moving from full one-hot to drop-first encoding.
    /// Identity for a dataset that is already drop-first.
    pub fn drop_first_columns(&self) -> Vec<usize> {
        if self.policy == EncodingPolicy::DropFirst {
            return (0..self.ncols()).collect();
        }
        let mut keep = Vec::with_capacity(self.ncols());
        let mut last_feature: Option<&str> = None;
        for (j, l) in self.lineage.iter().enumerate() {
            let first_of_group = last_feature != Some(l.feature.as_str());
            last_feature = Some(l.feature.as_str());
            if l.is_numeric() || !first_of_group {
                keep.push(j);
            }
        }
        keep
    }

    /// Recovers the source value of every feature for row `i`: the number
    /// for numeric features, the level for categorical ones. `None` for a
    /// drop-first baseline row whose indicators are all zero.
    pub fn decode_row(&self, i: usize) -> BTreeMap<String, Option<String>> {
        let row = self.x.row(i);
        let mut out = BTreeMap::new();
        for (feature, cols) in self.feature_groups() {
            let first = &self.lineage[cols[0]];
            let value = if first.is_numeric() {
                Some(super::format_number(row[cols[0]]))
            } else {
                cols.iter().find(|&&c| row[c] == 1.0).map(|&c| match &self.lineage[c].level {
                    ColumnLevel::Category(level) => level.clone(),
                    ColumnLevel::Numeric => unreachable!("numeric column in categorical group"),
                })
            };
            out.insert(feature, value);
        }
        out
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let n = self.nrows();
        if self.y.len() != n || self.row_ids.len() != n {
            return Err(DatasetError::Invalid("row count mismatch".into()));
        }
        if self.lineage.len() != self.ncols() {
            return Err(DatasetError::Invalid("lineage does not cover every column".into()));
        }
        if !self.x.all_finite() {
            return Err(DatasetError::Invalid("non-finite entries".into()));
        }
        for (_, cols) in self.feature_groups() {
            if self.lineage[cols[0]].is_numeric() {
                continue;
            }
            for i in 0..n {
                let row = self.x.row(i);
                let mut sum = 0.0;
                for &c in &cols {
                    if row[c] != 0.0 && row[c] != 1.0 {
                        return Err(DatasetError::Invalid(format!("non-binary indicator in row {i}")));
                    }
                    sum += row[c];
                }
                let ok = match self.policy {
                    EncodingPolicy::FullOneHot => sum == 1.0,
                    EncodingPolicy::DropFirst => sum <= 1.0,
                };
                if !ok {
                    return Err(DatasetError::Invalid(format!("indicator group sums to {sum} in row {i}")));
                }
            }
        }
        Ok(())
    }

    /// Writes `patient_id,treatment,<column labels>` followed by one line per
    /// row. Values use the shortest representation that round-trips.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(sink);
        let mut header = vec!["patient_id".to_string(), "treatment".to_string()];
        header.extend(self.column_names());
        w.write_record(&header)?;
        for i in 0..self.nrows() {
            let mut rec = vec![self.row_ids[i].clone(), self.y[i].as_str().to_string()];
            rec.extend(self.x.row(i).iter().map(|v| format!("{v}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format produced by [`Dataset::write_csv`]. Source features
    /// are taken in first-appearance order; the encoding policy is inferred
    /// from whether indicator groups always sum to one.
    pub fn read_csv<R: Read>(source: R) -> Result<Dataset, DatasetError> {
        let mut r = csv::Reader::from_reader(source);
        let headers = r.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "patient_id" || &headers[1] != "treatment" {
            return Err(DatasetError::MissingHeader);
        }
        let lineage: Vec<ColumnLineage> = headers.iter().skip(2).map(ColumnLineage::parse_label).collect();
        let mut features: Vec<String> = Vec::new();
        for l in &lineage {
            if !features.contains(&l.feature) {
                features.push(l.feature.clone());
            }
        }
        let mut data = Vec::new();
        let mut y = Vec::new();
        let mut row_ids = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            row_ids.push(rec[0].to_string());
            y.push(Treatment::parse(&rec[1]).ok_or_else(|| DatasetError::Malformed {
                row: i + 1,
                message: format!("unknown treatment {:?}", &rec[1]),
            })?);
            for cell in rec.iter().skip(2) {
                data.push(cell.parse::<f64>().map_err(|_| DatasetError::Malformed {
                    row: i + 1,
                    message: format!("non-numeric cell {cell:?}"),
                })?);
            }
        }
        if y.is_empty() {
            return Err(DatasetError::NoRows);
        }
        let mut ds = Dataset {
            x: Matrix::from_vec(y.len(), lineage.len(), data),
            y,
            lineage,
            row_ids,
            features,
            policy: EncodingPolicy::FullOneHot,
            standardize: false,
        };
        if ds.validate().is_err() {
            ds.policy = EncodingPolicy::DropFirst;
            ds.validate()?;
        }
        Ok(ds)
    }
}
