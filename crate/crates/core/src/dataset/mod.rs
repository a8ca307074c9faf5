//! Clinical table ingestion: parsing, treatment labels, missing-value rules,
//! recoding and the encoded numeric dataset.

mod encode;
mod schema;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use encode::{encode, ColumnLevel, ColumnLineage, Dataset, Encoded, EncodingPolicy};
pub use schema::{FeatureKind, FeatureSchema, Schema, CLINICAL_FEATURES};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("input has no header row")]
    MissingHeader,
    #[error("header has no column for {0}")]
    MissingColumn(String),
    #[error("duplicate patient id {0:?}")]
    DuplicatePatient(String),
    #[error("input has no data rows")]
    NoRows,
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("{feature}: raw value {value:?} in row {row} ({patient}) has no recode entry")]
    Unmapped {
        feature: String,
        value: String,
        row: usize,
        patient: String,
    },
    #[error("no complete cases remain")]
    NoCompleteCases,
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("dataset: {0}")]
    Invalid(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// First treatment received. Chemotherapy is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Treatment {
    Chemotherapy,
    HormoneTherapy,
}

impl Treatment {
    pub fn is_positive(self) -> bool {
        self == Treatment::Chemotherapy
    }

    /// 1.0 for the positive class, 0.0 otherwise.
    pub fn indicator(self) -> f64 {
        if self.is_positive() {
            1.0
        } else {
            0.0
        }
    }

    pub fn from_positive(positive: bool) -> Self {
        if positive {
            Treatment::Chemotherapy
        } else {
            Treatment::HormoneTherapy
        }
    }

    pub fn flipped(self) -> Self {
        Self::from_positive(!self.is_positive())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Treatment::Chemotherapy => "Chemotherapy",
            Treatment::HormoneTherapy => "HormoneTherapy",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "Chemotherapy" => Some(Treatment::Chemotherapy),
            "HormoneTherapy" => Some(Treatment::HormoneTherapy),
            _ => None,
        }
    }
}

/// One patient's clinical fields as read from the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub patient_id: String,
    pub values: BTreeMap<String, Option<String>>,
    pub treatment: Option<String>,
    /// Set by [`label_records`].
    #[serde(default)]
    pub label: Option<Treatment>,
}

impl RawRecord {
    pub fn value(&self, feature: &str) -> Option<&str> {
        self.values.get(feature).and_then(|v| v.as_deref())
    }
}

/// Canonical form used for recode lookups: trimmed, lowercase, internal
/// whitespace collapsed, integral numbers written without a fraction.
pub fn normalize_raw(raw: &str) -> String {
    let collapsed = raw.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    if let Ok(v) = collapsed.parse::<f64>() {
        if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 {
            return format!("{}", v as i64);
        }
    }
    collapsed
}

const MISSING_TOKENS: [&str; 12] = [
    "",
    "na",
    "n/a",
    "nan",
    "null",
    "none",
    "[not available]",
    "[not evaluated]",
    "[not applicable]",
    "[unknown]",
    "[discrepancy]",
    "[completed]",
];

fn is_missing_token(cell: &str) -> bool {
    let n = cell.trim().to_lowercase();
    MISSING_TOKENS.contains(&n.as_str())
}

fn header_key(h: &str) -> String {
    h.trim()
        .to_lowercase()
        .chars()
        .map(|c| if c == '_' || c == ' ' { '-' } else { c })
        .collect()
}

const ID_COLUMNS: [&str; 4] = ["patient-id", "bcr-patient-barcode", "patient", "id"];
const TREATMENT_COLUMNS: [&str; 4] = ["treatment", "first-treatment", "treatment-type", "therapy-type"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParseWarnings {
    pub unknown_columns: Vec<String>,
    pub unparseable_cells: usize,
}

impl ParseWarnings {
    pub fn count(&self) -> usize {
        self.unknown_columns.len() + self.unparseable_cells
    }
}

#[derive(Debug, Clone)]
pub struct ParsedTable {
    pub records: Vec<RawRecord>,
    pub warnings: ParseWarnings,
}

fn sniff_delimiter(bytes: &[u8]) -> u8 {
    let first_line = bytes.split(|&b| b == b'\n').next().unwrap_or(&[]);
    let tabs = first_line.iter().filter(|&&b| b == b'\t').count();
    let commas = first_line.iter().filter(|&&b| b == b',').count();
    if tabs > commas {
        b'\t'
    } else {
        b','
    }
}

fn parse_number(cell: &str) -> Option<f64> {
    let t = cell.trim().trim_end_matches('%').trim();
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a delimited clinical table with a header row.
///
/// The delimiter (tab or comma) is sniffed from the header. Header names are
/// matched to schema features case-insensitively with `_`, `-` and space
/// treated alike. Numeric cells that do not parse become absent and are
/// counted in the warnings; unknown columns are ignored.
pub fn parse_clinical_table<R: Read>(mut source: R, schema: &Schema) -> Result<ParsedTable, DatasetError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(DatasetError::MissingHeader);
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(&bytes))
        .flexible(false)
        .trim(csv::Trim::None)
        .from_reader(bytes.as_slice());
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(DatasetError::MissingHeader);
    }
    let keys: Vec<String> = headers.iter().map(header_key).collect();
    let find = |candidates: &[&str]| keys.iter().position(|k| candidates.contains(&k.as_str()));
    let id_col = find(&ID_COLUMNS).ok_or_else(|| DatasetError::MissingColumn("patient_id".into()))?;
    let treatment_col =
        find(&TREATMENT_COLUMNS).ok_or_else(|| DatasetError::MissingColumn("treatment".into()))?;

    let mut feature_cols = Vec::with_capacity(schema.features.len());
    for f in &schema.features {
        let key = header_key(&f.name);
        let col = keys
            .iter()
            .position(|k| *k == key)
            .ok_or_else(|| DatasetError::MissingColumn(f.name.clone()))?;
        feature_cols.push(col);
    }
    let known: BTreeSet<usize> = feature_cols
        .iter()
        .copied()
        .chain([id_col, treatment_col])
        .collect();
    let mut warnings = ParseWarnings {
        unknown_columns: headers
            .iter()
            .enumerate()
            .filter(|(i, _)| !known.contains(i))
            .map(|(_, h)| h.to_string())
            .collect(),
        unparseable_cells: 0,
    };
    if !warnings.unknown_columns.is_empty() {
        log::warn!("ignoring {} unknown column(s)", warnings.unknown_columns.len());
    }

    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| DatasetError::Malformed {
            row: i + 1,
            message: e.to_string(),
        })?;
        if row.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        let patient_id = row.get(id_col).unwrap_or("").trim().to_string();
        if patient_id.is_empty() {
            return Err(DatasetError::Malformed {
                row: i + 1,
                message: "empty patient id".into(),
            });
        }
        if !seen.insert(patient_id.clone()) {
            return Err(DatasetError::DuplicatePatient(patient_id));
        }
        let mut values = BTreeMap::new();
        for (f, &col) in schema.features.iter().zip(&feature_cols) {
            let cell = row.get(col).unwrap_or("");
            let value = if is_missing_token(cell) {
                None
            } else if f.is_numeric() {
                match parse_number(cell) {
                    Some(v) => Some(format_number(v)),
                    None => {
                        warnings.unparseable_cells += 1;
                        None
                    }
                }
            } else {
                Some(cell.trim().to_string())
            };
            values.insert(f.name.clone(), value);
        }
        let treatment = row
            .get(treatment_col)
            .filter(|c| !is_missing_token(c))
            .map(|c| c.trim().to_string());
        records.push(RawRecord {
            patient_id,
            values,
            treatment,
            label: None,
        });
    }
    if records.is_empty() {
        return Err(DatasetError::NoRows);
    }
    Ok(ParsedTable { records, warnings })
}

pub(crate) fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Maps the first-treatment string to a class label.
///
/// Case-insensitive substring match on "chemo" and "hormon"; when both
/// occur, the earlier mention wins.
pub fn derive_treatment_label(record: &RawRecord) -> Option<Treatment> {
    let t = record.treatment.as_deref()?.to_lowercase();
    let chemo = t.find("chemo");
    let hormone = t.find("hormon");
    match (chemo, hormone) {
        (Some(c), Some(h)) => Some(if c <= h {
            Treatment::Chemotherapy
        } else {
            Treatment::HormoneTherapy
        }),
        (Some(_), None) => Some(Treatment::Chemotherapy),
        (None, Some(_)) => Some(Treatment::HormoneTherapy),
        (None, None) => None,
    }
}

/// Sets `label` on every record.
pub fn label_records(records: &[RawRecord]) -> Vec<RawRecord> {
    records
        .iter()
        .map(|r| RawRecord {
            label: derive_treatment_label(r),
            ..r.clone()
        })
        .collect()
}

/// Fills absent values of features that declare an imputation rule.
/// Returns the records and the number of cells filled per feature.
pub fn impute_missing(records: &[RawRecord], schema: &Schema) -> (Vec<RawRecord>, BTreeMap<String, usize>) {
    let mut counts: BTreeMap<String, usize> = schema
        .features
        .iter()
        .filter(|f| f.impute.is_some())
        .map(|f| (f.name.clone(), 0))
        .collect();
    let out = records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            for f in &schema.features {
                let Some(fill) = &f.impute else { continue };
                let slot = r.values.entry(f.name.clone()).or_insert(None);
                if slot.is_none() {
                    *slot = Some(fill.clone());
                    *counts.get_mut(&f.name).expect("counted") += 1;
                }
            }
            r
        })
        .collect();
    (out, counts)
}

/// Replaces every categorical value by its category label.
pub fn recode_features(records: &[RawRecord], schema: &Schema) -> Result<Vec<RawRecord>, DatasetError> {
    let mut out = Vec::with_capacity(records.len());
    for (row, r) in records.iter().enumerate() {
        let mut r = r.clone();
        for f in schema.features.iter().filter(|f| !f.is_numeric()) {
            if let Some(Some(raw)) = r.values.get_mut(&f.name) {
                let label = f.recode(raw).ok_or_else(|| DatasetError::Unmapped {
                    feature: f.name.clone(),
                    value: raw.clone(),
                    row: row + 1,
                    patient: r.patient_id.clone(),
                })?;
                *raw = label.to_string();
            }
        }
        out.push(r);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompleteCases {
    pub records: Vec<RawRecord>,
    pub dropped_unlabeled: usize,
    pub dropped_incomplete: usize,
    /// Among labeled records, how many lack each feature.
    pub missing_by_feature: BTreeMap<String, usize>,
}

/// Keeps records with a label and a value for every schema feature.
pub fn filter_complete_cases(records: &[RawRecord], schema: &Schema) -> Result<CompleteCases, DatasetError> {
    let mut missing_by_feature: BTreeMap<String, usize> =
        schema.names().map(|n| (n.to_string(), 0)).collect();
    let mut dropped_unlabeled = 0;
    let mut dropped_incomplete = 0;
    let mut kept = Vec::new();
    for r in records {
        if r.label.is_none() {
            dropped_unlabeled += 1;
            continue;
        }
        let mut complete = true;
        for f in &schema.features {
            if r.value(&f.name).is_none() {
                *missing_by_feature.get_mut(&f.name).expect("schema name") += 1;
                complete = false;
            }
        }
        if complete {
            kept.push(r.clone());
        } else {
            dropped_incomplete += 1;
        }
    }
    if kept.is_empty() {
        return Err(DatasetError::NoCompleteCases);
    }
    Ok(CompleteCases {
        records: kept,
        dropped_unlabeled,
        dropped_incomplete,
        missing_by_feature,
    })
}

/// Row counts by pipeline stage plus everything needed to audit ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub parsed: usize,
    pub labeled: usize,
    pub unlabeled: usize,
    pub imputed_cells: BTreeMap<String, usize>,
    pub complete_cases: usize,
    pub dropped_incomplete: usize,
    pub missing_by_feature: BTreeMap<String, usize>,
    pub chemotherapy: usize,
    pub hormone_therapy: usize,
    pub parse_warnings: ParseWarnings,
    pub encoding: EncodingPolicy,
    pub columns: Vec<String>,
    pub encode_warnings: Vec<String>,
    pub schema: Schema,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub records: Vec<RawRecord>,
    pub dataset: Dataset,
    pub report: IngestReport,
}

/// Runs parse → label → impute → recode → complete cases → encode.
///
/// Unlabeled rows are removed before recoding so that values of patients who
/// received neither treatment never need a recode entry.
pub fn ingest<R: Read>(source: R, schema: &Schema, policy: EncodingPolicy) -> Result<Ingested, DatasetError> {
    schema.validate()?;
    let parsed = parse_clinical_table(source, schema)?;
    let n_parsed = parsed.records.len();
    let labeled: Vec<RawRecord> = label_records(&parsed.records)
        .into_iter()
        .filter(|r| r.label.is_some())
        .collect();
    let n_labeled = labeled.len();
    let (imputed, imputed_cells) = impute_missing(&labeled, schema);
    let recoded = recode_features(&imputed, schema)?;
    let complete = filter_complete_cases(&recoded, schema)?;
    let encoded = encode(&complete.records, schema, policy, true)?;
    let chemo = complete
        .records
        .iter()
        .filter(|r| r.label == Some(Treatment::Chemotherapy))
        .count();
    let report = IngestReport {
        parsed: n_parsed,
        labeled: n_labeled,
        unlabeled: n_parsed - n_labeled,
        imputed_cells,
        complete_cases: complete.records.len(),
        dropped_incomplete: complete.dropped_incomplete,
        missing_by_feature: complete.missing_by_feature,
        chemotherapy: chemo,
        hormone_therapy: complete.records.len() - chemo,
        parse_warnings: parsed.warnings,
        encoding: policy,
        columns: encoded.dataset.column_names(),
        encode_warnings: encoded.warnings,
        schema: schema.clone(),
    };
    Ok(Ingested {
        records: complete.records,
        dataset: encoded.dataset,
        report,
    })
}
