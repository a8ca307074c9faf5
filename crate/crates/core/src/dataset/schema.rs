use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{normalize_raw, DatasetError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

/// Declared type, category set and recoding of one clinical feature.
///
/// `recode_map` keys are normalized raw strings (see [`normalize_raw`]).
/// Every category label also maps to itself so that recoding is idempotent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default)]
    pub categories: Vec<String>,
    #[serde(default)]
    pub recode_map: BTreeMap<String, String>,
    /// Raw value substituted for an absent cell, if the feature has an
    /// imputation rule.
    #[serde(default)]
    pub impute: Option<String>,
}

impl FeatureSchema {
    pub fn numeric(name: &str) -> Self {
        Self {
            name: name.to_string(),
            kind: FeatureKind::Numeric,
            categories: Vec::new(),
            recode_map: BTreeMap::new(),
            impute: None,
        }
    }

    /// Categorical feature from `(label, raw strings)` groups.
    pub fn categorical(name: &str, groups: &[(&str, &[&str])]) -> Self {
        let mut categories = Vec::with_capacity(groups.len());
        let mut recode_map = BTreeMap::new();
        for (label, raws) in groups {
            categories.push(label.to_string());
            recode_map.insert(normalize_raw(label), label.to_string());
            for raw in raws.iter() {
                recode_map.insert(normalize_raw(raw), label.to_string());
            }
        }
        Self {
            name: name.to_string(),
            kind: FeatureKind::Categorical,
            categories,
            recode_map,
            impute: None,
        }
    }

    pub fn with_impute(mut self, raw: &str) -> Self {
        self.impute = Some(raw.to_string());
        self
    }

    pub fn is_numeric(&self) -> bool {
        self.kind == FeatureKind::Numeric
    }

    /// Looks up the category label for a raw string.
    pub fn recode(&self, raw: &str) -> Option<&str> {
        self.recode_map.get(&normalize_raw(raw)).map(String::as_str)
    }

    pub fn category_index(&self, label: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == label)
    }
}

/// Ordered collection of feature schemas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub features: Vec<FeatureSchema>,
}

/// The sixteen clinical predictors, in reporting order.
pub const CLINICAL_FEATURES: [&str; 16] = [
    "Age",
    "ER-Status",
    "PR-Status",
    "Surgery-Type",
    "Histology-Type",
    "Lymph-Nodes-Examined",
    "Menopause-Status",
    "Pathologic-Stage",
    "Pathologic-M",
    "Pathologic-T",
    "Pathologic-N",
    "PR-Level",
    "Anatomic-Subdivision",
    "Tumor-Necrosis",
    "Tumor-Nuclei-Percent",
    "HER2-Status",
];

impl Schema {
    pub fn new(features: Vec<FeatureSchema>) -> Result<Self, DatasetError> {
        let s = Self { features };
        s.validate()?;
        Ok(s)
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureSchema> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let mut names = BTreeSet::new();
        for f in &self.features {
            if !names.insert(f.name.as_str()) {
                return Err(DatasetError::Schema(format!("duplicate feature {}", f.name)));
            }
            let labels: BTreeSet<&str> = f.categories.iter().map(String::as_str).collect();
            if labels.len() != f.categories.len() {
                return Err(DatasetError::Schema(format!(
                    "{}: category labels are not unique",
                    f.name
                )));
            }
            match f.kind {
                FeatureKind::Categorical => {
                    if f.categories.is_empty() {
                        return Err(DatasetError::Schema(format!("{}: no categories", f.name)));
                    }
                    if let Some((raw, label)) =
                        f.recode_map.iter().find(|(_, l)| !labels.contains(l.as_str()))
                    {
                        return Err(DatasetError::Schema(format!(
                            "{}: raw value {raw:?} maps to undeclared category {label:?}",
                            f.name
                        )));
                    }
                    if let Some(imp) = &f.impute {
                        if f.recode(imp).is_none() {
                            return Err(DatasetError::Schema(format!(
                                "{}: imputed value {imp:?} has no recode entry",
                                f.name
                            )));
                        }
                    }
                }
                FeatureKind::Numeric => {
                    if !f.categories.is_empty() || !f.recode_map.is_empty() {
                        return Err(DatasetError::Schema(format!(
                            "{}: numeric feature declares categories",
                            f.name
                        )));
                    }
                    if let Some(imp) = &f.impute {
                        if imp.trim().parse::<f64>().is_err() {
                            return Err(DatasetError::Schema(format!(
                                "{}: imputed value {imp:?} is not numeric",
                                f.name
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// The breast-cancer clinical schema: sixteen predictors with the
    /// recoding and missing-value rules used for treatment classification.
    pub fn clinical() -> Self {
        let necrosis = necrosis_feature();
        let features = vec![
            FeatureSchema::numeric("Age"),
            FeatureSchema::categorical(
                "ER-Status",
                &[("Negative", &["negative"]), ("Positive", &["positive"])],
            ),
            FeatureSchema::categorical(
                "PR-Status",
                &[("Negative", &["negative"]), ("Positive", &["positive"])],
            ),
            FeatureSchema::categorical(
                "Surgery-Type",
                &[
                    ("Lumpectomy", &["lumpectomy"]),
                    (
                        "Mastectomy",
                        &["modified radical mastectomy", "simple mastectomy"],
                    ),
                    ("No Surgery / Other", &["no surgery", "other"]),
                ],
            )
            .with_impute("no surgery"),
            FeatureSchema::categorical(
                "Histology-Type",
                &[
                    (
                        "Infiltrating Ductal Carcinoma",
                        &["infiltrating ductal carcinoma"],
                    ),
                    (
                        "Infiltrating Lobular Carcinoma",
                        &["infiltrating lobular carcinoma"],
                    ),
                    (
                        "Other Type",
                        &[
                            "infiltrating carcinoma nos",
                            "medullary carcinoma",
                            "metaplastic carcinoma",
                            "mixed histology (please specify)",
                            "mucinous carcinoma",
                            "other, specify",
                        ],
                    ),
                ],
            ),
            FeatureSchema::numeric("Lymph-Nodes-Examined").with_impute("0"),
            FeatureSchema::categorical(
                "Menopause-Status",
                &[
                    (
                        "No Information/Other",
                        &[
                            "unknown",
                            "status unknown",
                            "indeterminate",
                            "indeterminate (neither pre or postmenopausal)",
                        ],
                    ),
                    ("Peri", &["peri (6-12 months since last menstrual period)"]),
                    (
                        "Post",
                        &["post (prior bilateral ovariectomy or >12 mo since lmp with no prior hysterectomy)"],
                    ),
                    (
                        "Pre",
                        &["pre (<6 months since lmp and no prior bilateral ovariectomy and not on estrogen replacement)"],
                    ),
                ],
            )
            .with_impute("unknown"),
            FeatureSchema::categorical(
                "Pathologic-Stage",
                &[
                    ("Stage I", &["stage i", "stage ia", "stage ib"]),
                    ("Stage II", &["stage ii", "stage iia", "stage iib"]),
                    (
                        "Stage III",
                        &["stage iii", "stage iiia", "stage iiib", "stage iiic"],
                    ),
                    ("Stage IV", &["stage iv"]),
                    ("Stage X", &["stage x"]),
                ],
            )
            .with_impute("Stage X"),
            FeatureSchema::categorical(
                "Pathologic-M",
                &[("m0", &["cm0 (i+)", "m0"]), ("m1", &["m1"]), ("m2", &["mx"])],
            ),
            FeatureSchema::categorical(
                "Pathologic-T",
                &[
                    ("t1", &["t1", "t1b", "t1c"]),
                    ("t2", &["t2", "t2a"]),
                    ("t3", &["t3", "t3a"]),
                    ("t4", &["t4", "t4b", "t4d", "tx"]),
                ],
            ),
            FeatureSchema::categorical(
                "Pathologic-N",
                &[
                    ("n0", &["n0", "n0 (i-)", "n0 (i+)", "n0 (mol+)"]),
                    ("n1", &["n1", "n1a", "n1b", "n1c", "n1mi"]),
                    ("n2", &["n2", "n2a"]),
                    ("n3", &["n3", "n3a", "n3b", "n3c", "nx"]),
                ],
            ),
            FeatureSchema::categorical(
                "PR-Level",
                &[
                    (
                        "High Expression",
                        &["50-59%", "60-69%", "70-79%", "80-89%", "90-99%"],
                    ),
                    ("Low Expression", &["<10%"]),
                    (
                        "Moderate Expression",
                        &["10-19%", "20-29%", "30-39%", "40-49%"],
                    ),
                    ("No Information", &["no information"]),
                ],
            )
            .with_impute("no information"),
            FeatureSchema::categorical(
                "Anatomic-Subdivision",
                &[
                    ("Left", &[]),
                    ("Left Lower Inner Quadrant", &[]),
                    ("Left Lower Outer Quadrant", &[]),
                    ("Left Upper Inner Quadrant", &[]),
                    ("Left Upper Outer Quadrant", &[]),
                    ("Right", &[]),
                    ("Right Lower Inner Quadrant", &[]),
                    ("Right Lower Outer Quadrant", &[]),
                    ("Right Upper Inner Quadrant", &[]),
                    ("Right Upper Outer Quadrant", &[]),
                ],
            ),
            necrosis,
            FeatureSchema::numeric("Tumor-Nuclei-Percent"),
            FeatureSchema::categorical(
                "HER2-Status",
                &[
                    ("Equivocal", &[]),
                    ("Indeterminate", &[]),
                    ("Negative", &[]),
                    ("No Information", &["no information"]),
                    ("Positive", &[]),
                ],
            )
            .with_impute("no information"),
        ];
        Self { features }
    }
}

/// Necrosis percentages are binned into four categories; the map
/// enumerates every integer percentage.
fn necrosis_feature() -> FeatureSchema {
    let mut f = FeatureSchema::categorical(
        "Tumor-Necrosis",
        &[
            ("No necrosis", &[]),
            ("Partial necrosis", &[]),
            ("Significant necrosis", &[]),
            ("Complete necrosis", &[]),
        ],
    );
    for pct in 0..=100u32 {
        let label = match pct {
            0 => "No necrosis",
            1..=49 => "Partial necrosis",
            50..=99 => "Significant necrosis",
            _ => "Complete necrosis",
        };
        f.recode_map.insert(pct.to_string(), label.to_string());
    }
    f
}
