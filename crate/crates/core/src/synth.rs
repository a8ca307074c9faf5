//! Synthetic clinical cohort with the published per-feature frequencies
//! (723 complete cases, 467 chemotherapy / 256 hormone therapy), emitted as
//! a raw table that exercises the ingestion rules.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureSchema, Schema, CLINICAL_FEATURES};

pub const COMPLETE_ROWS: usize = 723;
pub const CHEMO_ROWS: usize = 467;

/// Pooled category counts over the complete cases, in schema category order.
const CATEGORY_COUNTS: [(&str, &[usize]); 13] = [
    ("ER-Status", &[155, 568]),
    ("PR-Status", &[223, 500]),
    ("Surgery-Type", &[194, 345, 184]),
    ("Histology-Type", &[509, 151, 63]),
    ("Menopause-Status", &[46, 26, 473, 178]),
    ("Pathologic-Stage", &[116, 422, 166, 9, 10]),
    ("Pathologic-M", &[597, 10, 116]),
    ("Pathologic-T", &[187, 426, 94, 16]),
    ("Pathologic-N", &[333, 247, 77, 66]),
    ("PR-Level", &[177, 112, 64, 370]),
    (
        "Anatomic-Subdivision",
        &[112, 14, 30, 65, 145, 116, 16, 34, 57, 134],
    ),
    ("Tumor-Necrosis", &[412, 311, 0, 0]),
    ("HER2-Status", &[152, 9, 414, 53, 95]),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    pub seed: u64,
    /// Labels independent of every feature.
    pub null: bool,
    /// Rows without a usable label.
    pub unlabeled_rows: usize,
    /// Labeled rows missing a feature that has no imputation rule.
    pub incomplete_rows: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            seed: 2024,
            null: false,
            unlabeled_rows: 12,
            incomplete_rows: 20,
        }
    }
}

/// Raw strings that recode to each category label.
fn raw_variants(f: &FeatureSchema) -> BTreeMap<&str, Vec<&str>> {
    let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (raw, label) in &f.recode_map {
        out.entry(label.as_str()).or_default().push(raw.as_str());
    }
    out
}

fn shuffled_levels(counts: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut v: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(i, &c)| std::iter::repeat_n(i, c))
        .collect();
    v.shuffle(rng);
    v
}

fn logistic_noise(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random_range(1e-12..1.0 - 1e-12);
    (u / (1.0 - u)).ln()
}

fn csv_cell(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

struct Row {
    id: String,
    treatment: String,
    cells: BTreeMap<&'static str, String>,
}

struct Cohort {
    levels: BTreeMap<&'static str, Vec<usize>>,
    age: Vec<f64>,
    nodes: Vec<f64>,
    nuclei: Vec<f64>,
}

fn draw_cohort(n: usize, rng: &mut ChaCha8Rng) -> Cohort {
    let mut levels = BTreeMap::new();
    for (name, counts) in CATEGORY_COUNTS {
        let total: usize = counts.iter().sum();
        let scaled: Vec<usize> = if total == n {
            counts.to_vec()
        } else {
            // proportional counts for other cohort sizes; remainder to the largest level
            let mut s: Vec<usize> = counts.iter().map(|&c| c * n / total).collect();
            let big = (0..s.len()).max_by_key(|&i| counts[i]).unwrap_or(0);
            s[big] += n - s.iter().sum::<usize>();
            s
        };
        levels.insert(name, shuffled_levels(&scaled, rng));
    }
    let age_d = Normal::<f64>::new(57.0, 12.5).expect("valid normal");
    let nodes_d = Normal::<f64>::new(1.8, 1.2).expect("valid normal");
    let nuclei_d = Normal::<f64>::new(78.0, 14.0).expect("valid normal");
    let age = (0..n).map(|_| age_d.sample(rng).round().clamp(26.0, 90.0)).collect();
    let nodes = (0..n).map(|_| nodes_d.sample(rng).exp().floor().clamp(0.0, 60.0)).collect();
    let nuclei = (0..n)
        .map(|_| ((nuclei_d.sample(rng) / 5.0).round() * 5.0).clamp(5.0, 100.0))
        .collect();
    Cohort {
        levels,
        age,
        nodes,
        nuclei,
    }
}

/// Chemotherapy propensity used to rank patients before labeling.
fn chemo_score(c: &Cohort, i: usize) -> f64 {
    let lv = |f: &str| c.levels[f][i];
    let mut s = -0.08 * (c.age[i] - 57.0);
    if lv("ER-Status") == 0 {
        s += 2.5;
    }
    match lv("HER2-Status") {
        4 => s += 1.6,
        0 => s -= 0.8,
        _ => {}
    }
    if lv("PR-Status") == 0 {
        s += 0.3;
    }
    if matches!(lv("Pathologic-Stage"), 2 | 3) {
        s += 0.4;
    }
    s
}

/// Renders the synthetic cohort as a comma-separated clinical table.
///
/// Complete rows appear first with ids `SYN-0001..`; unlabeled and
/// incomplete rows follow and are removed by ingestion.
pub fn synthetic_table(opts: &SynthOptions) -> String {
    let schema = Schema::clinical();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let cohort = draw_cohort(COMPLETE_ROWS, &mut rng);

    let mut order: Vec<(f64, usize)> = (0..COMPLETE_ROWS)
        .map(|i| {
            let noise = logistic_noise(&mut rng);
            let s = if opts.null { noise } else { chemo_score(&cohort, i) + noise };
            (s, i)
        })
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut chemo = vec![false; COMPLETE_ROWS];
    for &(_, i) in order.iter().take(CHEMO_ROWS) {
        chemo[i] = true;
    }

    let variants: BTreeMap<&str, BTreeMap<&str, Vec<&str>>> = schema
        .features
        .iter()
        .filter(|f| !f.is_numeric())
        .map(|f| (f.name.as_str(), raw_variants(f)))
        .collect();

    let mut rows = Vec::new();
    for i in 0..COMPLETE_ROWS {
        let treatment = match (chemo[i], rng.random_range(0..3)) {
            (true, 0) => "chemotherapy",
            (true, _) => "Chemotherapy",
            (false, 0) => "Hormonal Therapy",
            (false, _) => "Hormone Therapy",
        };
        let mut cells = BTreeMap::new();
        for &name in CLINICAL_FEATURES.iter() {
            let f = schema.feature(name).expect("clinical feature");
            let cell = match name {
                "Age" => format!("{}", cohort.age[i]),
                "Tumor-Nuclei-Percent" => format!("{}", cohort.nuclei[i]),
                "Lymph-Nodes-Examined" => {
                    if cohort.nodes[i] == 0.0 && rng.random_bool(0.7) {
                        String::new()
                    } else {
                        format!("{}", cohort.nodes[i])
                    }
                }
                "Tumor-Necrosis" => match cohort.levels[name][i] {
                    0 => "0".to_string(),
                    1 => format!("{}", rng.random_range(1..50)),
                    2 => format!("{}", rng.random_range(50..100)),
                    _ => "100".to_string(),
                },
                _ => {
                    let label = &f.categories[cohort.levels[name][i]];
                    let imputed_label = f.impute.as_deref().and_then(|raw| f.recode(raw));
                    if imputed_label == Some(label.as_str()) && rng.random_bool(0.6) {
                        "[Not Available]".to_string()
                    } else {
                        let raws = &variants[name][label.as_str()];
                        raws[rng.random_range(0..raws.len())].to_string()
                    }
                }
            };
            cells.insert(name, cell);
        }
        rows.push(Row {
            id: format!("SYN-{:04}", i + 1),
            treatment: treatment.to_string(),
            cells,
        });
    }

    let template = rows.first().map(|r| r.cells.clone()).unwrap_or_default();
    for j in 0..opts.unlabeled_rows {
        let treatment = if j % 2 == 0 { "Radiation Therapy" } else { "[Not Available]" };
        let mut cells = template.clone();
        // values of unlabeled patients never need a recode entry
        cells.insert("Pathologic-T", "t9".to_string());
        rows.push(Row {
            id: format!("SYN-U{:03}", j + 1),
            treatment: treatment.to_string(),
            cells,
        });
    }
    const NO_RULE: [&str; 4] = ["Age", "ER-Status", "Histology-Type", "Tumor-Nuclei-Percent"];
    for j in 0..opts.incomplete_rows {
        let mut cells = template.clone();
        cells.insert(NO_RULE[j % NO_RULE.len()], "[Not Available]".to_string());
        rows.push(Row {
            id: format!("SYN-I{:03}", j + 1),
            treatment: if j % 2 == 0 { "Chemotherapy" } else { "Hormone Therapy" }.to_string(),
            cells,
        });
    }

    let mut out = String::new();
    let mut header = vec!["patient_id".to_string(), "treatment".to_string()];
    header.extend(CLINICAL_FEATURES.iter().map(|s| s.to_string()));
    out.push_str(&header.join(","));
    out.push('\n');
    for r in &rows {
        let mut line = vec![csv_cell(&r.id), csv_cell(&r.treatment)];
        line.extend(CLINICAL_FEATURES.iter().map(|n| csv_cell(&r.cells[n])));
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
