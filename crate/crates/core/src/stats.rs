//! Descriptive statistics and the bivariate hypothesis tests used to compare
//! the two treatment groups.
//!
//! Quartiles use linear interpolation between order statistics (the "type 7"
//! rule): the `q`-quantile of `x(1) <= .. <= x(n)` is
//! `x(⌊h⌋) + (h − ⌊h⌋)(x(⌊h⌋+1) − x(⌊h⌋))` with `h = (n − 1)q + 1`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

use crate::dataset::{RawRecord, Schema, Treatment};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("length mismatch: {0} values, {1} groups")]
    LengthMismatch(usize, usize),
    #[error("contingency table has a zero marginal")]
    ZeroMarginal,
    #[error("contingency table needs at least two rows and two columns")]
    DegenerateTable,
    #[error("ragged contingency table")]
    RaggedTable,
    #[error("at least two groups are required")]
    TooFewGroups,
    #[error("all observations are tied")]
    AllTied,
}

/// Type-7 quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for a single value.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Midranks (1-based; ties share their average rank) plus the tie term
/// `Σ (t³ − t)` over tie groups.
pub fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share rank ((i+1) + j) / 2
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    (ranks, tie_term)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Result<Self, StatsError> {
        if values.is_empty() {
            return Err(StatsError::EmptySample);
        }
        let s = sorted_copy(values);
        Ok(Self {
            n: s.len(),
            median: quantile_sorted(&s, 0.5),
            q1: quantile_sorted(&s, 0.25),
            q3: quantile_sorted(&s, 0.75),
        })
    }
}

/// Median and quartiles per treatment group, for groups that occur.
pub fn describe_numeric(values: &[f64], groups: &[Treatment]) -> Result<BTreeMap<Treatment, Quartiles>, StatsError> {
    if values.len() != groups.len() {
        return Err(StatsError::LengthMismatch(values.len(), groups.len()));
    }
    if values.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut by_group: BTreeMap<Treatment, Vec<f64>> = BTreeMap::new();
    for (&v, &g) in values.iter().zip(groups) {
        by_group.entry(g).or_default().push(v);
    }
    by_group
        .into_iter()
        .map(|(g, vs)| Quartiles::of(&vs).map(|q| (g, q)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

impl ContingencyTable {
    /// Unlabeled table, rows and columns numbered from 0.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Self {
        let r = counts.len();
        let c = counts.first().map_or(0, Vec::len);
        Self {
            counts,
            row_labels: (0..r).map(|i| i.to_string()).collect(),
            col_labels: (0..c).map(|j| j.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).expect("positive degrees of freedom").sf(x).clamp(0.0, 1.0)
}

/// Pearson's chi-square test of independence, without continuity correction.
pub fn chi_square_test(t: &ContingencyTable) -> Result<ChiSquare, StatsError> {
    let r = t.counts.len();
    let c = t.counts.first().map_or(0, Vec::len);
    if t.counts.iter().any(|row| row.len() != c) {
        return Err(StatsError::RaggedTable);
    }
    if r < 2 || c < 2 {
        return Err(StatsError::DegenerateTable);
    }
    let row_tot: Vec<f64> = t.counts.iter().map(|row| row.iter().sum::<u64>() as f64).collect();
    let col_tot: Vec<f64> = (0..c)
        .map(|j| t.counts.iter().map(|row| row[j]).sum::<u64>() as f64)
        .collect();
    if row_tot.iter().chain(&col_tot).any(|&m| m == 0.0) {
        return Err(StatsError::ZeroMarginal);
    }
    let n: f64 = row_tot.iter().sum();
    let mut statistic = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = row_tot[i] * col_tot[j] / n;
            let d = o as f64 - e;
            statistic += d * d / e;
        }
    }
    let df = ((r - 1) * (c - 1)) as f64;
    Ok(ChiSquare {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// Number of (a, b) pairs with a > b, ties counted one half.
    pub u: f64,
    pub z: f64,
    pub p_value: f64,
}

fn two_sided_normal_p(z: f64) -> f64 {
    let normal = Normal::standard();
    (2.0 * normal.sf(z.abs())).min(1.0)
}

/// Two-sided Mann–Whitney U test.
///
/// Normal approximation with tie-corrected variance and a 0.5 continuity
/// correction, for every sample size.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, tie_term) = midranks(&pooled);
    let n = na + nb;
    let rank_sum_a: f64 = ranks[..a.len()].iter().sum();
    let u = rank_sum_a - na * (na + 1.0) / 2.0;
    let mu = na * nb / 2.0;
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return Err(StatsError::AllTied);
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(MannWhitney {
        u,
        z,
        p_value: two_sided_normal_p(z),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Kruskal–Wallis H test with tie correction.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<KruskalWallis, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups);
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(StatsError::EmptySample);
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let (ranks, tie_term) = midranks(&pooled);
    let correction = 1.0 - tie_term / (n * n * n - n);
    if correction <= 0.0 {
        return Err(StatsError::AllTied);
    }
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let h = (12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction;
    let h = h.max(0.0);
    let df = (groups.len() - 1) as f64;
    Ok(KruskalWallis {
        h,
        df,
        p_value: chi_square_sf(h, df),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCounts {
    pub level: String,
    pub chemotherapy: u64,
    pub hormone_therapy: u64,
    pub total: u64,
    pub chemotherapy_pct: f64,
    pub hormone_therapy_pct: f64,
    pub total_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Descriptor {
    Numeric {
        chemotherapy: Quartiles,
        hormone_therapy: Quartiles,
        total: Quartiles,
    },
    Categorical {
        levels: Vec<LevelCounts>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum TestOutcome {
    Tested {
        test: String,
        statistic: f64,
        df: Option<f64>,
        p_value: f64,
        significant: bool,
    },
    NotTestable {
        test: String,
        reason: String,
    },
}

impl TestOutcome {
    pub fn p_value(&self) -> Option<f64> {
        match self {
            TestOutcome::Tested { p_value, .. } => Some(*p_value),
            TestOutcome::NotTestable { .. } => None,
        }
    }

    pub fn significant(&self) -> Option<bool> {
        match self {
            TestOutcome::Tested { significant, .. } => Some(*significant),
            TestOutcome::NotTestable { .. } => None,
        }
    }

    fn tested(test: &str, statistic: f64, df: Option<f64>, p_value: f64) -> Self {
        TestOutcome::Tested {
            test: test.to_string(),
            statistic,
            df,
            p_value,
            significant: p_value < SIGNIFICANCE_LEVEL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureComparison {
    pub feature: String,
    pub descriptor: Descriptor,
    pub outcome: TestOutcome,
}

/// Grouped descriptors and tests for every schema feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivariateReport {
    pub chemotherapy_n: usize,
    pub hormone_therapy_n: usize,
    /// Two-group comparisons of numeric features use Mann–Whitney U
    /// (Kruskal–Wallis is equivalent for two groups).
    pub numeric_test: String,
    pub features: Vec<FeatureComparison>,
}

fn pct(count: u64, of: usize) -> f64 {
    if of == 0 {
        0.0
    } else {
        100.0 * count as f64 / of as f64
    }
}

/// Compares the treatment groups feature by feature: Mann–Whitney U for
/// numeric features, chi-square for categorical ones. Degenerate features
/// are reported as not testable rather than failing the report.
pub fn bivariate_report(records: &[RawRecord], schema: &Schema) -> Result<BivariateReport, StatsError> {
    let labeled: Vec<(&RawRecord, Treatment)> =
        records.iter().filter_map(|r| r.label.map(|l| (r, l))).collect();
    if labeled.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let n_chemo = labeled.iter().filter(|(_, l)| l.is_positive()).count();
    let n_hormone = labeled.len() - n_chemo;
    let mut features = Vec::with_capacity(schema.features.len());
    for f in &schema.features {
        if f.is_numeric() {
            let mut chemo = Vec::new();
            let mut hormone = Vec::new();
            for (r, l) in &labeled {
                if let Some(v) = r.value(&f.name).and_then(|s| s.trim().parse::<f64>().ok()) {
                    if l.is_positive() {
                        chemo.push(v);
                    } else {
                        hormone.push(v);
                    }
                }
            }
            let all: Vec<f64> = chemo.iter().chain(&hormone).copied().collect();
            let descriptor = Descriptor::Numeric {
                chemotherapy: Quartiles::of(&chemo)?,
                hormone_therapy: Quartiles::of(&hormone)?,
                total: Quartiles::of(&all)?,
            };
            let outcome = match mann_whitney_u(&chemo, &hormone) {
                Ok(m) => TestOutcome::tested("mann_whitney_u", m.u, None, m.p_value),
                Err(e) => TestOutcome::NotTestable {
                    test: "mann_whitney_u".into(),
                    reason: e.to_string(),
                },
            };
            features.push(FeatureComparison {
                feature: f.name.clone(),
                descriptor,
                outcome,
            });
        } else {
            let mut levels = Vec::new();
            for c in &f.categories {
                let mut chemo = 0u64;
                let mut hormone = 0u64;
                for (r, l) in &labeled {
                    if r.value(&f.name) == Some(c.as_str()) {
                        if l.is_positive() {
                            chemo += 1;
                        } else {
                            hormone += 1;
                        }
                    }
                }
                if chemo + hormone == 0 {
                    continue;
                }
                levels.push(LevelCounts {
                    level: c.clone(),
                    chemotherapy: chemo,
                    hormone_therapy: hormone,
                    total: chemo + hormone,
                    chemotherapy_pct: pct(chemo, n_chemo),
                    hormone_therapy_pct: pct(hormone, n_hormone),
                    total_pct: pct(chemo + hormone, labeled.len()),
                });
            }
            let table = ContingencyTable {
                counts: levels.iter().map(|l| vec![l.chemotherapy, l.hormone_therapy]).collect(),
                row_labels: levels.iter().map(|l| l.level.clone()).collect(),
                col_labels: vec!["Chemotherapy".into(), "HormoneTherapy".into()],
            };
            let outcome = match chi_square_test(&table) {
                Ok(t) => TestOutcome::tested("chi_square", t.statistic, Some(t.df), t.p_value),
                Err(e) => TestOutcome::NotTestable {
                    test: "chi_square".into(),
                    reason: e.to_string(),
                },
            };
            features.push(FeatureComparison {
                feature: f.name.clone(),
                descriptor: Descriptor::Categorical { levels },
                outcome,
            });
        }
    }
    Ok(BivariateReport {
        chemotherapy_n: n_chemo,
        hormone_therapy_n: n_hormone,
        numeric_test: "mann_whitney_u".into(),
        features,
    })
}

fn fmt_quartiles(q: &Quartiles) -> String {
    format!("{} ({}, {})", fmt_num(q.median), fmt_num(q.q1), fmt_num(q.q3))
}

fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').to_string()
    }
}

pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".into()
    } else {
        format!("{p:.3}")
    }
}

struct ReportLine {
    feature: String,
    level: String,
    chemo: String,
    hormone: String,
    total: String,
    test: String,
    statistic: String,
    p: String,
    significant: String,
}

impl BivariateReport {
    fn lines(&self) -> Vec<ReportLine> {
        let mut out = Vec::new();
        for fc in &self.features {
            let (test, statistic, p, significant) = match &fc.outcome {
                TestOutcome::Tested {
                    test,
                    statistic,
                    p_value,
                    significant,
                    ..
                } => (test.clone(), format!("{statistic:.4}"), format_p(*p_value), significant.to_string()),
                TestOutcome::NotTestable { test, .. } => {
                    (test.clone(), String::new(), "not testable".into(), String::new())
                }
            };
            match &fc.descriptor {
                Descriptor::Numeric {
                    chemotherapy,
                    hormone_therapy,
                    total,
                } => out.push(ReportLine {
                    feature: fc.feature.clone(),
                    level: String::new(),
                    chemo: fmt_quartiles(chemotherapy),
                    hormone: fmt_quartiles(hormone_therapy),
                    total: fmt_quartiles(total),
                    test,
                    statistic,
                    p,
                    significant,
                }),
                Descriptor::Categorical { levels } => {
                    out.push(ReportLine {
                        feature: fc.feature.clone(),
                        level: String::new(),
                        chemo: String::new(),
                        hormone: String::new(),
                        total: String::new(),
                        test,
                        statistic,
                        p,
                        significant,
                    });
                    for l in levels {
                        out.push(ReportLine {
                            feature: fc.feature.clone(),
                            level: l.level.clone(),
                            chemo: format!("{} ({:.1}%)", l.chemotherapy, l.chemotherapy_pct),
                            hormone: format!("{} ({:.1}%)", l.hormone_therapy, l.hormone_therapy_pct),
                            total: format!("{} ({:.1}%)", l.total, l.total_pct),
                            test: String::new(),
                            statistic: String::new(),
                            p: String::new(),
                            significant: String::new(),
                        });
                    }
                }
            }
        }
        out
    }

    /// Aligned plain-text table in the layout of a clinical "Table 2".
    pub fn render_text(&self) -> String {
        let total = self.chemotherapy_n + self.hormone_therapy_n;
        let header = [
            "Feature".to_string(),
            format!("Chemotherapy (N={})", self.chemotherapy_n),
            format!("Hormone Therapy (N={})", self.hormone_therapy_n),
            format!("Total (N={total})"),
            "p-value".to_string(),
        ];
        let rows: Vec<[String; 5]> = self
            .lines()
            .into_iter()
            .map(|l| {
                let label = if l.level.is_empty() {
                    l.feature
                } else {
                    format!("  {}", l.level)
                };
                [label, l.chemo, l.hormone, l.total, l.p]
            })
            .collect();
        let mut widths = header.clone().map(|h| h.chars().count());
        for r in &rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut s = String::new();
        let line = |s: &mut String, cells: &[String; 5]| {
            for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
                if i == 0 {
                    let _ = write!(s, "{c:<w$}");
                } else {
                    let _ = write!(s, "  {c:>w$}");
                }
            }
            s.push('\n');
        };
        line(&mut s, &header);
        let rule: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
        s.push_str(&"-".repeat(rule));
        s.push('\n');
        for r in &rows {
            line(&mut s, r);
        }
        let _ = writeln!(
            s,
            "\nNumeric features: median (Q1, Q3), {} test. Categorical features: count (column %), chi-square test.",
            self.numeric_test
        );
        s
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record([
            "feature",
            "level",
            "chemotherapy",
            "hormone_therapy",
            "total",
            "test",
            "statistic",
            "p_value",
            "significant",
        ])?;
        for l in self.lines() {
            w.write_record([
                l.feature,
                l.level,
                l.chemo,
                l.hormone,
                l.total,
                l.test,
                l.statistic,
                l.p,
                l.significant,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quartiles() {
        let v: Vec<f64> = (1..=8).map(f64::from).collect();
        let q = Quartiles::of(&v).unwrap();
        assert_eq!((q.median, q.q1, q.q3), (4.5, 2.75, 6.25));
        let c = Quartiles::of(&[5.0; 4]).unwrap();
        assert_eq!((c.median, c.q1, c.q3), (5.0, 5.0, 5.0));
    }

    #[test]
    fn describe_by_group() {
        let g = [Treatment::Chemotherapy; 4];
        let d = describe_numeric(&[5.0, 5.0, 5.0, 5.0], &g).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[&Treatment::Chemotherapy].median, 5.0);
        assert_eq!(describe_numeric(&[], &[]), Err(StatsError::EmptySample));
        assert!(describe_numeric(&[1.0], &[]).is_err());
    }

    #[test]
    fn chi_square_examples() {
        let t = chi_square_test(&ContingencyTable::from_counts(vec![vec![10, 10], vec![10, 10]])).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.p_value, 1.0);
        let t = chi_square_test(&ContingencyTable::from_counts(vec![vec![10, 20], vec![20, 10]])).unwrap();
        assert!((t.statistic - 20.0 / 3.0).abs() < 1e-12);
        assert_eq!(t.df, 1.0);
        assert!((t.p_value - 0.0098).abs() < 1e-4);
        let er = chi_square_test(&ContingencyTable::from_counts(vec![vec![151, 4], vec![316, 252]])).unwrap();
        assert!(er.p_value < 0.001);
    }

    #[test]
    fn chi_square_errors() {
        let zero = ContingencyTable::from_counts(vec![vec![0, 0], vec![3, 4]]);
        assert_eq!(chi_square_test(&zero), Err(StatsError::ZeroMarginal));
        let one_row = ContingencyTable::from_counts(vec![vec![3, 4]]);
        assert_eq!(chi_square_test(&one_row), Err(StatsError::DegenerateTable));
    }

    #[test]
    fn mann_whitney_examples() {
        let m = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(m.u, 0.0);
        let a = [1.0, 2.0, 2.0, 3.0];
        let s = mann_whitney_u(&a, &a).unwrap();
        assert_eq!(s.u, 8.0);
        assert!(s.p_value > 0.99);
        assert_eq!(mann_whitney_u(&[], &[1.0]), Err(StatsError::EmptySample));
        assert_eq!(mann_whitney_u(&[2.0, 2.0], &[2.0]), Err(StatsError::AllTied));
    }

    #[test]
    fn kruskal_wallis_examples() {
        let g = vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]];
        let k = kruskal_wallis(&g).unwrap();
        assert!(k.h.abs() < 1e-12);
        assert!((k.p_value - 1.0).abs() < 1e-12);
        let k = kruskal_wallis(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert!((k.h - 32.0 / 7.0).abs() < 1e-12);
        assert_eq!(kruskal_wallis(&[vec![1.0]]), Err(StatsError::TooFewGroups));
    }

    #[test]
    fn midranks_with_ties() {
        let (r, t) = midranks(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(r, vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(t, 6.0);
    }
}
