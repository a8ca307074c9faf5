//! Published numbers reproduced from their inputs.

mod common;

use common::{NOT_SIGNIFICANT, TABLE2, TABLE3};
use treatclf::eval::Metric;
use treatclf::harness::{ci_bounds, round_to, select_best, BootstrapSummary, SummaryRow, SummaryStats};
use treatclf::report::{parse_table3_csv, render_table3_text, write_table3_csv};
use treatclf::stats::{chi_square_test, format_p, ContingencyTable};

fn published_summary() -> BootstrapSummary {
    let rows = TABLE3
        .iter()
        .map(|&(model, metric, mean, median, sd, lower, upper)| SummaryRow {
            model: model.to_string(),
            metric: Metric::parse(metric).unwrap(),
            stats: Some(SummaryStats {
                mean,
                median,
                sd,
                lower_bound: lower,
                upper_bound: upper,
                percentile_low: lower,
                percentile_high: upper,
                n: 1000,
                n_missing: 0,
            }),
            n_missing: 0,
        })
        .collect();
    BootstrapSummary { n_iterations: 1000, rows }
}

#[test]
fn table2_chi_square_p_values_match_print() {
    for (feature, counts, printed) in TABLE2 {
        let table: Vec<Vec<u64>> = counts.iter().map(|r| r.to_vec()).collect();
        let t = chi_square_test(&ContingencyTable::from_counts(table)).unwrap();
        match printed {
            Some(p) => assert_eq!(format!("{:.3}", t.p_value), format!("{p:.3}"), "{feature}"),
            None => assert!(t.p_value < 0.001, "{feature}: {}", t.p_value),
        }
        assert_eq!(t.p_value >= 0.05, NOT_SIGNIFICANT.contains(&feature), "{feature}");
    }
}

#[test]
fn table2_format_of_small_p() {
    assert_eq!(format_p(1e-9), "<0.001");
}

#[test]
fn table3_bounds_follow_the_standard_error_formula() {
    for (model, metric, mean, _, sd, lo, hi) in TABLE3 {
        let (l, u) = ci_bounds(mean, sd, 1000);
        assert!((round_to(l, 4) - lo).abs() <= 1e-4 + 1e-12, "{model} {metric}");
        assert!((round_to(u, 4) - hi).abs() <= 1e-4 + 1e-12, "{model} {metric}");
    }
    let (l, u) = ci_bounds(0.7718, 0.0094, 1000);
    assert_eq!((round_to(l, 4), round_to(u, 4)), (0.7712, 0.7724));
}

#[test]
fn gbm_is_selected_from_the_published_table() {
    assert_eq!(select_best(&published_summary()).unwrap(), "GBM");
}

#[test]
fn published_gbm_row_renders_verbatim() {
    let text = render_table3_text(&published_summary());
    let collapsed: Vec<String> = text.lines().map(|l| l.split_whitespace().collect::<Vec<_>>().join(" ")).collect();
    assert!(collapsed.iter().any(|l| l.starts_with("GBM Accuracy 0.7718 0.7718 0.0094 0.7712 0.7724")));
}

#[test]
fn published_table_round_trips_through_csv() {
    let s = published_summary();
    let mut buf = Vec::new();
    write_table3_csv(&s, &mut buf).unwrap();
    assert_eq!(parse_table3_csv(buf.as_slice()).unwrap(), s);
}
