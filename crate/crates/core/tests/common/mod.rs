#![allow(dead_code)]

use treatclf::dataset::{ingest, EncodingPolicy, Ingested, Schema};
use treatclf::synth::{synthetic_table, SynthOptions};

/// Published summary rows: model, metric title, mean, median, sd, lower, upper.
pub const TABLE3: [(&str, &str, f64, f64, f64, f64, f64); 42] = [
    ("AdaBoost", "Accuracy", 0.7552, 0.7552, 0.0111, 0.7545, 0.7559),
    ("AdaBoost", "Auroc", 0.8016, 0.8021, 0.0094, 0.8011, 0.8022),
    ("AdaBoost", "Precision", 0.7967, 0.7963, 0.0093, 0.7961, 0.7973),
    ("AdaBoost", "Sensitivity", 0.8339, 0.8330, 0.0130, 0.8331, 0.8347),
    ("AdaBoost", "Specificity", 0.6117, 0.6094, 0.0218, 0.6103, 0.6130),
    ("AdaBoost", "F1 Score", 0.8148, 0.8148, 0.0087, 0.8143, 0.8154),
    ("GBM", "Accuracy", 0.7718, 0.7718, 0.0094, 0.7712, 0.7724),
    ("GBM", "Auroc", 0.8252, 0.8254, 0.0081, 0.8247, 0.8257),
    ("GBM", "Precision", 0.7889, 0.7890, 0.0082, 0.7884, 0.7894),
    ("GBM", "Sensitivity", 0.8831, 0.8844, 0.0132, 0.8823, 0.8839),
    ("GBM", "Specificity", 0.5687, 0.5703, 0.0228, 0.5672, 0.5701),
    ("GBM", "F1 Score", 0.8333, 0.8333, 0.0072, 0.8328, 0.8337),
    ("LDA", "Accuracy", 0.7506, 0.7510, 0.0106, 0.7499, 0.7512),
    ("LDA", "Auroc", 0.8015, 0.8015, 0.0097, 0.8009, 0.8021),
    ("LDA", "Precision", 0.7940, 0.7939, 0.0093, 0.7935, 0.7946),
    ("LDA", "Sensitivity", 0.8290, 0.8287, 0.0147, 0.8281, 0.8299),
    ("LDA", "Specificity", 0.6075, 0.6094, 0.0233, 0.6060, 0.6089),
    ("LDA", "F1 Score", 0.8111, 0.8114, 0.0086, 0.8105, 0.8116),
    ("LR", "Accuracy", 0.7401, 0.7400, 0.0104, 0.7394, 0.7407),
    ("LR", "Auroc", 0.7971, 0.7977, 0.0114, 0.7964, 0.7978),
    ("LR", "Precision", 0.7428, 0.7424, 0.0086, 0.7422, 0.7433),
    ("LR", "Sensitivity", 0.9145, 0.9143, 0.0120, 0.9137, 0.9152),
    ("LR", "Specificity", 0.4219, 0.4219, 0.0272, 0.4202, 0.4236),
    ("LR", "F1 Score", 0.8197, 0.8196, 0.0070, 0.8192, 0.8201),
    ("RF", "Accuracy", 0.7231, 0.7234, 0.0083, 0.7226, 0.7236),
    ("RF", "Auroc", 0.8239, 0.8242, 0.0080, 0.8234, 0.8244),
    ("RF", "Precision", 0.7097, 0.7096, 0.0066, 0.7093, 0.7101),
    ("RF", "Sensitivity", 0.9668, 0.9679, 0.0064, 0.9664, 0.9672),
    ("RF", "Specificity", 0.2785, 0.2773, 0.0239, 0.2770, 0.2800),
    ("RF", "F1 Score", 0.8185, 0.8184, 0.0048, 0.8182, 0.8188),
    ("SVM-RBF", "Accuracy", 0.5714, 0.5629, 0.1141, 0.5643, 0.5784),
    ("SVM-RBF", "Auroc", 0.5842, 0.5706, 0.1349, 0.5759, 0.5926),
    ("SVM-RBF", "Precision", 0.6847, 0.6934, 0.0853, 0.6794, 0.6900),
    ("SVM-RBF", "Sensitivity", 0.5954, 0.5824, 0.1532, 0.5859, 0.6049),
    ("SVM-RBF", "Specificity", 0.5275, 0.5313, 0.0525, 0.5242, 0.5307),
    ("SVM-RBF", "F1 Score", 0.6335, 0.6311, 0.1247, 0.6257, 0.6412),
    ("NewtonBoost", "Accuracy", 0.7557, 0.7552, 0.0104, 0.7551, 0.7564),
    ("NewtonBoost", "Auroc", 0.8044, 0.8046, 0.0088, 0.8039, 0.8049),
    ("NewtonBoost", "Precision", 0.7997, 0.7994, 0.0088, 0.7991, 0.8002),
    ("NewtonBoost", "Sensitivity", 0.8298, 0.8308, 0.0126, 0.8290, 0.8305),
    ("NewtonBoost", "Specificity", 0.6207, 0.6211, 0.0204, 0.6194, 0.6220),
    ("NewtonBoost", "F1 Score", 0.8144, 0.8143, 0.0082, 0.8139, 0.8149),
];

/// Published Table 2 counts (chemotherapy, hormone therapy) per level, the
/// printed p-value (None when printed as `<0.001`).
pub const TABLE2: [(&str, &[[u64; 2]], Option<f64>); 13] = [
    ("ER-Status", &[[151, 4], [316, 252]], None),
    ("PR-Status", &[[188, 35], [279, 221]], None),
    ("Surgery-Type", &[[119, 75], [230, 115], [118, 66]], Some(0.458)),
    ("Histology-Type", &[[347, 162], [80, 71], [40, 23]], Some(0.003)),
    ("Menopause-Status", &[[35, 11], [20, 6], [271, 202], [141, 37]], None),
    ("Pathologic-Stage", &[[55, 61], [269, 153], [131, 35], [5, 4], [7, 3]], None),
    ("Pathologic-M", &[[393, 204], [6, 4], [68, 48]], Some(0.317)),
    ("Pathologic-T", &[[105, 82], [287, 139], [67, 27], [8, 8]], Some(0.014)),
    ("Pathologic-N", &[[186, 147], [168, 79], [62, 15], [51, 15]], None),
    ("PR-Level", &[[96, 81], [74, 38], [37, 27], [260, 110]], Some(0.002)),
    (
        "Anatomic-Subdivision",
        &[
            [70, 42],
            [8, 6],
            [21, 9],
            [41, 24],
            [91, 54],
            [84, 32],
            [9, 7],
            [18, 16],
            [35, 22],
            [90, 44],
        ],
        Some(0.589),
    ),
    ("Tumor-Necrosis", &[[263, 149], [204, 107]], Some(0.624)),
    (
        "HER2-Status",
        &[[84, 68], [7, 2], [267, 147], [37, 16], [72, 23]],
        Some(0.015),
    ),
];

/// Features printed without a significant difference.
pub const NOT_SIGNIFICANT: [&str; 4] = [
    "Surgery-Type",
    "Pathologic-M",
    "Anatomic-Subdivision",
    "Tumor-Necrosis",
];

pub fn synthetic_cohort(opts: &SynthOptions) -> Ingested {
    let text = synthetic_table(opts);
    ingest(text.as_bytes(), &Schema::clinical(), EncodingPolicy::FullOneHot).expect("synthetic cohort ingests")
}

/// Brute-force AUROC: pairs with the positive scored higher count 1, ties ½.
pub fn pairwise_auroc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !positive[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if positive[j] {
                continue;
            }
            den += 1.0;
            if si > sj {
                num += 1.0;
            } else if si == sj {
                num += 0.5;
            }
        }
    }
    num / den
}

/// Chi-square upper tail from the series expansion of the regularized lower
/// incomplete gamma function.
pub fn chi_square_sf_series(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let a = df / 2.0;
    let z = x / 2.0;
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut k = 1.0;
    while term.abs() > 1e-17 * sum.abs() && k < 10_000.0 {
        term *= z / (a + k);
        sum += term;
        k += 1.0;
    }
    let ln_lower = a * z.ln() - z + sum.ln() - ln_gamma(a);
    1.0 - ln_lower.exp()
}

/// Lanczos approximation (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, &c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}
