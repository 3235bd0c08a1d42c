mod common;

use common::*;
use prevalence::estimate::{refine, RefineOptions};
use prevalence::mle::{fit, normalize, read_csv, write_csv, FitOptions, Label, SampleBatch, DEFAULT_EPSILON};
use prevalence::{FamilyTag, MixturePopulation, Sampler};

const RAW_UNITS: f64 = 40.0;

/// Training data in raw units, normalized, fitted, then used to estimate
/// the prevalence of an independent test batch.
#[test]
fn normalize_fit_refine() {
    let truth = assay(0.3);
    let raw = |values: Vec<f64>| values.into_iter().map(|r| r * RAW_UNITS).collect::<Vec<_>>();
    let pos = SampleBatch::new(raw(truth.positive().sample(3000, 1).unwrap()), Label::PositiveTraining).unwrap();
    let neg = SampleBatch::new(raw(truth.negative().sample(3000, 2).unwrap()), Label::NegativeTraining).unwrap();
    let test = SampleBatch::new(raw(truth.sample(5000, 3).unwrap()), Label::Test).unwrap();

    let (batches, norm) = normalize(&[pos, neg, test], DEFAULT_EPSILON).unwrap();
    assert_eq!(batches[0].values.iter().cloned().fold(f64::MIN, f64::max), 1.0);
    let in_support = |b: &SampleBatch| {
        let mut b = b.clone();
        b.values.retain(|r| *r <= 1.0);
        b
    };
    let opts = FitOptions::default();
    let p = fit(FamilyTag::Beta, &batches[0], &opts).unwrap();
    let n = fit(FamilyTag::BurrTruncated, &in_support(&batches[1]), &opts).unwrap();
    assert!(p.converged && n.converged);
    assert!(norm.scale > RAW_UNITS * 0.9);

    let (trace, report) = refine(&batches[2].values, &p.model, &n.model, 0.5, &RefineOptions::default()).unwrap();
    assert!(trace.converged, "{trace:?}");
    assert!((report.q_tilde_raw - 0.3).abs() < 0.05, "{report:?}");
    let _ = MixturePopulation::new(report.q_tilde_clamped, p.model, n.model).unwrap();
}

#[test]
fn csv_files_feed_the_fit() {
    let dir = std::env::temp_dir().join(format!("prevalence-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("neg.csv");
    let values = toy(0.0).negative().sample(500, 9).unwrap();
    write_csv(&path, &values).unwrap();
    let batch = read_csv(&path, Label::NegativeTraining).unwrap();
    assert_eq!(batch.values, values);
    let res = fit(FamilyTag::Beta, &batch, &FitOptions::default()).unwrap();
    // triangular-down is beta(1, 2)
    let params = res.model.params();
    assert!((params["a"] - 1.0).abs() < 0.15 && (params["b"] - 2.0).abs() < 0.3, "{params:?}");
    std::fs::remove_dir_all(&dir).unwrap();
}
