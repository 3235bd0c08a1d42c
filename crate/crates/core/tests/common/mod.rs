#![allow(dead_code)]

use prevalence::{MixturePopulation, ProbabilityModel};

pub const ASSAY_Q: f64 = 30.0 / 130.0;

/// P(r) = 2r, N(r) = 2(1 - r) on [0, 1].
pub fn toy(q: f64) -> MixturePopulation {
    MixturePopulation::new(
        q,
        ProbabilityModel::triangular_up(0.0, 1.0).unwrap(),
        ProbabilityModel::triangular_down(0.0, 1.0).unwrap(),
    )
    .unwrap()
}

/// Beta positives over truncated-Burr negatives on [0, 1].
pub fn assay(q: f64) -> MixturePopulation {
    MixturePopulation::new(
        q,
        ProbabilityModel::beta(4.0, 1.6, 0.0, 1.0).unwrap(),
        ProbabilityModel::burr_truncated(3.0, 1.0, 0.2, 0.0, 1.0).unwrap(),
    )
    .unwrap()
}

pub const CELL_P: [f64; 12] = [0.5, 0.5, 1.0, 1.0, 2.0, 1.5, 3.0, 4.0, 6.0, 5.0, 8.0, 9.0];
pub const CELL_N: [f64; 12] = [9.0, 7.0, 8.0, 5.0, 5.0, 6.0, 3.0, 2.0, 3.0, 1.0, 1.0, 1.5];

/// Twelve equal cells on [0, 12] with the weights above.
pub fn cells(q: f64) -> MixturePopulation {
    MixturePopulation::new(
        q,
        ProbabilityModel::histogram(&CELL_P, 0.0, 12.0).unwrap(),
        ProbabilityModel::histogram(&CELL_N, 0.0, 12.0).unwrap(),
    )
    .unwrap()
}

pub fn cell_probs(w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}
