//! Training-data normalization and maximum-likelihood model fitting.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::dist::{FamilyTag, ProbabilityModel};
use crate::domain::Interval;
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, SimplexOptions};

/// Offset added to every raw value before scaling.
pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_STARTS: usize = 8;
pub const MIN_FIT_SIZE: usize = 10;
/// Observations sitting exactly on a support endpoint are moved inward by
/// this fraction of the support width before the density is evaluated.
pub const ENDPOINT_NUDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    NegativeTraining,
    PositiveTraining,
    Test,
    Unlabeled,
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "negative-training" | "negative" => Label::NegativeTraining,
            "positive-training" | "positive" => Label::PositiveTraining,
            "test" => Label::Test,
            "unlabeled" => Label::Unlabeled,
            other => return Err(Error::InvalidArgument(format!("unknown label '{other}'"))),
        })
    }
}

/// Maps raw `x` to `(x + epsilon) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalization {
    pub epsilon: f64,
    pub scale: f64,
}

impl Normalization {
    pub const IDENTITY: Normalization = Normalization { epsilon: 0.0, scale: 1.0 };

    pub fn apply(&self, x: f64) -> f64 {
        (x + self.epsilon) / self.scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub label: Label,
    pub normalization: Option<Normalization>,
}

impl SampleBatch {
    pub fn new(values: Vec<f64>, label: Label) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidData(format!("{label:?} batch is empty")));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite value {bad} in {label:?} batch")));
        }
        Ok(Self { values, label, normalization: None })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_normalization(&self, norm: Normalization) -> Self {
        Self {
            values: self.values.iter().map(|x| norm.apply(*x)).collect(),
            label: self.label,
            normalization: Some(norm),
        }
    }
}

/// Shifts every batch by `epsilon` and divides by the largest shifted value
/// among the positive-training batches, so that maximum becomes exactly 1.
///
/// Values in other batches may land above 1.
pub fn normalize(batches: &[SampleBatch], epsilon: f64) -> Result<(Vec<SampleBatch>, Normalization)> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be finite and nonnegative, got {epsilon}")));
    }
    for b in batches {
        if let Some(neg) = b.values.iter().find(|v| **v < 0.0) {
            return Err(Error::InvalidData(format!("negative raw value {neg} in {:?} batch", b.label)));
        }
    }
    let scale = batches
        .iter()
        .filter(|b| b.label == Label::PositiveTraining)
        .flat_map(|b| b.values.iter())
        .map(|x| x + epsilon)
        .fold(f64::NAN, f64::max);
    if scale.is_nan() {
        return Err(Error::InvalidData("no positive-training values to set the scale".into()));
    }
    if scale <= 0.0 {
        return Err(Error::InvalidData("positive-training values are all zero".into()));
    }
    let norm = Normalization { epsilon, scale };
    Ok((batches.iter().map(|b| b.with_normalization(norm)).collect(), norm))
}

/// Reads one measurement per row; a leading `value` header is optional.
pub fn read_csv(path: impl AsRef<Path>, label: Label) -> Result<SampleBatch> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(file);
    let mut values = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != 1 {
            return Err(Error::InvalidData(format!(
                "{}: row {} has {} columns, expected 1",
                path.display(),
                i + 1,
                rec.len()
            )));
        }
        let field = &rec[0];
        if i == 0 && field.eq_ignore_ascii_case("value") {
            continue;
        }
        let v: f64 = field
            .parse()
            .map_err(|_| Error::InvalidData(format!("{}: row {}: '{field}' is not a number", path.display(), i + 1)))?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::InvalidData(format!("{}: no measurements", path.display())));
    }
    SampleBatch::new(values, label)
}

pub fn write_csv(path: impl AsRef<Path>, values: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["value"])?;
    for v in values {
        w.write_record([v.to_string()])?;
    }
    w.flush().map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    Ok(())
}

fn nudge_endpoint(r: f64, support: Interval) -> f64 {
    let h = ENDPOINT_NUDGE * (support.hi - support.lo);
    if r == support.lo {
        r + h
    } else if r == support.hi {
        r - h
    } else {
        r
    }
}

/// `-sum log pdf(r_j)`. Observations exactly on a support endpoint are
/// evaluated [`ENDPOINT_NUDGE`] inside it, since the normalized positive
/// maximum sits on the upper endpoint where many densities vanish.
pub fn negative_log_likelihood(model: &ProbabilityModel, values: &[f64]) -> f64 {
    let support = crate::dist::Density::support(model);
    -values.iter().map(|r| model.ln_pdf(nudge_endpoint(*r, support))).sum::<f64>()
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub model: ProbabilityModel,
    pub negative_log_likelihood: f64,
    pub converged: bool,
    /// Simplex iterations of the winning start.
    pub iterations: usize,
    /// Negative log-likelihood at each multi-start initial point.
    pub start_nlls: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub starts: usize,
    pub support: Interval,
    /// Seed of the Latin-hypercube start design.
    pub seed: u64,
    /// Cell count for histogram fits.
    pub histogram_bins: usize,
    pub simplex: SimplexOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: DEFAULT_STARTS,
            support: Interval::new(0.0, 1.0),
            seed: 0,
            histogram_bins: 20,
            simplex: SimplexOptions::default(),
        }
    }
}

/// Start boxes for the free parameters, in natural units. Log-uniform.
fn parameter_box(family: FamilyTag, support: Interval) -> Vec<(f64, f64)> {
    let w = support.hi - support.lo;
    match family {
        FamilyTag::Beta => vec![(0.3, 30.0), (0.3, 30.0)],
        FamilyTag::BurrTruncated => vec![(0.3, 20.0), (0.1, 20.0), (0.005 * w, 5.0 * w)],
        _ => Vec::new(),
    }
}

fn latin_hypercube(bounds: &[(f64, f64)], n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![vec![0.0; bounds.len()]; n];
    for (j, (lo, hi)) in bounds.iter().enumerate() {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        let (llo, lhi) = (lo.ln(), hi.ln());
        for (i, s) in strata.into_iter().enumerate() {
            let u = (s as f64 + rng.random::<f64>()) / n as f64;
            points[i][j] = llo + u * (lhi - llo);
        }
    }
    points
}

/// Likelihood in log-parameter space with per-family precomputation.
enum Objective {
    Beta { n: f64, sum_ln_t: f64, sum_ln_1mt: f64, ln_w: f64 },
    Burr { ln_r: Vec<f64>, sum_ln_r: f64, support: Interval },
}

impl Objective {
    fn new(family: FamilyTag, values: &[f64], support: Interval) -> Self {
        let w = support.hi - support.lo;
        let nudged: Vec<f64> = values.iter().map(|r| nudge_endpoint(*r, support)).collect();
        match family {
            FamilyTag::Beta => {
                let ts = nudged.iter().map(|r| (r - support.lo) / w);
                let (s1, s2) = ts.fold((0.0, 0.0), |(a, b), t| (a + t.ln(), b + (1.0 - t).ln()));
                Objective::Beta { n: values.len() as f64, sum_ln_t: s1, sum_ln_1mt: s2, ln_w: w.ln() }
            }
            _ => {
                let ln_r: Vec<f64> = nudged.iter().map(|r| r.ln()).collect();
                let sum_ln_r = ln_r.iter().sum();
                Objective::Burr { ln_r, sum_ln_r, support }
            }
        }
    }

    fn eval(&self, log_params: &[f64]) -> f64 {
        match self {
            Objective::Beta { n, sum_ln_t, sum_ln_1mt, ln_w } => {
                let (a, b) = (log_params[0].exp(), log_params[1].exp());
                if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
                    return f64::INFINITY;
                }
                -((a - 1.0) * sum_ln_t + (b - 1.0) * sum_ln_1mt - n * (ln_beta(a, b) + ln_w))
            }
            Objective::Burr { ln_r, sum_ln_r, support } => {
                let (c, k, scale) = (log_params[0].exp(), log_params[1].exp(), log_params[2].exp());
                let Ok(model) = ProbabilityModel::burr_truncated(c, k, scale, support.lo, support.hi) else {
                    return f64::INFINITY;
                };
                let mass = model.truncated_mass();
                let ln_scale = log_params[2];
                let n = ln_r.len() as f64;
                let tail: f64 = ln_r.iter().map(|lr| (c * (lr - ln_scale)).exp().ln_1p()).sum();
                -(n * (c * k / scale).ln() + (c - 1.0) * (sum_ln_r - n * ln_scale) - (k + 1.0) * tail - n * mass.ln())
            }
        }
    }
}

fn build(family: FamilyTag, params: &[f64], support: Interval) -> Result<ProbabilityModel> {
    match family {
        FamilyTag::Beta => ProbabilityModel::beta(params[0], params[1], support.lo, support.hi),
        FamilyTag::BurrTruncated => {
            ProbabilityModel::burr_truncated(params[0], params[1], params[2], support.lo, support.hi)
        }
        FamilyTag::Uniform => ProbabilityModel::uniform(support.lo, support.hi),
        FamilyTag::TriangularUp => ProbabilityModel::triangular_up(support.lo, support.hi),
        FamilyTag::TriangularDown => ProbabilityModel::triangular_down(support.lo, support.hi),
        FamilyTag::Histogram => ProbabilityModel::histogram(params, support.lo, support.hi),
    }
}

/// Maximum-likelihood fit of `family` to `batch` on `opts.support`.
///
/// Burr and Beta parameters are found by Nelder-Mead on log-parameters from
/// `opts.starts` Latin-hypercube starting points; the best start wins, ties
/// going to the lower start index. Histograms use the closed-form cell
/// frequencies. Parameter-free families just report their likelihood.
pub fn fit(family: FamilyTag, batch: &SampleBatch, opts: &FitOptions) -> Result<FitResult> {
    let values = &batch.values;
    if values.len() < MIN_FIT_SIZE {
        return Err(Error::InvalidData(format!(
            "need at least {MIN_FIT_SIZE} measurements to fit, got {}",
            values.len()
        )));
    }
    let support = opts.support;
    if let Some(out) = values.iter().find(|r| !(**r >= support.lo && **r <= support.hi)) {
        return Err(Error::InvalidData(format!(
            "value {out} lies outside the fit support [{}, {}]",
            support.lo, support.hi
        )));
    }

    let finish = |model: ProbabilityModel, converged, iterations, start_nlls| FitResult {
        negative_log_likelihood: negative_log_likelihood(&model, values),
        model,
        converged,
        iterations,
        start_nlls,
    };

    match family {
        FamilyTag::Uniform | FamilyTag::TriangularUp | FamilyTag::TriangularDown => {
            Ok(finish(build(family, &[], support)?, true, 0, Vec::new()))
        }
        FamilyTag::Histogram => {
            let bins = opts.histogram_bins.max(1);
            let w = support.hi - support.lo;
            let mut counts = vec![0.0; bins];
            for r in values {
                let idx = (((r - support.lo) / w * bins as f64) as usize).min(bins - 1);
                counts[idx] += 1.0;
            }
            Ok(finish(build(family, &counts, support)?, true, 0, Vec::new()))
        }
        FamilyTag::Beta | FamilyTag::BurrTruncated => {
            if opts.starts == 0 {
                return Err(Error::InvalidArgument("at least one start is required".into()));
            }
            let objective = Objective::new(family, values, support);
            let starts = latin_hypercube(&parameter_box(family, support), opts.starts, opts.seed);
            let runs: Vec<_> = starts
                .par_iter()
                .map(|x0| {
                    let f0 = objective.eval(x0);
                    let run = nelder_mead(|x| objective.eval(x), x0, &opts.simplex);
                    (f0, run)
                })
                .collect();
            let start_nlls: Vec<f64> = runs.iter().map(|(f0, _)| *f0).collect();
            let best = runs
                .iter()
                .enumerate()
                .min_by(|(i, a), (j, b)| a.1.fx.total_cmp(&b.1.fx).then(i.cmp(j)))
                .map(|(_, r)| &r.1)
                .expect("at least one start");
            let params: Vec<f64> = best.x.iter().map(|v| v.exp()).collect();
            let model = build(family, &params, support)?;
            let converged = runs.iter().any(|(_, r)| r.converged);
            Ok(finish(model, converged, best.iterations, start_nlls))
        }
    }
}
