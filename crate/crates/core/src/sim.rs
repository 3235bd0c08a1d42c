//! Monte Carlo validation of the estimator on synthetic mixture data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bathtub::{Bathtub, Branch};
use crate::dist::{MixturePopulation, ProbabilityModel, Sampler};
use crate::domain::DomainSet;
use crate::error::{Error, Result};
use crate::estimate::{point_estimate, MIN_SEPARATION};
use crate::objective::{Objective, DEFAULT_GRID_SIZE, DEFAULT_TOL};

pub const MIN_SAMPLES: usize = 10;
pub const MIN_TRIALS: usize = 100;

/// How the estimation domain is chosen for a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainPolicy {
    /// Optimal domain built at the true prevalence.
    OptimalAtTrueQ,
    /// Optimal domain built at a guessed prevalence.
    OptimalAtGuess(f64),
    /// `{r : P(r) > N(r)}`, the classify-and-count decision region.
    ClassificationSet,
    Custom(DomainSet),
}

impl DomainPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            DomainPolicy::OptimalAtTrueQ => "optimal-at-true-q",
            DomainPolicy::OptimalAtGuess(_) => "optimal-at-guess",
            DomainPolicy::ClassificationSet => "classification-set",
            DomainPolicy::Custom(_) => "custom",
        }
    }

    pub fn domain(&self, pop: &MixturePopulation) -> Result<DomainSet> {
        match self {
            DomainPolicy::OptimalAtTrueQ => {
                Ok(Objective::new(pop.clone()).minimize(DEFAULT_GRID_SIZE, DEFAULT_TOL)?.solution.set)
            }
            DomainPolicy::OptimalAtGuess(g) => {
                if !(*g > 0.0 && *g < 1.0) {
                    return Err(Error::InvalidArgument(format!("guessed prevalence must lie in (0, 1), got {g}")));
                }
                Ok(Objective::new(pop.with_q(*g)?).minimize(DEFAULT_GRID_SIZE, DEFAULT_TOL)?.solution.set)
            }
            DomainPolicy::ClassificationSet => Ok(classification_set(pop.positive(), pop.negative())?),
            DomainPolicy::Custom(set) => Ok(set.clone()),
        }
    }
}

/// `{r : P(r) > N(r)}`.
pub fn classification_set(positive: &ProbabilityModel, negative: &ProbabilityModel) -> Result<DomainSet> {
    // at q = 1 the plus-branch inequality at level 0 reads P > N
    let pop = MixturePopulation::new(1.0, positive.clone(), negative.clone())?;
    Ok(Bathtub::new(pop).super_level_set(0.0, Branch::Plus))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioModels {
    pub positive: ProbabilityModel,
    pub negative: ProbabilityModel,
}

/// A complete simulation configuration, as read from a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub models: ScenarioModels,
    pub q_true: f64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "T")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub policy: DomainPolicy,
}

impl Scenario {
    pub fn population(&self) -> Result<MixturePopulation> {
        MixturePopulation::new(self.q_true, self.models.positive.clone(), self.models.negative.clone())
    }

    pub fn run(&self) -> Result<(SimReport, Vec<f64>)> {
        run_trials_detailed(&self.population()?, self.m, self.trials, self.seed, &self.policy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub q_true: f64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "T")]
    pub trials: usize,
    pub seed: u64,
    pub domain_policy: String,
    pub domain: DomainSet,
    pub q_measure: f64,
    pub p_measure: f64,
    pub n_measure: f64,
    pub mean_estimate: f64,
    /// Sample variance of the raw estimates across trials.
    pub empirical_variance: f64,
    /// `Q_D (1 - Q_D) / (M (P_D - N_D)^2)` at the true `Q_D`.
    pub predicted_variance: f64,
    pub bias_z_score: f64,
}

/// Recursive pairwise sum; the association order depends only on the length.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Runs `trials` independent experiments of `m` mixture draws each and
/// returns the summary together with every raw per-trial estimate.
///
/// Trial `i` draws from its own generator stream derived from `(seed, i)`,
/// and the moments are pairwise sums over trial order, so the output does
/// not depend on how trials are scheduled across threads.
pub fn run_trials_detailed(
    pop: &MixturePopulation,
    m: usize,
    trials: usize,
    seed: u64,
    policy: &DomainPolicy,
) -> Result<(SimReport, Vec<f64>)> {
    if m < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_SAMPLES} samples per trial, got {m}")));
    }
    if trials < MIN_TRIALS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    let domain = policy.domain(pop)?;
    let (p, n, q_d) = pop.measures(&domain)?;
    let sep = p - n;
    if sep.is_nan() || sep.abs() < MIN_SEPARATION {
        return Err(Error::DegenerateDomain(sep));
    }

    let estimates: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let hits = (0..m).filter(|_| domain.contains(pop.draw(&mut rng))).count();
            point_estimate(hits, m, p, n).map(|r| r.q_tilde_raw)
        })
        .collect::<Result<_>>()?;

    let t = trials as f64;
    let mean = pairwise_sum(&estimates) / t;
    let sq: Vec<f64> = estimates.iter().map(|e| (e - mean) * (e - mean)).collect();
    let var = pairwise_sum(&sq) / (t - 1.0);
    let report = SimReport {
        q_true: pop.q(),
        m,
        trials,
        seed,
        domain_policy: policy.name().to_string(),
        domain,
        q_measure: q_d,
        p_measure: p,
        n_measure: n,
        mean_estimate: mean,
        empirical_variance: var,
        predicted_variance: q_d * (1.0 - q_d) / (m as f64 * sep * sep),
        bias_z_score: (mean - pop.q()) / (var / t).sqrt(),
    };
    Ok((report, estimates))
}

pub fn run_trials(
    pop: &MixturePopulation,
    m: usize,
    trials: usize,
    seed: u64,
    policy: &DomainPolicy,
) -> Result<SimReport> {
    run_trials_detailed(pop, m, trials, seed, policy).map(|(r, _)| r)
}

/// One-sided z statistic for `var_a > var_b` from two independent sample
/// variances over `trials` each, using the normal-theory standard error
/// `var * sqrt(2 / (trials - 1))` of each.
pub fn variance_difference_z(var_a: f64, var_b: f64, trials: usize) -> f64 {
    let k = (2.0 / (trials as f64 - 1.0)).sqrt();
    (var_a - var_b) / ((var_a * k).powi(2) + (var_b * k).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Interval;
    use approx::assert_abs_diff_eq;

    fn toy(q: f64) -> MixturePopulation {
        MixturePopulation::new(
            q,
            ProbabilityModel::triangular_up(0.0, 1.0).unwrap(),
            ProbabilityModel::triangular_down(0.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let pop = toy(0.3);
        let a = run_trials(&pop, 200, 300, 7, &DomainPolicy::OptimalAtTrueQ).unwrap();
        let b = run_trials(&pop, 200, 300, 7, &DomainPolicy::OptimalAtTrueQ).unwrap();
        assert_eq!(a, b);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = single.install(|| run_trials(&pop, 200, 300, 7, &DomainPolicy::OptimalAtTrueQ).unwrap());
        let quad = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let d = quad.install(|| run_trials(&pop, 200, 300, 7, &DomainPolicy::OptimalAtTrueQ).unwrap());
        assert_eq!(a, c);
        assert_eq!(a, d);
        let e = run_trials(&pop, 200, 300, 8, &DomainPolicy::OptimalAtTrueQ).unwrap();
        assert_ne!(a.mean_estimate, e.mean_estimate);
    }

    #[test]
    fn bias_z_definition() {
        let r = run_trials(&toy(0.4), 100, 500, 3, &DomainPolicy::ClassificationSet).unwrap();
        let z = (r.mean_estimate - r.q_true) / (r.empirical_variance / r.trials as f64).sqrt();
        assert_abs_diff_eq!(r.bias_z_score, z, epsilon = 1e-12);
        assert_eq!(r.domain_policy, "classification-set");
    }

    #[test]
    fn classification_set_of_toy() {
        let set = classification_set(toy(0.3).positive(), toy(0.3).negative()).unwrap();
        assert_eq!(set.intervals().len(), 1);
        assert_abs_diff_eq!(set.intervals()[0].lo, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn preconditions() {
        let pop = toy(0.3);
        assert!(run_trials(&pop, 9, 100, 1, &DomainPolicy::OptimalAtTrueQ).is_err());
        assert!(run_trials(&pop, 10, 99, 1, &DomainPolicy::OptimalAtTrueQ).is_err());
        assert!(run_trials(&pop, 10, 100, 1, &DomainPolicy::OptimalAtGuess(1.5)).is_err());
        let full = DomainSet::full(Interval::new(0.0, 1.0)).unwrap();
        assert!(matches!(run_trials(&pop, 10, 100, 1, &DomainPolicy::Custom(full)), Err(Error::DegenerateDomain(_))));
    }

    #[test]
    fn policy_json() {
        let p: DomainPolicy = serde_json::from_str(r#""optimal-at-true-q""#).unwrap();
        assert_eq!(p, DomainPolicy::OptimalAtTrueQ);
        let p: DomainPolicy = serde_json::from_str(r#"{"optimal-at-guess": 0.4}"#).unwrap();
        assert_eq!(p, DomainPolicy::OptimalAtGuess(0.4));
        let p: DomainPolicy =
            serde_json::from_str(r#"{"custom": {"support": [0, 1], "intervals": [[0.5, 1]]}}"#).unwrap();
        assert_eq!(p.name(), "custom");
    }

    #[test]
    fn scenario_json() {
        let text = r#"{
            "models": {
                "positive": {"family": "triangular-up", "params": {}, "support": [0, 1]},
                "negative": {"family": "triangular-down", "params": {}, "support": [0, 1]}
            },
            "q_true": 0.3, "M": 100, "T": 100, "seed": 4,
            "policy": "classification-set"
        }"#;
        let sc: Scenario = serde_json::from_str(text).unwrap();
        let (report, trials) = sc.run().unwrap();
        assert_eq!(trials.len(), 100);
        assert_eq!(report, run_trials(&toy(0.3), 100, 100, 4, &DomainPolicy::ClassificationSet).unwrap());
        assert!(serde_json::from_str::<Scenario>(&text.replace("\"seed\"", "\"sead\"")).is_err());
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64 * 0.5).collect();
        assert_eq!(pairwise_sum(&xs), xs.iter().sum::<f64>());
    }
}
