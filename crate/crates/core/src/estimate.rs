//! Prevalence estimates from sample counts in a domain, and the iterative
//! refinement loop that re-optimizes the domain at the current estimate.

use serde::Serialize;

use crate::dist::{measure, MixturePopulation, ProbabilityModel};
use crate::domain::DomainSet;
use crate::error::{Error, Result};
use crate::objective::{Objective, DEFAULT_GRID_SIZE};

/// Smallest admissible `|P_D - N_D|`.
pub const MIN_SEPARATION: f64 = 1e-12;
/// Iterates of the refinement loop are kept this far inside (0, 1).
pub const PREVALENCE_MARGIN: f64 = 1e-4;
pub const DEFAULT_REFINE_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    /// `(Q~_D - N_D) / (P_D - N_D)`, possibly outside [0, 1].
    pub q_tilde_raw: f64,
    pub q_tilde_clamped: f64,
    pub q_empirical_measure: f64,
    pub p_measure: f64,
    pub n_measure: f64,
    pub sample_count: usize,
    pub in_domain_count: usize,
    /// `sqrt(Q~_D (1 - Q~_D) / (M (P_D - N_D)^2))`.
    pub predicted_std_error: f64,
}

/// Count of samples in `set` under the half-open counting convention.
pub fn count_in(values: &[f64], set: &DomainSet) -> usize {
    values.iter().filter(|r| set.contains(**r)).count()
}

/// Fraction of `values` falling in `set`.
pub fn empirical_measure(values: &[f64], set: &DomainSet) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidData("cannot take the empirical measure of an empty batch".into()));
    }
    Ok(count_in(values, set) as f64 / values.len() as f64)
}

/// Estimate from an in-domain count out of `sample_count` draws.
pub fn point_estimate(
    in_domain_count: usize,
    sample_count: usize,
    p_measure: f64,
    n_measure: f64,
) -> Result<EstimateReport> {
    if sample_count == 0 {
        return Err(Error::InvalidData("sample count must be positive".into()));
    }
    if in_domain_count > sample_count {
        return Err(Error::InvalidArgument(format!(
            "in-domain count {in_domain_count} exceeds sample count {sample_count}"
        )));
    }
    let sep = p_measure - n_measure;
    if sep.is_nan() || sep.abs() < MIN_SEPARATION {
        return Err(Error::DegenerateDomain(sep));
    }
    let q_d = in_domain_count as f64 / sample_count as f64;
    let raw = (q_d - n_measure) / sep;
    let se = (q_d * (1.0 - q_d) / (sample_count as f64 * sep * sep)).sqrt();
    Ok(EstimateReport {
        q_tilde_raw: raw,
        q_tilde_clamped: raw.clamp(0.0, 1.0),
        q_empirical_measure: q_d,
        p_measure,
        n_measure,
        sample_count,
        in_domain_count,
        predicted_std_error: se,
    })
}

/// Estimate on a fixed domain with model measures taken from `positive` and
/// `negative`.
pub fn estimate_on_domain(
    values: &[f64],
    positive: &ProbabilityModel,
    negative: &ProbabilityModel,
    set: &DomainSet,
) -> Result<EstimateReport> {
    if values.is_empty() {
        return Err(Error::InvalidData("test batch is empty".into()));
    }
    let p = measure(positive, set)?;
    let n = measure(negative, set)?;
    point_estimate(count_in(values, set), values.len(), p, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Tolerance,
    MaxIterations,
    CycleDetected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementStep {
    /// Prevalence used to build the domain.
    pub q: f64,
    pub q_hat_star: f64,
    pub delta: f64,
    /// Clamped estimate on that domain, the next iterate.
    pub q_next: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementTrace {
    pub iterations: Vec<RefinementStep>,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub domain: DomainSet,
}

#[derive(Debug, Clone, Copy)]
pub struct RefineOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub grid_size: usize,
    pub optimizer_tol: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_REFINE_TOL,
            max_iter: DEFAULT_MAX_ITER,
            grid_size: DEFAULT_GRID_SIZE,
            optimizer_tol: crate::objective::DEFAULT_TOL,
        }
    }
}

/// Alternates between building the optimal domain at the current prevalence
/// guess and re-estimating the prevalence on that domain.
///
/// Stops when successive iterates differ by less than `tol`, when an iterate
/// returns within `tol / 10` of the one two steps back (a 2-cycle), or after
/// `max_iter` steps. Reaching the tolerance does not imply the map has a
/// fixed point; it only bounds the last step.
pub fn refine(
    values: &[f64],
    positive: &ProbabilityModel,
    negative: &ProbabilityModel,
    q0: f64,
    opts: &RefineOptions,
) -> Result<(RefinementTrace, EstimateReport)> {
    if !(q0 > 0.0 && q0 < 1.0) {
        return Err(Error::InvalidArgument(format!("initial prevalence must lie in (0, 1), got {q0}")));
    }
    if opts.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let mut steps: Vec<RefinementStep> = Vec::new();
    let mut q = q0;
    loop {
        let pop = MixturePopulation::new(q, positive.clone(), negative.clone())?;
        let opt = Objective::new(pop).minimize(opts.grid_size, opts.optimizer_tol)?;
        let report = estimate_on_domain(values, positive, negative, &opt.solution.set)?;
        let q_next = report.q_tilde_raw.clamp(PREVALENCE_MARGIN, 1.0 - PREVALENCE_MARGIN);
        steps.push(RefinementStep { q, q_hat_star: opt.q_hat_star, delta: opt.solution.delta, q_next });

        let stop = if (q_next - q).abs() < opts.tol {
            Some(StopReason::Tolerance)
        } else if steps.len() >= 2 && (q_next - steps[steps.len() - 2].q).abs() < opts.tol / 10.0 {
            Some(StopReason::CycleDetected)
        } else if steps.len() >= opts.max_iter {
            Some(StopReason::MaxIterations)
        } else {
            None
        };
        if let Some(stop_reason) = stop {
            let trace = RefinementTrace {
                iterations: steps,
                converged: stop_reason == StopReason::Tolerance,
                stop_reason,
                domain: opt.solution.set,
            };
            return Ok((trace, report));
        }
        q = q_next;
    }
}
