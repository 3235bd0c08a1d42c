//! Variance objective over the target measure `q_hat` and its minimization.
//!
//! `sigma2(q_hat) = q_hat (1 - q_hat) / (P_D - N_D)^2` with `D` the optimal
//! bathtub set at `q_hat`. This is the per-sample variance factor; the
//! variance of a prevalence estimate from `M` samples is `sigma2 / M`.

use rayon::prelude::*;
use serde::Serialize;

use crate::bathtub::{Bathtub, BathtubSolution, Branch};
use crate::dist::MixturePopulation;
use crate::error::{Error, Result};
use crate::optim::golden_section;

/// Squared differences below this make the variance infinite.
pub const DENOMINATOR_FLOOR: f64 = 1e-14;
pub const GRID_LO: f64 = 0.01;
pub const GRID_HI: f64 = 0.99;
pub const DEFAULT_GRID_SIZE: usize = 101;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub q_hat: f64,
    pub sigma2_plus: f64,
    pub sigma2_minus: f64,
    /// `P_D - N_D` on the plus branch.
    pub p_minus_n_plusbranch: f64,
    /// `N_D - P_D` on the minus branch.
    pub n_minus_p_minusbranch: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    pub q_hat_star: f64,
    pub branch: Branch,
    pub sigma2_star: f64,
    pub solution: BathtubSolution,
    /// `sigma2_minus(1 - q_hat_star)`, equal to `sigma2_star` by symmetry.
    pub sigma2_minus_reflected: f64,
    pub trace: Vec<TracePoint>,
}

fn variance_factor(q_hat: f64, diff: f64) -> f64 {
    let denom = diff * diff;
    if denom < DENOMINATOR_FLOOR {
        f64::INFINITY
    } else {
        q_hat * (1.0 - q_hat) / denom
    }
}

/// Variance branches for one population.
#[derive(Debug, Clone)]
pub struct Objective {
    bathtub: Bathtub,
}

impl Objective {
    pub fn new(pop: MixturePopulation) -> Self {
        Self { bathtub: Bathtub::new(pop) }
    }

    pub fn from_bathtub(bathtub: Bathtub) -> Self {
        Self { bathtub }
    }

    pub fn bathtub(&self) -> &Bathtub {
        &self.bathtub
    }

    pub fn population(&self) -> &MixturePopulation {
        self.bathtub.population()
    }

    pub fn variance_branch(&self, q_hat: f64, branch: Branch) -> Result<f64> {
        let sol = self.bathtub.solve(q_hat, branch)?;
        Ok(variance_factor(q_hat, sol.difference()))
    }

    /// `F(q_hat)`: the larger squared difference over both branches.
    pub fn f_of_qhat(&self, q_hat: f64) -> Result<f64> {
        let plus = self.bathtub.solve(q_hat, Branch::Plus)?.difference();
        let minus = self.bathtub.solve(q_hat, Branch::Minus)?.difference();
        Ok((plus * plus).max(minus * minus))
    }

    fn trace_point(&self, q_hat: f64) -> TracePoint {
        let diff = |branch| self.bathtub.solve(q_hat, branch).map(|s| s.difference());
        let (plus, minus) = (diff(Branch::Plus), diff(Branch::Minus));
        let var = |d: &Result<f64>| d.as_ref().map(|d| variance_factor(q_hat, *d)).unwrap_or(f64::INFINITY);
        TracePoint {
            q_hat,
            sigma2_plus: var(&plus),
            sigma2_minus: var(&minus),
            p_minus_n_plusbranch: plus.as_ref().copied().unwrap_or(f64::NAN),
            n_minus_p_minusbranch: minus.map(|d| -d).unwrap_or(f64::NAN),
        }
    }

    /// Evaluates both branches on `grid` points, in order.
    pub fn trace(&self, grid: &[f64]) -> Vec<TracePoint> {
        grid.par_iter().map(|q| self.trace_point(*q)).collect()
    }

    /// Grid scan of the plus branch over `[0.01, 0.99]` followed by
    /// golden-section refinement around the best grid point.
    ///
    /// Unreachable targets count as infinite variance. Ties on the grid go to
    /// the smaller `q_hat`.
    pub fn minimize(&self, grid_size: usize, tol: f64) -> Result<OptimizationResult> {
        if grid_size < 21 {
            return Err(Error::InvalidArgument(format!("grid size must be at least 21, got {grid_size}")));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
        }
        let step = (GRID_HI - GRID_LO) / (grid_size - 1) as f64;
        let grid: Vec<f64> = (0..grid_size).map(|i| GRID_LO + step * i as f64).collect();
        let trace = self.trace(&grid);

        let mut best = 0;
        for (i, t) in trace.iter().enumerate() {
            if t.sigma2_plus < trace[best].sigma2_plus {
                best = i;
            }
        }
        if !trace[best].sigma2_plus.is_finite() {
            return Err(Error::DegenerateDomain(trace[best].p_minus_n_plusbranch));
        }

        let a = (grid[best] - step).max(0.5 * grid[0]);
        let b = (grid[best] + step).min(1.0 - 0.5 * grid[0]);
        let sigma2 = |q: f64| self.variance_branch(q, Branch::Plus).unwrap_or(f64::INFINITY);
        let line = golden_section(sigma2, a, b, tol);
        let q_hat_star = if line.fx <= trace[best].sigma2_plus { line.x } else { grid[best] };

        let solution = self.bathtub.solve(q_hat_star, Branch::Plus)?;
        let sigma2_star = variance_factor(q_hat_star, solution.difference());
        let sigma2_minus_reflected = self.variance_branch(1.0 - q_hat_star, Branch::Minus)?;
        Ok(OptimizationResult {
            q_hat_star,
            branch: Branch::Plus,
            sigma2_star,
            solution,
            sigma2_minus_reflected,
            trace,
        })
    }
}

pub fn variance_branch(pop: &MixturePopulation, q_hat: f64, branch: Branch) -> Result<f64> {
    Objective::new(pop.clone()).variance_branch(q_hat, branch)
}

pub fn f_of_qhat(pop: &MixturePopulation, q_hat: f64) -> Result<f64> {
    Objective::new(pop.clone()).f_of_qhat(q_hat)
}

pub fn minimize(pop: &MixturePopulation, grid_size: usize, tol: f64) -> Result<OptimizationResult> {
    Objective::new(pop.clone()).minimize(grid_size, tol)
}

/// Variance factor of an arbitrary domain, `Q_D (1 - Q_D) / (P_D - N_D)^2`.
pub fn domain_variance(pop: &MixturePopulation, set: &crate::domain::DomainSet) -> Result<f64> {
    let (p, n, q) = pop.measures(set)?;
    Ok(variance_factor(q, p - n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ProbabilityModel;
    use approx::assert_abs_diff_eq;

    fn toy() -> MixturePopulation {
        MixturePopulation::new(
            0.5,
            ProbabilityModel::triangular_up(0.0, 1.0).unwrap(),
            ProbabilityModel::triangular_down(0.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    /// On the toy pair with q = 1/2, Q is uniform and the plus set at
    /// measure s is [1 - s, 1], so P_D - N_D = 2 s (1 - s).
    fn toy_sigma2(s: f64) -> f64 {
        1.0 / (4.0 * s * (1.0 - s))
    }

    #[test]
    fn toy_branch_values() {
        let obj = Objective::new(toy());
        assert_abs_diff_eq!(obj.variance_branch(0.5, Branch::Plus).unwrap(), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(obj.variance_branch(0.25, Branch::Plus).unwrap(), 4.0 / 3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(obj.f_of_qhat(0.5).unwrap(), 0.25, epsilon = 1e-9);
        assert_abs_diff_eq!(
            obj.variance_branch(0.3, Branch::Plus).unwrap(),
            obj.variance_branch(0.7, Branch::Minus).unwrap(),
            epsilon = 1e-6
        );
    }

    #[test]
    fn toy_minimum() {
        let res = minimize(&toy(), DEFAULT_GRID_SIZE, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(res.q_hat_star, 0.5, epsilon = 1e-4);
        assert_abs_diff_eq!(res.sigma2_star, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(res.sigma2_minus_reflected, res.sigma2_star, epsilon = 1e-6);
        assert_eq!(res.trace.len(), DEFAULT_GRID_SIZE);
        for t in &res.trace {
            assert!(res.sigma2_star <= t.sigma2_plus);
            assert_abs_diff_eq!(t.sigma2_plus, toy_sigma2(t.q_hat), epsilon = 1e-6);
        }
        let diff = res.solution.difference();
        assert_abs_diff_eq!(res.sigma2_star, res.q_hat_star * (1.0 - res.q_hat_star) / (diff * diff), epsilon = 1e-8);
        let obj = Objective::new(toy());
        assert!(obj.variance_branch(0.001, Branch::Plus).unwrap() > 100.0 * res.sigma2_star);
    }

    #[test]
    fn useless_diagnostic_is_degenerate() {
        let uni = ProbabilityModel::uniform(0.0, 1.0).unwrap();
        let pop = MixturePopulation::new(0.3, uni.clone(), uni).unwrap();
        let obj = Objective::new(pop.clone());
        assert_eq!(obj.variance_branch(0.5, Branch::Plus).unwrap(), f64::INFINITY);
        assert!(minimize(&pop, DEFAULT_GRID_SIZE, DEFAULT_TOL).is_err());
    }

    #[test]
    fn rejects_bad_options() {
        assert!(minimize(&toy(), 20, 1e-6).is_err());
        assert!(minimize(&toy(), 101, 0.0).is_err());
    }

    #[test]
    fn domain_variance_matches_branch() {
        let obj = Objective::new(toy());
        let sol = obj.bathtub().solve(0.4, Branch::Plus).unwrap();
        assert_abs_diff_eq!(
            domain_variance(obj.population(), &sol.set).unwrap(),
            obj.variance_branch(0.4, Branch::Plus).unwrap(),
            epsilon = 1e-8
        );
    }
}
