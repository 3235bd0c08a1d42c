//! Minimum-variance prevalence estimation.
//!
//! Given conditional measurement densities `P` (positive) and `N` (negative)
//! and a prevalence `q`, the population density is `Q = qP + (1 - q)N`. For any
//! measurement domain `D`, the fraction of samples landing in `D` yields an
//! unbiased prevalence estimate whose variance is proportional to
//! `Q_D (1 - Q_D) / (P_D - N_D)^2`. This crate builds the domains that
//! minimize that variance by level-set filling of the ratio
//! `q (P - N) / N`, optimizes over the target measure, and validates the
//! result by Monte Carlo.

pub mod bathtub;
pub mod dist;
pub mod domain;
pub mod error;
pub mod estimate;
pub mod mle;
pub mod objective;
pub mod optim;
pub mod quadrature;
pub mod sim;

pub use bathtub::{Bathtub, BathtubSolution, Branch};
pub use dist::{measure, Density, FamilyTag, MixturePopulation, ModelSpec, ProbabilityModel, Sampler};
pub use domain::{DomainSet, Interval};
pub use error::{Error, Result};
pub use estimate::{EstimateReport, RefineOptions, RefinementTrace};
pub use objective::{Objective, OptimizationResult, TracePoint};
pub use sim::{DomainPolicy, SimReport};
