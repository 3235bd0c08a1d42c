//! Probability models over a bounded 1D support, the two-component mixture,
//! set measures, and seeded sampling.
//!
//! The Burr family is Burr type XII with two shapes and a scale,
//!
//! ```text
//! F(x) = 1 - (1 + (x/scale)^c)^(-k),   x >= 0
//! ```
//!
//! truncated to the model support and renormalized. The Beta family is the
//! standard Beta(a, b) affinely mapped onto the support.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};

use crate::domain::{DomainSet, Interval};
use crate::error::{Error, Result};
use crate::quadrature;

/// Tolerance of numeric CDF inversion, in the model's measurement units.
pub const INVERSION_TOL: f64 = 1e-12;

/// Anything with a density over a bounded 1D support.
pub trait Density {
    fn pdf(&self, r: f64) -> f64;

    fn support(&self) -> Interval;

    /// Closed-form CDF when available. Measures fall back to adaptive
    /// quadrature of the density otherwise.
    fn cdf(&self, _r: f64) -> Option<f64> {
        None
    }
}

/// Draws i.i.d. measurements.
pub trait Sampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;

    /// `count` draws from a private generator seeded with `seed`.
    fn sample(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::InvalidArgument("sample count must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(self.sample_with(&mut rng, count))
    }

    fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.draw(rng)).collect()
    }
}

/// Measure of `set` under `density`: CDF differences when a closed form
/// exists, adaptive Simpson otherwise.
pub fn measure<D: Density + ?Sized>(density: &D, set: &DomainSet) -> Result<f64> {
    let support = density.support();
    let ss = set.support();
    if ss.lo < support.lo || ss.hi > support.hi {
        return Err(Error::DomainMismatch { set_lo: ss.lo, set_hi: ss.hi, model_lo: support.lo, model_hi: support.hi });
    }
    let mut total = 0.0;
    for iv in set.intervals() {
        total += match (density.cdf(iv.hi), density.cdf(iv.lo)) {
            (Some(hi), Some(lo)) => hi - lo,
            _ => quadrature::adaptive_simpson(
                |r| density.pdf(r),
                iv.lo,
                iv.hi,
                quadrature::DEFAULT_TOL,
                quadrature::DEFAULT_MAX_DEPTH,
            ),
        };
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Measure by quadrature of the density alone, ignoring any closed-form CDF.
pub fn measure_by_quadrature<D: Density + ?Sized>(density: &D, set: &DomainSet) -> f64 {
    set.intervals()
        .iter()
        .map(|iv| {
            quadrature::adaptive_simpson(
                |r| density.pdf(r),
                iv.lo,
                iv.hi,
                quadrature::DEFAULT_TOL,
                quadrature::DEFAULT_MAX_DEPTH,
            )
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    BurrTruncated,
    Beta,
    Uniform,
    TriangularUp,
    TriangularDown,
    Histogram,
}

impl FamilyTag {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyTag::BurrTruncated => "burr-truncated",
            FamilyTag::Beta => "beta",
            FamilyTag::Uniform => "uniform",
            FamilyTag::TriangularUp => "triangular-up",
            FamilyTag::TriangularDown => "triangular-down",
            FamilyTag::Histogram => "histogram",
        }
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FamilyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "burr-truncated" | "burr" => FamilyTag::BurrTruncated,
            "beta" => FamilyTag::Beta,
            "uniform" => FamilyTag::Uniform,
            "triangular-up" => FamilyTag::TriangularUp,
            "triangular-down" => FamilyTag::TriangularDown,
            "histogram" => FamilyTag::Histogram,
            other => return Err(Error::InvalidModel(format!("unknown family '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Family {
    Burr {
        c: f64,
        k: f64,
        scale: f64,
        surv_lo: f64,
        mass: f64,
    },
    Beta {
        a: f64,
        b: f64,
        ln_norm: f64,
    },
    Uniform,
    TriangularUp,
    TriangularDown,
    /// Equal-width cells across the support; `probs` sum to one and
    /// `cum[i]` is the probability below cell `i`.
    Histogram {
        probs: Vec<f64>,
        cum: Vec<f64>,
    },
}

/// A density with closed-form CDF on a finite support `[lo, hi]`.
///
/// Immutable after construction; all parameter validation happens in the
/// constructors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct ProbabilityModel {
    family: Family,
    support: Interval,
}

/// JSON form of a model: `{"family": ..., "params": {...}, "support": [lo, hi]}`.
///
/// Parameter names: burr-truncated `c`, `k`, `scale`; beta `a`, `b`;
/// histogram `w0`, `w1`, ... (nonnegative cell weights, equal-width cells).
/// The uniform and triangular families take no parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: FamilyTag,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub support: [f64; 2],
}

fn burr_survival(x: f64, c: f64, k: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    (-k * ((x / scale).powf(c)).ln_1p()).exp()
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidModel(format!("parameter '{name}' must be finite and positive, got {v}")));
    }
    Ok(())
}

fn check_support(lo: f64, hi: f64) -> Result<Interval> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidModel(format!("support [{lo}, {hi}] must be finite with lo < hi")));
    }
    Ok(Interval::new(lo, hi))
}

impl ProbabilityModel {
    /// Burr XII with shapes `c`, `k` and `scale`, truncated to `[lo, hi]`
    /// with `lo >= 0`.
    pub fn burr_truncated(c: f64, k: f64, scale: f64, lo: f64, hi: f64) -> Result<Self> {
        check_positive("c", c)?;
        check_positive("k", k)?;
        check_positive("scale", scale)?;
        let support = check_support(lo, hi)?;
        if lo < 0.0 {
            return Err(Error::InvalidModel("burr-truncated support must lie in [0, inf)".into()));
        }
        let surv_lo = burr_survival(lo, c, k, scale);
        let mass = surv_lo - burr_survival(hi, c, k, scale);
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "burr-truncated(c={c}, k={k}, scale={scale}) has no mass on [{lo}, {hi}]"
            )));
        }
        Ok(Self { family: Family::Burr { c, k, scale, surv_lo, mass }, support })
    }

    pub fn beta(a: f64, b: f64, lo: f64, hi: f64) -> Result<Self> {
        check_positive("a", a)?;
        check_positive("b", b)?;
        let support = check_support(lo, hi)?;
        let ln_norm = ln_beta(a, b) + (hi - lo).ln();
        Ok(Self { family: Family::Beta { a, b, ln_norm }, support })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Ok(Self { family: Family::Uniform, support: check_support(lo, hi)? })
    }

    /// Density rising linearly from 0 at `lo`; `2r` on `[0, 1]`.
    pub fn triangular_up(lo: f64, hi: f64) -> Result<Self> {
        Ok(Self { family: Family::TriangularUp, support: check_support(lo, hi)? })
    }

    /// Density falling linearly to 0 at `hi`; `2(1 - r)` on `[0, 1]`.
    pub fn triangular_down(lo: f64, hi: f64) -> Result<Self> {
        Ok(Self { family: Family::TriangularDown, support: check_support(lo, hi)? })
    }

    /// Piecewise-constant density over equal-width cells. Weights are
    /// normalized to probabilities.
    pub fn histogram(weights: &[f64], lo: f64, hi: f64) -> Result<Self> {
        let support = check_support(lo, hi)?;
        if weights.is_empty() {
            return Err(Error::InvalidModel("histogram needs at least one cell".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidModel("histogram weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidModel("histogram weights sum to zero".into()));
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            cum.push(acc);
            acc += p;
        }
        Ok(Self { family: Family::Histogram { probs, cum }, support })
    }

    pub fn from_params(family: FamilyTag, params: &BTreeMap<String, f64>, lo: f64, hi: f64) -> Result<Self> {
        let expect = |names: &[&str]| -> Result<Vec<f64>> {
            for key in params.keys() {
                if !names.contains(&key.as_str()) {
                    return Err(Error::InvalidModel(format!("unknown parameter '{key}' for family {family}")));
                }
            }
            names
                .iter()
                .map(|n| {
                    params
                        .get(*n)
                        .copied()
                        .ok_or_else(|| Error::InvalidModel(format!("missing parameter '{n}' for family {family}")))
                })
                .collect()
        };
        match family {
            FamilyTag::BurrTruncated => {
                let v = expect(&["c", "k", "scale"])?;
                Self::burr_truncated(v[0], v[1], v[2], lo, hi)
            }
            FamilyTag::Beta => {
                let v = expect(&["a", "b"])?;
                Self::beta(v[0], v[1], lo, hi)
            }
            FamilyTag::Uniform => {
                expect(&[])?;
                Self::uniform(lo, hi)
            }
            FamilyTag::TriangularUp => {
                expect(&[])?;
                Self::triangular_up(lo, hi)
            }
            FamilyTag::TriangularDown => {
                expect(&[])?;
                Self::triangular_down(lo, hi)
            }
            FamilyTag::Histogram => {
                let mut weights = vec![None; params.len()];
                for (key, w) in params {
                    let idx = key
                        .strip_prefix('w')
                        .and_then(|s| s.parse::<usize>().ok())
                        .filter(|i| *i < weights.len())
                        .ok_or_else(|| {
                            Error::InvalidModel(format!(
                                "histogram weights must be named w0..w{}",
                                params.len().max(1) - 1
                            ))
                        })?;
                    weights[idx] = Some(*w);
                }
                let weights: Vec<f64> = weights.into_iter().map(|w| w.unwrap_or(0.0)).collect();
                Self::histogram(&weights, lo, hi)
            }
        }
    }

    pub fn family(&self) -> FamilyTag {
        match self.family {
            Family::Burr { .. } => FamilyTag::BurrTruncated,
            Family::Beta { .. } => FamilyTag::Beta,
            Family::Uniform => FamilyTag::Uniform,
            Family::TriangularUp => FamilyTag::TriangularUp,
            Family::TriangularDown => FamilyTag::TriangularDown,
            Family::Histogram { .. } => FamilyTag::Histogram,
        }
    }

    /// Named parameters, as serialized.
    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        match &self.family {
            Family::Burr { c, k, scale, .. } => {
                out.insert("c".into(), *c);
                out.insert("k".into(), *k);
                out.insert("scale".into(), *scale);
            }
            Family::Beta { a, b, .. } => {
                out.insert("a".into(), *a);
                out.insert("b".into(), *b);
            }
            Family::Histogram { probs, .. } => {
                for (i, p) in probs.iter().enumerate() {
                    out.insert(format!("w{i}"), *p);
                }
            }
            Family::Uniform | Family::TriangularUp | Family::TriangularDown => {}
        }
        out
    }

    /// Free parameters in a fixed order (burr: c, k, scale; beta: a, b).
    pub fn param_vector(&self) -> Vec<f64> {
        match &self.family {
            Family::Burr { c, k, scale, .. } => vec![*c, *k, *scale],
            Family::Beta { a, b, .. } => vec![*a, *b],
            Family::Histogram { probs, .. } => probs.clone(),
            _ => Vec::new(),
        }
    }

    /// Untruncated probability of the support; 1 for non-truncated families.
    pub fn truncated_mass(&self) -> f64 {
        match self.family {
            Family::Burr { mass, .. } => mass,
            _ => 1.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.support.hi - self.support.lo
    }

    /// Log density; `-inf` outside the support.
    pub fn ln_pdf(&self, r: f64) -> f64 {
        let Interval { lo, hi } = self.support;
        if !(r >= lo && r <= hi) {
            return f64::NEG_INFINITY;
        }
        let w = hi - lo;
        match &self.family {
            Family::Burr { c, k, scale, mass, .. } => {
                if r == 0.0 {
                    return match c.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => (k / scale / mass).ln(),
                        _ => f64::NEG_INFINITY,
                    };
                }
                let ln_z = (r / scale).ln();
                (c * k / scale).ln() + (c - 1.0) * ln_z - (k + 1.0) * (c * ln_z).exp().ln_1p() - mass.ln()
            }
            Family::Beta { a, b, ln_norm } => {
                let t = (r - lo) / w;
                let term = |shape: f64, x: f64| -> f64 {
                    if shape == 1.0 {
                        0.0
                    } else {
                        (shape - 1.0) * x.ln()
                    }
                };
                term(*a, t) + term(*b, 1.0 - t) - ln_norm
            }
            _ => self.pdf(r).ln(),
        }
    }

    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let Interval { lo, hi } = self.support;
        let u = u.clamp(0.0, 1.0);
        let w = hi - lo;
        let r = match &self.family {
            Family::Uniform => lo + u * w,
            Family::TriangularUp => lo + w * u.sqrt(),
            Family::TriangularDown => hi - w * (1.0 - u).sqrt(),
            Family::Burr { c, k, scale, surv_lo, mass } => {
                let surv = surv_lo - u * mass;
                if surv <= 0.0 {
                    hi
                } else {
                    // (1 + z^c)^(-k) = surv  =>  z = (surv^(-1/k) - 1)^(1/c)
                    let zc = ((-surv.ln()) / k).exp_m1();
                    scale * zc.powf(1.0 / c)
                }
            }
            Family::Histogram { probs, cum } => {
                let n = probs.len();
                let mut idx = cum.partition_point(|c| *c <= u).saturating_sub(1);
                while idx + 1 < n && probs[idx] == 0.0 {
                    idx += 1;
                }
                let h = w / n as f64;
                let frac = if probs[idx] > 0.0 { ((u - cum[idx]) / probs[idx]).clamp(0.0, 1.0) } else { 0.0 };
                lo + h * (idx as f64 + frac)
            }
            Family::Beta { a, b, .. } => lo + w * invert_beta(*a, *b, u, INVERSION_TOL / w),
        };
        r.clamp(lo, hi)
    }
}

/// Safeguarded Newton iteration on the regularized incomplete beta function.
/// The bracket shrinks every step and the update falls back to bisection
/// whenever Newton leaves it.
fn invert_beta(a: f64, b: f64, u: f64, tol: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let ln_norm = ln_beta(a, b);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut t = 0.5;
    for _ in 0..200 {
        let f = beta_reg(a, b, t) - u;
        if f == 0.0 {
            return t;
        }
        if f < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= tol {
            break;
        }
        let dens = ((a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln() - ln_norm).exp();
        let newton = t - f / dens;
        if dens.is_finite() && dens > 0.0 && newton > lo && newton < hi {
            if (newton - t).abs() <= tol {
                return newton;
            }
            t = newton;
        } else {
            t = 0.5 * (lo + hi);
        }
    }
    0.5 * (lo + hi)
}

impl Density for ProbabilityModel {
    fn pdf(&self, r: f64) -> f64 {
        let Interval { lo, hi } = self.support;
        if !(r >= lo && r <= hi) {
            return 0.0;
        }
        let w = hi - lo;
        match &self.family {
            Family::Uniform => 1.0 / w,
            Family::TriangularUp => 2.0 * (r - lo) / (w * w),
            Family::TriangularDown => 2.0 * (hi - r) / (w * w),
            Family::Histogram { probs, .. } => {
                let n = probs.len();
                let h = w / n as f64;
                let idx = (((r - lo) / h) as usize).min(n - 1);
                probs[idx] / h
            }
            Family::Burr { .. } | Family::Beta { .. } => self.ln_pdf(r).exp(),
        }
    }

    fn support(&self) -> Interval {
        self.support
    }

    fn cdf(&self, r: f64) -> Option<f64> {
        let Interval { lo, hi } = self.support;
        if r <= lo {
            return Some(0.0);
        }
        if r >= hi {
            return Some(1.0);
        }
        let w = hi - lo;
        let t = (r - lo) / w;
        let v = match &self.family {
            Family::Uniform => t,
            Family::TriangularUp => t * t,
            Family::TriangularDown => 1.0 - (1.0 - t) * (1.0 - t),
            Family::Histogram { probs, cum } => {
                let n = probs.len();
                let pos = t * n as f64;
                let idx = (pos as usize).min(n - 1);
                cum[idx] + probs[idx] * (pos - idx as f64)
            }
            Family::Burr { c, k, scale, surv_lo, mass } => (surv_lo - burr_survival(r, *c, *k, *scale)) / mass,
            Family::Beta { a, b, .. } => beta_reg(*a, *b, t),
        };
        Some(v.clamp(0.0, 1.0))
    }
}

impl Sampler for ProbabilityModel {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.inverse_cdf(rng.random::<f64>())
    }
}

impl TryFrom<ModelSpec> for ProbabilityModel {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        ProbabilityModel::from_params(spec.family, &spec.params, spec.support[0], spec.support[1])
    }
}

impl From<ProbabilityModel> for ModelSpec {
    fn from(model: ProbabilityModel) -> Self {
        ModelSpec { family: model.family(), params: model.params(), support: [model.support.lo, model.support.hi] }
    }
}

/// `Q(r) = q P(r) + (1 - q) N(r)` over the common support of `P` and `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePopulation {
    q: f64,
    positive: ProbabilityModel,
    negative: ProbabilityModel,
}

impl MixturePopulation {
    pub fn new(q: f64, positive: ProbabilityModel, negative: ProbabilityModel) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidArgument(format!("prevalence q must lie in [0, 1], got {q}")));
        }
        if positive.support != negative.support {
            return Err(Error::InvalidModel(format!(
                "positive support [{}, {}] differs from negative support [{}, {}]",
                positive.support.lo, positive.support.hi, negative.support.lo, negative.support.hi
            )));
        }
        Ok(Self { q, positive, negative })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn positive(&self) -> &ProbabilityModel {
        &self.positive
    }

    pub fn negative(&self) -> &ProbabilityModel {
        &self.negative
    }

    /// Same component models at a different prevalence.
    pub fn with_q(&self, q: f64) -> Result<Self> {
        Self::new(q, self.positive.clone(), self.negative.clone())
    }

    pub fn mixture_pdf(&self, r: f64) -> f64 {
        self.pdf(r)
    }

    /// `(P_D, N_D, Q_D)` for a set.
    pub fn measures(&self, set: &DomainSet) -> Result<(f64, f64, f64)> {
        let p = measure(&self.positive, set)?;
        let n = measure(&self.negative, set)?;
        Ok((p, n, self.q * p + (1.0 - self.q) * n))
    }
}

impl Density for MixturePopulation {
    fn pdf(&self, r: f64) -> f64 {
        if self.q == 0.0 {
            return self.negative.pdf(r);
        }
        if self.q == 1.0 {
            return self.positive.pdf(r);
        }
        self.q * self.positive.pdf(r) + (1.0 - self.q) * self.negative.pdf(r)
    }

    fn support(&self) -> Interval {
        self.positive.support
    }

    fn cdf(&self, r: f64) -> Option<f64> {
        let p = self.positive.cdf(r)?;
        let n = self.negative.cdf(r)?;
        Some(self.q * p + (1.0 - self.q) * n)
    }
}

impl Sampler for MixturePopulation {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.random::<f64>() < self.q {
            self.positive.draw(rng)
        } else {
            self.negative.draw(rng)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn unit_set(pieces: &[(f64, f64)]) -> DomainSet {
        DomainSet::new(Interval::new(0.0, 1.0), pieces.iter().map(|(a, b)| Interval::new(*a, *b))).unwrap()
    }

    fn toy(q: f64) -> MixturePopulation {
        MixturePopulation::new(
            q,
            ProbabilityModel::triangular_up(0.0, 1.0).unwrap(),
            ProbabilityModel::triangular_down(0.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn pdf_examples() {
        let beta = ProbabilityModel::beta(2.0, 2.0, 0.0, 1.0).unwrap();
        // 6 r (1 - r) at 0.5
        assert_relative_eq!(beta.pdf(0.5), 1.5, epsilon = 1e-14);
        assert_eq!(beta.pdf(1.2), 0.0);
        assert_eq!(beta.pdf(-0.1), 0.0);
        let uni = ProbabilityModel::uniform(0.0, 1.0).unwrap();
        assert_eq!(uni.pdf(0.3), 1.0);
        assert_eq!(uni.pdf(1.3), 0.0);
    }

    #[test]
    fn burr_closed_form() {
        let m = ProbabilityModel::burr_truncated(2.0, 3.0, 0.5, 0.0, 1.0).unwrap();
        let raw_pdf = |x: f64| 2.0 * 3.0 / 0.5 * (x / 0.5) * (1.0 + (x / 0.5f64).powi(2)).powf(-4.0);
        let mass = 1.0 - (1.0 + 4.0f64).powf(-3.0);
        assert_relative_eq!(m.pdf(0.3), raw_pdf(0.3) / mass, max_relative = 1e-13);
        assert_relative_eq!(m.cdf(0.3).unwrap(), (1.0 - (1.0 + 0.36f64).powf(-3.0)) / mass, max_relative = 1e-13);
        assert_eq!(m.pdf(0.0), 0.0);
        let spiky = ProbabilityModel::burr_truncated(0.5, 1.0, 0.5, 0.0, 1.0).unwrap();
        assert_eq!(spiky.pdf(0.0), f64::INFINITY);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ProbabilityModel::beta(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(ProbabilityModel::beta(1.0, f64::NAN, 0.0, 1.0).is_err());
        assert!(ProbabilityModel::burr_truncated(1.0, -1.0, 1.0, 0.0, 1.0).is_err());
        assert!(ProbabilityModel::burr_truncated(1.0, 1.0, 1.0, -1.0, 1.0).is_err());
        assert!(ProbabilityModel::uniform(1.0, 1.0).is_err());
        assert!(ProbabilityModel::histogram(&[0.0, 0.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn measure_examples() {
        let up = ProbabilityModel::triangular_up(0.0, 1.0).unwrap();
        assert_relative_eq!(measure(&up, &unit_set(&[(0.5, 1.0)])).unwrap(), 0.75, epsilon = 1e-15);
        assert_eq!(measure(&up, &DomainSet::full(Interval::new(0.0, 1.0)).unwrap()).unwrap(), 1.0);
        assert_eq!(measure(&up, &DomainSet::empty(Interval::new(0.0, 1.0)).unwrap()).unwrap(), 0.0);
        let wide = DomainSet::full(Interval::new(0.0, 2.0)).unwrap();
        assert!(matches!(measure(&up, &wide), Err(Error::DomainMismatch { .. })));
    }

    struct NoCdf;
    impl Density for NoCdf {
        fn pdf(&self, r: f64) -> f64 {
            3.0 * r * r
        }
        fn support(&self) -> Interval {
            Interval::new(0.0, 1.0)
        }
    }

    #[test]
    fn quadrature_fallback() {
        let v = measure(&NoCdf, &unit_set(&[(0.0, 0.5), (0.8, 1.0)])).unwrap();
        assert_relative_eq!(v, 0.125 + 1.0 - 0.512, epsilon = 1e-10);
    }

    #[test]
    fn mixture_examples() {
        let pop = toy(0.5);
        for r in [0.0, 0.1, 0.37, 0.5, 0.99, 1.0] {
            assert_relative_eq!(pop.mixture_pdf(r), 1.0, epsilon = 1e-15);
        }
        let p0 = toy(0.0);
        let p1 = toy(1.0);
        for r in [0.1, 0.4, 0.8] {
            assert_eq!(p0.mixture_pdf(r), p0.negative().pdf(r));
            assert_eq!(p1.mixture_pdf(r), p1.positive().pdf(r));
        }
        let mixed = MixturePopulation::new(
            0.3,
            ProbabilityModel::uniform(0.0, 1.0).unwrap(),
            ProbabilityModel::uniform(0.0, 2.0).unwrap(),
        );
        assert!(mixed.is_err());
        assert!(toy(0.5).with_q(1.5).is_err());
    }

    #[test]
    fn histogram_model() {
        let h = ProbabilityModel::histogram(&[1.0, 0.0, 3.0], 0.0, 3.0).unwrap();
        assert_relative_eq!(h.pdf(0.5), 0.25);
        assert_eq!(h.pdf(1.5), 0.0);
        assert_relative_eq!(h.pdf(3.0), 0.75);
        assert_relative_eq!(h.cdf(1.5).unwrap(), 0.25);
        assert_relative_eq!(h.cdf(2.5).unwrap(), 0.625);
        assert_relative_eq!(h.inverse_cdf(0.25), 2.0, epsilon = 1e-15);
        assert_relative_eq!(h.inverse_cdf(0.625), 2.5, epsilon = 1e-15);
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let text = r#"{"family":"beta","params":{"a":2.0,"b":5.0},"support":[0.0,1.0]}"#;
        let m: ProbabilityModel = serde_json::from_str(text).unwrap();
        assert_eq!(m.family(), FamilyTag::Beta);
        assert_eq!(serde_json::to_string(&m).unwrap(), text);
        for bad in [
            r#"{"family":"beta","params":{"a":2.0,"b":5.0},"support":[0,1],"extra":1}"#,
            r#"{"family":"beta","params":{"a":2.0,"b":5.0,"c":1},"support":[0,1]}"#,
            r#"{"family":"beta","params":{"a":2.0},"support":[0,1]}"#,
            r#"{"family":"gamma","params":{},"support":[0,1]}"#,
            r#"{"family":"beta","params":{"a":-2.0,"b":5.0},"support":[0,1]}"#,
        ] {
            assert!(serde_json::from_str::<ProbabilityModel>(bad).is_err(), "{bad}");
        }
        let h: ProbabilityModel =
            serde_json::from_str(r#"{"family":"histogram","params":{"w0":1,"w1":3},"support":[0,1]}"#).unwrap();
        assert_relative_eq!(h.pdf(0.75), 1.5);
        let burr: ProbabilityModel =
            serde_json::from_str(r#"{"family":"burr-truncated","params":{"c":2,"k":1.5,"scale":0.2},"support":[0,1]}"#)
                .unwrap();
        assert_eq!(burr.param_vector(), vec![2.0, 1.5, 0.2]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let pop = toy(0.3);
        assert_eq!(pop.sample(100, 42).unwrap(), pop.sample(100, 42).unwrap());
        assert_ne!(pop.sample(100, 42).unwrap(), pop.sample(100, 43).unwrap());
        assert!(pop.sample(0, 1).is_err());
    }

    #[test]
    fn uniform_sample_mean() {
        let uni = ProbabilityModel::uniform(0.0, 1.0).unwrap();
        let xs = uni.sample(100_000, 7).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
    }

    /// Maximum DKW deviation at 99% confidence: sqrt(ln(2/0.01) / (2n)).
    fn dkw_band(n: usize) -> f64 {
        ((2.0f64 / 0.01).ln() / (2.0 * n as f64)).sqrt()
    }

    fn ks_stat(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, x)| {
                let f = cdf(*x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn q_zero_mixture_draws_from_negative() {
        let pop = MixturePopulation::new(
            0.0,
            ProbabilityModel::beta(5.0, 1.5, 0.0, 1.0).unwrap(),
            ProbabilityModel::burr_truncated(2.0, 1.5, 0.15, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let xs = pop.sample(10_000, 3).unwrap();
        // KS critical value at alpha = 0.01: 1.628 / sqrt(n)
        let d = ks_stat(xs, |x| pop.negative().cdf(x).unwrap());
        assert!(d < 1.628 / 100.0, "KS {d}");
    }

    #[test]
    fn ecdf_within_dkw_band() {
        let models = [
            ProbabilityModel::beta(0.7, 2.5, 0.0, 1.0).unwrap(),
            ProbabilityModel::beta(4.0, 1.5, 0.0, 1.0).unwrap(),
            ProbabilityModel::burr_truncated(2.5, 1.2, 0.2, 0.0, 1.0).unwrap(),
            ProbabilityModel::triangular_up(1.0, 3.0).unwrap(),
            ProbabilityModel::triangular_down(0.0, 1.0).unwrap(),
            ProbabilityModel::histogram(&[2.0, 0.0, 1.0, 5.0], 0.0, 1.0).unwrap(),
        ];
        for (i, m) in models.iter().enumerate() {
            let xs = m.sample(100_000, 11 + i as u64).unwrap();
            let d = ks_stat(xs, |x| m.cdf(x).unwrap());
            assert!(d < dkw_band(100_000), "{:?}: {d}", m.family());
        }
        let pop = MixturePopulation::new(0.3, models[1].clone(), models[2].clone()).unwrap();
        let d = ks_stat(pop.sample(100_000, 5).unwrap(), |x| pop.cdf(x).unwrap());
        assert!(d < dkw_band(100_000), "mixture: {d}");
    }

    #[test]
    fn beta_inversion_tolerance() {
        let m = ProbabilityModel::beta(0.6, 3.0, 0.0, 1.0).unwrap();
        for u in [1e-9, 0.001, 0.2, 0.5, 0.9, 0.999999] {
            let r = m.inverse_cdf(u);
            let below = m.cdf(r - 2e-12).unwrap();
            let above = m.cdf(r + 2e-12).unwrap();
            assert!(below <= u + 1e-15 && above >= u - 1e-15, "u={u} r={r}");
        }
    }

    fn arb_model() -> impl Strategy<Value = ProbabilityModel> {
        prop_oneof![
            (1.0f64..8.0, 1.0f64..8.0).prop_map(|(a, b)| ProbabilityModel::beta(a, b, 0.0, 1.0).unwrap()),
            (1.0f64..6.0, 0.3f64..5.0, 0.05f64..2.0)
                .prop_map(|(c, k, s)| ProbabilityModel::burr_truncated(c, k, s, 0.0, 1.0).unwrap()),
            Just(ProbabilityModel::triangular_up(0.0, 1.0).unwrap()),
            Just(ProbabilityModel::triangular_down(0.0, 1.0).unwrap()),
            Just(ProbabilityModel::uniform(0.0, 1.0).unwrap()),
            prop::collection::vec(0.1f64..5.0, 1..10).prop_map(|w| ProbabilityModel::histogram(&w, 0.0, 1.0).unwrap()),
        ]
    }

    fn arb_set() -> impl Strategy<Value = DomainSet> {
        prop::collection::vec((0.0f64..1.0, 0.0f64..0.4), 0..5).prop_map(|v| {
            DomainSet::new(Interval::new(0.0, 1.0), v.into_iter().map(|(a, w)| Interval::new(a, (a + w).min(1.0))))
                .unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn normalization(m in arb_model()) {
            let full = DomainSet::full(Interval::new(0.0, 1.0)).unwrap();
            prop_assert!((measure(&m, &full).unwrap() - 1.0).abs() <= 1e-8);
            prop_assert!((measure_by_quadrature(&m, &full) - 1.0).abs() <= 1e-8);
        }

        #[test]
        fn additivity(m in arb_model(), s in arb_set()) {
            let a = measure(&m, &s).unwrap();
            let b = measure(&m, &s.complement()).unwrap();
            prop_assert!((a + b - 1.0).abs() <= 2e-10);
        }

        #[test]
        fn cdf_monotone(m in arb_model(), xs in prop::collection::vec(0.0f64..1.0, 2..20)) {
            let mut xs = xs;
            xs.sort_by(f64::total_cmp);
            let cdfs: Vec<f64> = xs.iter().map(|x| m.cdf(*x).unwrap()).collect();
            for w in cdfs.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
            prop_assert_eq!(m.cdf(0.0).unwrap(), 0.0);
            prop_assert_eq!(m.cdf(1.0).unwrap(), 1.0);
        }

        #[test]
        fn mixture_linearity(p in arb_model(), n in arb_model(), q in 0.0f64..1.0, seed in any::<u64>()) {
            let pop = MixturePopulation::new(q, p.clone(), n.clone()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..1000 {
                let r: f64 = rng.random();
                let expect = q * p.pdf(r) + (1.0 - q) * n.pdf(r);
                prop_assert!((pop.mixture_pdf(r) - expect).abs() <= 1e-15 * expect.abs().max(1.0));
            }
        }

        #[test]
        fn inverse_cdf_round_trip(m in arb_model(), u in 0.001f64..0.999) {
            let r = m.inverse_cdf(u);
            prop_assert!((m.cdf(r).unwrap() - u).abs() < 1e-9);
        }
    }
}
