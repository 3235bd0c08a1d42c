//! Optimal measurement domains by level-set filling of the bathtub function
//! `q [P(r) - N(r)] / N(r)`.
//!
//! For a level `delta`, the plus-branch set is `{r : q [P - N] > delta N}` and
//! the minus-branch set is `{r : q [P - N] < delta N}`. The Q-measure of the
//! plus set is nonincreasing in `delta` and that of the minus set is
//! nondecreasing, so a target measure `q_hat` pins down the level by
//! bisection. Where the ratio is flat on a set of positive measure the
//! measure curve jumps; the solver then adds the left-most part of the flat
//! region (the tie set) needed to hit `q_hat` exactly.

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::dist::{Density, MixturePopulation};
use crate::domain::{DomainSet, Interval};
use crate::error::{Error, Result};

pub const DEFAULT_SCAN_NODES: usize = 4096;
/// Width to which set boundaries are refined.
pub const CROSSING_TOL: f64 = 1e-12;
/// Target accuracy of the Q-measure of a solved set.
pub const MEASURE_TOL: f64 = 1e-10;

const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn name(&self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }

    pub fn flip(&self) -> Branch {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(Branch::Plus),
            "minus" | "-" => Ok(Branch::Minus),
            other => Err(Error::InvalidArgument(format!("unknown branch '{other}'"))),
        }
    }
}

/// JSON has no infinity; an unbounded level is written as the string "inf".
fn serialize_level<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BathtubSolution {
    pub branch: Branch,
    #[serde(serialize_with = "serialize_level")]
    pub delta: f64,
    pub set: DomainSet,
    /// The target measure `q_hat`.
    pub q_measure: f64,
    pub p_measure: f64,
    pub n_measure: f64,
    pub plateau_adjusted: bool,
}

impl BathtubSolution {
    /// `P_D - N_D`; positive on the plus branch, negative on the minus branch.
    pub fn difference(&self) -> f64 {
        self.p_measure - self.n_measure
    }
}

/// `q (P - N) / N`, with `+inf` where only `N` vanishes and `0` where both do.
pub fn bathtub_ratio(pop: &MixturePopulation, r: f64) -> f64 {
    let p = pop.positive().pdf(r);
    let n = pop.negative().pdf(r);
    if n == 0.0 {
        return if p > 0.0 { f64::INFINITY } else { 0.0 };
    }
    if p.is_infinite() {
        return if n.is_infinite() { f64::NAN } else { f64::INFINITY };
    }
    if n.is_infinite() {
        return -pop.q();
    }
    pop.q() * (p - n) / n
}

pub fn super_level_set(pop: &MixturePopulation, delta: f64, branch: Branch) -> DomainSet {
    Bathtub::new(pop.clone()).super_level_set(delta, branch)
}

pub fn level_measure_curve(pop: &MixturePopulation, delta: f64, branch: Branch) -> f64 {
    Bathtub::new(pop.clone()).level_measure(delta, branch)
}

pub fn solve_delta(pop: &MixturePopulation, q_hat: f64, branch: Branch) -> Result<BathtubSolution> {
    Bathtub::new(pop.clone()).solve(q_hat, branch)
}

/// Bathtub solver for one population, caching both densities on the scan grid.
#[derive(Debug, Clone)]
pub struct Bathtub {
    pop: MixturePopulation,
    support: Interval,
    nodes: Vec<f64>,
    dens: Vec<(f64, f64)>,
}

impl Bathtub {
    pub fn new(pop: MixturePopulation) -> Self {
        Self::with_nodes(pop, DEFAULT_SCAN_NODES)
    }

    /// `scan_nodes` equally spaced nodes including both support endpoints.
    pub fn with_nodes(pop: MixturePopulation, scan_nodes: usize) -> Self {
        let scan_nodes = scan_nodes.max(2);
        let support = pop.support();
        let h = (support.hi - support.lo) / (scan_nodes - 1) as f64;
        let nodes: Vec<f64> =
            (0..scan_nodes).map(|i| if i + 1 == scan_nodes { support.hi } else { support.lo + h * i as f64 }).collect();
        let mut bt = Self { pop, support, nodes, dens: Vec::new() };
        bt.dens = bt.nodes.iter().map(|r| bt.densities(*r)).collect();
        bt
    }

    pub fn population(&self) -> &MixturePopulation {
        &self.pop
    }

    pub fn scan_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// `(P(r), N(r))` scaled so that both are finite. Only the direction of
    /// the pair matters to the set predicates.
    fn densities(&self, r: f64) -> (f64, f64) {
        let mut r = r;
        let nudge = 1e-9 * (self.support.hi - self.support.lo);
        for _ in 0..4 {
            let p = self.pop.positive().pdf(r);
            let n = self.pop.negative().pdf(r);
            match (p.is_finite(), n.is_finite()) {
                (true, true) => return (p, n),
                (false, true) => return (1.0, 0.0),
                (true, false) => return (0.0, 1.0),
                (false, false) => {
                    // both singular at an endpoint; step inward
                    r = if r - self.support.lo < self.support.hi - r { r + nudge } else { r - nudge };
                }
            }
        }
        (0.0, 0.0)
    }

    fn inside(&self, (p, n): (f64, f64), delta: f64, branch: Branch) -> bool {
        let q = self.pop.q();
        match branch {
            Branch::Plus => {
                if delta == f64::INFINITY {
                    n == 0.0 && p > 0.0
                } else {
                    q * (p - n) > delta * n
                }
            }
            Branch::Minus => {
                if delta == f64::INFINITY {
                    n > 0.0
                } else {
                    q * (p - n) < delta * n
                }
            }
        }
    }

    /// Boundary of the predicate between `a` (where it equals `state`) and
    /// `b` (where it does not), refined by bisection.
    fn refine(&self, mut a: f64, mut b: f64, state: bool, delta: f64, branch: Branch) -> f64 {
        for _ in 0..200 {
            if (b - a).abs() <= CROSSING_TOL {
                break;
            }
            let mid = 0.5 * (a + b);
            if mid == a || mid == b {
                break;
            }
            if self.inside(self.densities(mid), delta, branch) == state {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }

    /// Strict level set of the branch inequality at `delta`.
    pub fn super_level_set(&self, delta: f64, branch: Branch) -> DomainSet {
        let flags: Vec<bool> = self.dens.iter().map(|d| self.inside(*d, delta, branch)).collect();
        let mut pieces = Vec::new();
        let mut start = if flags[0] { Some(self.support.lo) } else { None };
        for i in 0..flags.len() - 1 {
            if flags[i] == flags[i + 1] {
                continue;
            }
            let edge = self.refine(self.nodes[i], self.nodes[i + 1], flags[i], delta, branch);
            match start.take() {
                Some(s) => pieces.push(Interval::new(s, edge)),
                None => start = Some(edge),
            }
        }
        if let Some(s) = start {
            pieces.push(Interval::new(s, self.support.hi));
        }
        DomainSet::canonical(self.support, pieces)
    }

    fn q_measure(&self, set: &DomainSet) -> f64 {
        // the set shares the population support, so this cannot fail
        self.pop.measures(set).map(|m| m.2).unwrap_or(f64::NAN)
    }

    /// Q-measure of the branch set at `delta`.
    pub fn level_measure(&self, delta: f64, branch: Branch) -> f64 {
        self.q_measure(&self.super_level_set(delta, branch))
    }

    fn finish(&self, branch: Branch, delta: f64, set: DomainSet, q_hat: f64, plateau: bool) -> Result<BathtubSolution> {
        let (p, n, _) = self.pop.measures(&set)?;
        Ok(BathtubSolution {
            branch,
            delta,
            set,
            q_measure: q_hat,
            p_measure: p,
            n_measure: n,
            plateau_adjusted: plateau,
        })
    }

    /// Finds the level whose branch set has Q-measure `q_hat`.
    pub fn solve(&self, q_hat: f64, branch: Branch) -> Result<BathtubSolution> {
        if !(q_hat > 0.0 && q_hat < 1.0) {
            return Err(Error::InvalidArgument(format!("target measure must lie in (0, 1), got {q_hat}")));
        }
        // Orient so that `curve` is nonincreasing in the level on both branches.
        let sign = match branch {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        };
        let curve = |d: f64| sign * self.level_measure(d, branch);
        let target = sign * q_hat;

        // Below -q every point with positive density is in the plus set and
        // none is in the minus set.
        let bottom = -self.pop.q() - 1.0;
        let at_bottom = curve(bottom);
        let at_top = curve(f64::INFINITY);
        let (reach_lo, reach_hi) = match branch {
            Branch::Plus => (at_top, at_bottom),
            Branch::Minus => (-at_bottom, -at_top),
        };
        if q_hat < reach_lo - MEASURE_TOL || q_hat > reach_hi + MEASURE_TOL {
            return Err(Error::Unreachable { target: q_hat, branch: branch.name(), min: reach_lo, max: reach_hi });
        }
        if (at_top - target).abs() <= MEASURE_TOL {
            return self.finish(branch, f64::INFINITY, self.super_level_set(f64::INFINITY, branch), q_hat, false);
        }

        // Bracket: curve(lo) > target > curve(hi).
        let mut lo = bottom;
        let mut hi = 1.0;
        loop {
            let c = curve(hi);
            if (c - target).abs() <= MEASURE_TOL {
                return self.finish(branch, hi, self.super_level_set(hi, branch), q_hat, false);
            }
            if c < target {
                break;
            }
            lo = hi;
            hi = if hi < 1e300 { hi * 2.0 } else { f64::INFINITY };
            if hi.is_infinite() {
                break;
            }
        }

        if hi.is_finite() {
            for _ in 0..MAX_BISECTIONS {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let c = curve(mid);
                if (c - target).abs() <= MEASURE_TOL {
                    return self.finish(branch, mid, self.super_level_set(mid, branch), q_hat, false);
                }
                if c > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * lo.abs().max(hi.abs()).max(1.0) {
                    break;
                }
            }
        }

        // The curve jumps across the target: fill the flat region.
        let (smaller, larger, level) = match branch {
            Branch::Plus => (self.super_level_set(hi, branch), self.super_level_set(lo, branch), hi),
            Branch::Minus => (self.super_level_set(lo, branch), self.super_level_set(hi, branch), lo),
        };
        let tie = larger.difference(&smaller)?;
        let need = q_hat - self.q_measure(&smaller);
        let fill = self.leftmost_portion(&tie, need);
        let set = smaller.union(&fill)?;
        self.finish(branch, level, set, q_hat, true)
    }

    /// Left-most subset of `region` with Q-measure `need`.
    fn leftmost_portion(&self, region: &DomainSet, need: f64) -> DomainSet {
        let mut need = need.max(0.0);
        let mut pieces = Vec::new();
        let cdf = |r: f64| self.pop.cdf(r).unwrap_or(f64::NAN);
        for iv in region.intervals() {
            if need <= 0.0 {
                break;
            }
            let base = cdf(iv.lo);
            let mass = cdf(iv.hi) - base;
            if mass <= need {
                pieces.push(*iv);
                need -= mass;
                continue;
            }
            let (mut a, mut b) = (iv.lo, iv.hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if cdf(mid) - base < need {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            pieces.push(Interval::new(iv.lo, 0.5 * (a + b)));
            break;
        }
        DomainSet::canonical(self.support, pieces)
    }

    /// Largest change in `P_D` or `N_D` when the scan resolution is doubled.
    pub fn resolution_check(&self, q_hat: f64, branch: Branch) -> Result<f64> {
        let base = self.solve(q_hat, branch)?;
        let fine = Bathtub::with_nodes(self.pop.clone(), 2 * self.nodes.len()).solve(q_hat, branch)?;
        Ok((base.p_measure - fine.p_measure).abs().max((base.n_measure - fine.n_measure).abs()))
    }
}
