//! Finite unions of disjoint intervals inside a bounded support.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed bounded interval `[lo, hi]` with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// A sorted union of disjoint intervals of positive width, all inside `support`.
///
/// Constructors canonicalize their input: intervals are sorted, overlapping
/// or touching pieces are merged, and zero-width pieces are dropped. Interval
/// openness is not tracked for measures (every point has zero measure); it
/// only matters for sample counting, see [`DomainSet::contains`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainSpec", into = "DomainSpec")]
pub struct DomainSet {
    support: Interval,
    intervals: Vec<Interval>,
}

/// JSON form: `{"support": [lo, hi], "intervals": [[a, b], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub support: [f64; 2],
    pub intervals: Vec<[f64; 2]>,
}

impl TryFrom<DomainSpec> for DomainSet {
    type Error = Error;

    fn try_from(spec: DomainSpec) -> Result<Self> {
        let support = Interval::new(spec.support[0], spec.support[1]);
        DomainSet::new(support, spec.intervals.iter().map(|iv| Interval::new(iv[0], iv[1])))
    }
}

impl From<DomainSet> for DomainSpec {
    fn from(set: DomainSet) -> Self {
        DomainSpec {
            support: [set.support.lo, set.support.hi],
            intervals: set.intervals.iter().map(|iv| [iv.lo, iv.hi]).collect(),
        }
    }
}

fn check_support(support: Interval) -> Result<()> {
    if !(support.lo.is_finite() && support.hi.is_finite() && support.lo < support.hi) {
        return Err(Error::InvalidDomain(format!(
            "support [{}, {}] must be finite with lo < hi",
            support.lo, support.hi
        )));
    }
    Ok(())
}

impl DomainSet {
    pub fn new<I>(support: Interval, intervals: I) -> Result<Self>
    where
        I: IntoIterator<Item = Interval>,
    {
        check_support(support)?;
        let mut pieces = Vec::new();
        for iv in intervals {
            if !(iv.lo.is_finite() && iv.hi.is_finite()) || iv.hi < iv.lo {
                return Err(Error::InvalidDomain(format!("malformed interval [{}, {}]", iv.lo, iv.hi)));
            }
            if iv.lo < support.lo || iv.hi > support.hi {
                return Err(Error::InvalidDomain(format!(
                    "interval [{}, {}] lies outside support [{}, {}]",
                    iv.lo, iv.hi, support.lo, support.hi
                )));
            }
            if iv.hi > iv.lo {
                pieces.push(iv);
            }
        }
        Ok(Self::canonical(support, pieces))
    }

    /// Builds from pieces already known to be valid; sorts and merges.
    pub(crate) fn canonical(support: Interval, mut pieces: Vec<Interval>) -> Self {
        pieces.retain(|iv| iv.hi > iv.lo);
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(pieces.len());
        for iv in pieces {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => merged.push(iv),
            }
        }
        Self { support, intervals: merged }
    }

    pub fn empty(support: Interval) -> Result<Self> {
        check_support(support)?;
        Ok(Self { support, intervals: Vec::new() })
    }

    pub fn full(support: Interval) -> Result<Self> {
        check_support(support)?;
        Ok(Self { support, intervals: vec![support] })
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Total Lebesgue length.
    pub fn length(&self) -> f64 {
        self.intervals.iter().map(Interval::width).sum()
    }

    /// Membership test used for counting samples.
    ///
    /// Each interval is treated as half-open `[lo, hi)`, except that an
    /// interval ending at the upper support endpoint is closed there.
    pub fn contains(&self, r: f64) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.lo <= r);
        if idx == 0 {
            return false;
        }
        let iv = self.intervals[idx - 1];
        r < iv.hi || (r == iv.hi && iv.hi == self.support.hi)
    }

    /// The complement within the support.
    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.intervals.len() + 1);
        let mut cursor = self.support.lo;
        for iv in &self.intervals {
            if iv.lo > cursor {
                out.push(Interval::new(cursor, iv.lo));
            }
            cursor = iv.hi;
        }
        if cursor < self.support.hi {
            out.push(Interval::new(cursor, self.support.hi));
        }
        Self { support: self.support, intervals: out }
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.same_support(other)?;
        let pieces = self.intervals.iter().chain(other.intervals.iter()).copied().collect();
        Ok(Self::canonical(self.support, pieces))
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.same_support(other)?;
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.intervals.len() && j < other.intervals.len() {
            let a = self.intervals[i];
            let b = other.intervals[j];
            let lo = a.lo.max(b.lo);
            let hi = a.hi.min(b.hi);
            if hi > lo {
                out.push(Interval::new(lo, hi));
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(Self { support: self.support, intervals: out })
    }

    /// Points of `self` not in `other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.intersection(&other.complement())
    }

    fn same_support(&self, other: &Self) -> Result<()> {
        if self.support != other.support {
            return Err(Error::InvalidDomain(format!(
                "support mismatch: [{}, {}] vs [{}, {}]",
                self.support.lo, self.support.hi, other.support.lo, other.support.hi
            )));
        }
        Ok(())
    }
}
