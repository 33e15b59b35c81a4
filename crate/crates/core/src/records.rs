//! Record curves: the finite-height surrogate for a limsup.
//!
//! A search hands in at most one candidate per height (the best one in that
//! height bucket); a record is kept whenever its value strictly exceeds
//! every earlier value. Curves over disjoint height ranges merge by
//! interleaving and re-filtering, which is associative, so the result does
//! not depend on how heights were split across workers.

use std::cmp::Ordering;
use std::fmt;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::rational::{serde_q, Q};

/// Exponent value: a float, or the exact infinity produced by a zero
/// residual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Exponent::Finite(x) => x,
            Exponent::Infinite => f64::INFINITY,
        }
    }

    pub fn total_cmp(&self, other: &Exponent) -> Ordering {
        match (self, other) {
            (Exponent::Infinite, Exponent::Infinite) => Ordering::Equal,
            (Exponent::Infinite, _) => Ordering::Greater,
            (_, Exponent::Infinite) => Ordering::Less,
            (Exponent::Finite(a), Exponent::Finite(b)) => a.total_cmp(b),
        }
    }

    pub fn max(self, other: Exponent) -> Exponent {
        if self.total_cmp(&other) == Ordering::Less {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(x) => write!(f, "{x}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(x) => s.serialize_f64(*x),
            Exponent::Infinite => s.serialize_str("inf"),
        }
    }
}

/// One witness competing inside a height bucket.
#[derive(Clone, Debug)]
pub struct Candidate<W> {
    pub height: u64,
    pub value: Exponent,
    /// Sup-norm residual.
    pub residual: Q,
    /// Sum of squared residual entries; separates witnesses whose sup
    /// residuals tie.
    pub residual_sq: Q,
    pub key: Vec<BigInt>,
    pub witness: W,
}

impl<W> Candidate<W> {
    /// Bucket preference: larger value, then smaller residual, then smaller
    /// squared residual, then smaller witness key.
    pub fn better_than(&self, other: &Candidate<W>) -> bool {
        self.value
            .total_cmp(&other.value)
            .reverse()
            .then_with(|| self.residual.cmp(&other.residual))
            .then_with(|| self.residual_sq.cmp(&other.residual_sq))
            .then_with(|| self.key.cmp(&other.key))
            == Ordering::Less
    }
}

/// Keeps the better of two bucket candidates.
pub fn pick_better<W>(a: Option<Candidate<W>>, b: Option<Candidate<W>>) -> Option<Candidate<W>> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => Some(if b.better_than(&a) { b } else { a }),
    }
}

/// `(‖x‖₁, x)` after flipping the sign so the first nonzero entry is
/// positive.
pub fn witness_key(x: &[BigInt]) -> Vec<BigInt> {
    let flip = x.iter().find(|v| !v.is_zero()).is_some_and(|v| v.is_negative());
    let l1 = x.iter().fold(BigInt::zero(), |acc, v| acc + v.abs());
    std::iter::once(l1).chain(x.iter().map(|v| if flip { -v } else { v.clone() })).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Record<W> {
    pub height: u64,
    pub value: Exponent,
    #[serde(with = "serde_q")]
    pub residual: Q,
    pub witness: W,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecordCurve<W> {
    pub records: Vec<Record<W>>,
    /// Every height up to this one has been searched.
    pub exhausted_height: u64,
    /// False when a budget cut the search short.
    pub complete: bool,
}

impl<W: Clone> RecordCurve<W> {
    pub fn empty() -> Self {
        RecordCurve { records: Vec::new(), exhausted_height: 0, complete: true }
    }

    /// Builds a curve from per-height bucket winners listed in increasing
    /// height order.
    pub fn from_buckets(buckets: impl IntoIterator<Item = Option<Candidate<W>>>, exhausted_height: u64) -> Self {
        let mut curve = RecordCurve::empty();
        curve.exhausted_height = exhausted_height;
        for c in buckets.into_iter().flatten() {
            curve.offer(c);
        }
        curve
    }

    /// Appends a candidate whose height is beyond every stored record.
    pub fn offer(&mut self, c: Candidate<W>) {
        debug_assert!(self.records.last().is_none_or(|r| r.height < c.height));
        let beats = match self.records.last() {
            None => true,
            Some(r) => c.value.total_cmp(&r.value) == Ordering::Greater,
        };
        if beats {
            self.records.push(Record { height: c.height, value: c.value, residual: c.residual, witness: c.witness });
        }
    }

    pub fn estimate(&self) -> Option<Exponent> {
        self.records.last().map(|r| r.value)
    }

    /// Best value reached at or below `height`.
    pub fn estimate_at(&self, height: u64) -> Option<Exponent> {
        self.records.iter().take_while(|r| r.height <= height).last().map(|r| r.value)
    }

    /// Interleaves by height and keeps strict records. Ranges are expected
    /// to be disjoint; on a shared height the larger value wins.
    pub fn merge(&self, other: &RecordCurve<W>) -> RecordCurve<W> {
        let mut all: Vec<&Record<W>> = self.records.iter().chain(&other.records).collect();
        all.sort_by(|a, b| a.height.cmp(&b.height).then_with(|| b.value.total_cmp(&a.value)));
        let mut out: Vec<Record<W>> = Vec::new();
        for r in all {
            let beats = out.last().is_none_or(|l: &Record<W>| r.value.total_cmp(&l.value) == Ordering::Greater);
            if beats {
                out.push(r.clone());
            }
        }
        RecordCurve {
            records: out,
            exhausted_height: self.exhausted_height.max(other.exhausted_height),
            complete: self.complete && other.complete,
        }
    }

    pub fn map_witness<V: Clone>(&self, f: impl Fn(&W) -> V) -> RecordCurve<V> {
        RecordCurve {
            records: self
                .records
                .iter()
                .map(|r| Record { height: r.height, value: r.value, residual: r.residual.clone(), witness: f(&r.witness) })
                .collect(),
            exhausted_height: self.exhausted_height,
            complete: self.complete,
        }
    }

    /// `(height, value, residual)` triples, for exact curve comparisons.
    pub fn skeleton(&self) -> Vec<(u64, Exponent, Q)> {
        self.records.iter().map(|r| (r.height, r.value, r.residual.clone())).collect()
    }
}

/// `−ln r / ln h` computed from the reduced fraction of `r`, so equal
/// residuals always give bit-identical values.
pub fn log_ratio(residual: &Q, height: u64) -> Exponent {
    if residual.is_zero() {
        return Exponent::Infinite;
    }
    let v = -crate::rational::ln_abs(residual) / (height as f64).ln();
    Exponent::Finite(v)
}

/// Node and wall-clock limits for a search. Node accounting is done per
/// chunk of heights, so where a search stops does not depend on the number
/// of workers; the deadline is checked between chunks.
#[derive(Clone, Debug, Default)]
pub struct Budget {
    pub max_nodes: Option<u64>,
    pub deadline: Option<Instant>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget::default()
    }

    pub fn nodes(n: u64) -> Self {
        Budget { max_nodes: Some(n), deadline: None }
    }
}

const CHUNK: u64 = 64;

/// Runs `eval` on every height in `start..=end` (in parallel within fixed
/// chunks) and folds the bucket winners into a record curve. `eval` returns
/// the bucket winner and the number of nodes it visited.
pub fn search_heights<W, F>(start: u64, end: u64, budget: &Budget, eval: F) -> RecordCurve<W>
where
    W: Clone + Send,
    F: Fn(u64) -> (Option<Candidate<W>>, u64) + Sync,
{
    let mut curve = RecordCurve::empty();
    curve.exhausted_height = start.saturating_sub(1);
    let mut spent = 0u64;
    let mut lo = start;
    while lo <= end {
        if budget.deadline.is_some_and(|d| Instant::now() >= d) {
            curve.complete = false;
            break;
        }
        let hi = (lo + CHUNK - 1).min(end);
        let results: Vec<(Option<Candidate<W>>, u64)> = (lo..=hi).into_par_iter().map(&eval).collect();
        let cost: u64 = results.iter().map(|r| r.1).sum();
        if budget.max_nodes.is_some_and(|m| spent + cost > m) {
            curve.complete = false;
            break;
        }
        spent += cost;
        for (c, _) in results {
            if let Some(c) = c {
                curve.offer(c);
            }
        }
        curve.exhausted_height = hi;
        lo = hi + 1;
    }
    curve
}
