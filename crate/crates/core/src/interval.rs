//! Finite unions of closed rational intervals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^-k` for `k >= 0`.
pub fn pow2_neg(k: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k)
}

/// A finite, sorted list of pairwise disjoint nonempty closed intervals.
/// Touching intervals are merged.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntervalSet {
    ivs: Vec<(Rational, Rational)>,
}

impl IntervalSet {
    pub fn empty() -> IntervalSet {
        IntervalSet { ivs: Vec::new() }
    }

    /// The unit interval `[-1, 1]`.
    pub fn unit() -> IntervalSet {
        IntervalSet::interval(int(-1), int(1))
    }

    pub fn point(x: Rational) -> IntervalSet {
        IntervalSet::interval(x.clone(), x)
    }

    /// `[lo, hi]`, empty when `lo > hi`.
    pub fn interval(lo: Rational, hi: Rational) -> IntervalSet {
        if lo > hi {
            IntervalSet::empty()
        } else {
            IntervalSet { ivs: vec![(lo, hi)] }
        }
    }

    /// Normalizes an arbitrary list of intervals; pairs with `lo > hi` are dropped.
    pub fn from_intervals(ivs: impl IntoIterator<Item = (Rational, Rational)>) -> IntervalSet {
        let mut v: Vec<_> = ivs.into_iter().filter(|(a, b)| a <= b).collect();
        v.sort();
        let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(v.len());
        for (a, b) in v {
            match out.last_mut() {
                Some((_, hi)) if a <= *hi => {
                    if b > *hi {
                        *hi = b;
                    }
                }
                _ => out.push((a, b)),
            }
        }
        IntervalSet { ivs: out }
    }

    pub fn intervals(&self) -> &[(Rational, Rational)] {
        &self.ivs
    }

    pub fn is_empty(&self) -> bool {
        self.ivs.is_empty()
    }

    pub fn min(&self) -> Option<&Rational> {
        self.ivs.first().map(|(a, _)| a)
    }

    pub fn max(&self) -> Option<&Rational> {
        self.ivs.last().map(|(_, b)| b)
    }

    /// The smallest interval containing the set.
    pub fn hull(&self) -> Option<(Rational, Rational)> {
        Some((self.min()?.clone(), self.max()?.clone()))
    }

    pub fn diameter(&self) -> Option<Rational> {
        self.hull().map(|(a, b)| b - a)
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.ivs.iter().any(|(a, b)| a <= x && x <= b)
    }

    /// Whether every point of `other` lies in `self`.
    pub fn contains_set(&self, other: &IntervalSet) -> bool {
        other.ivs.iter().all(|(a, b)| self.ivs.iter().any(|(c, d)| c <= a && b <= d))
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        IntervalSet::from_intervals(self.ivs.iter().chain(&other.ivs).cloned())
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for (a, b) in &self.ivs {
            for (c, d) in &other.ivs {
                let lo = if a > c { a } else { c };
                let hi = if b < d { b } else { d };
                if lo <= hi {
                    out.push((lo.clone(), hi.clone()));
                }
            }
        }
        IntervalSet::from_intervals(out)
    }

    /// The image under `x ↦ a·x + b`.
    pub fn affine(&self, a: &Rational, b: &Rational) -> IntervalSet {
        IntervalSet::from_intervals(self.ivs.iter().map(|(lo, hi)| {
            let (p, q) = (a * lo + b, a * hi + b);
            if p <= q {
                (p, q)
            } else {
                (q, p)
            }
        }))
    }

    pub fn negate(&self) -> IntervalSet {
        self.affine(&int(-1), &Rational::zero())
    }
}

/// The largest distance from a point of `a` to the set `b`.
fn directed(a: &IntervalSet, b: &IntervalSet) -> Rational {
    let dist = |x: &Rational| -> Rational {
        b.ivs
            .iter()
            .map(|(lo, hi)| {
                if x < lo {
                    lo - x
                } else if x > hi {
                    x - hi
                } else {
                    Rational::zero()
                }
            })
            .min()
            .expect("nonempty")
    };
    let mut cands: Vec<Rational> = a.ivs.iter().flat_map(|(lo, hi)| [lo.clone(), hi.clone()]).collect();
    for w in b.ivs.windows(2) {
        let mid = (&w[0].1 + &w[1].0) / int(2);
        if a.contains(&mid) {
            cands.push(mid);
        }
    }
    cands.iter().map(dist).max().expect("nonempty")
}

/// The exact Hausdorff distance between two nonempty interval unions, or
/// `None` if either is empty.
pub fn hausdorff_sets(a: &IntervalSet, b: &IntervalSet) -> Option<Rational> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    Some(directed(a, b).max(directed(b, a)))
}

/// Formats a rational as `p/q`, or `p` when integral.
pub fn fmt_rational(x: &Rational) -> String {
    x.to_string()
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ivs.is_empty() {
            return write!(f, "{{}}");
        }
        let parts: Vec<String> = self.ivs.iter().map(|(a, b)| format!("[{a},{b}]")).collect();
        write!(f, "{}", parts.join(";"))
    }
}

/// Parses a rational literal `p/q` or `p`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let r = match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Rational::new(p, q)
        }
        None => Rational::from_integer(s.parse().ok()?),
    };
    Some(r)
}

/// Parses `[a,b];[c,d];…`.
pub fn parse_interval_set(s: &str) -> Option<IntervalSet> {
    let mut ivs = Vec::new();
    for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let inner = part.strip_prefix('[')?.strip_suffix(']')?;
        let (a, b) = inner.split_once(',')?;
        let (a, b) = (parse_rational(a)?, parse_rational(b)?);
        if a > b {
            return None;
        }
        ivs.push((a, b));
    }
    Some(IntervalSet::from_intervals(ivs))
}

/// Whether `|x| <= 1`.
pub fn in_unit(x: &Rational) -> bool {
    x.abs() <= Rational::one()
}
