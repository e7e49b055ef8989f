//! Shared generators for property tests.
#![allow(dead_code)]

use ambreal::terms::substitute;
use ambreal::{Clause, Pattern, Tag, Term};
use proptest::prelude::*;

const VARS: [&str; 3] = ["x0", "x1", "x2"];

fn var() -> impl Strategy<Value = String> {
    (0..VARS.len()).prop_map(|i| VARS[i].to_string())
}

/// Clause heads with pairwise distinct outer constructors, so every
/// generated case is compatible.
fn case_of(scrutinee: Term, bodies: Vec<Term>, binders: (String, String)) -> Term {
    let (a, b) = binders;
    let pats = [
        Pattern::Con(Tag::Nil, vec![]),
        Pattern::Con(Tag::Left, vec![Pattern::Var(a.clone())]),
        Pattern::Con(Tag::Right, vec![Pattern::Wild]),
        Pattern::Con(Tag::Pair, vec![Pattern::Var(a.clone()), Pattern::Var(if a == b { "y".into() } else { b })]),
        Pattern::Fun(Some(a)),
    ];
    let clauses = pats
        .into_iter()
        .zip(bodies)
        .map(|(pattern, body)| Clause { pattern, body })
        .collect();
    Term::case(scrutinee, clauses)
}

/// Terms over the free variables `x0`, `x1`, `x2`.
pub fn open_term_strategy() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        var().prop_map(|v| Term::var(&v)),
        Just(Term::nil()),
        Just(Term::Bot),
    ];
    leaf.prop_recursive(6, 96, 4, |inner| {
        prop_oneof![
            inner.clone().prop_map(Term::left),
            inner.clone().prop_map(Term::right),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::pair(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::amb(a, b)),
            (var(), inner.clone()).prop_map(|(x, b)| Term::lam(&x, b)),
            (inner.clone(), inner.clone()).prop_map(|(f, a)| Term::app(f, a)),
            (var(), inner.clone()).prop_map(|(x, b)| Term::rec(Term::lam(&x, b))),
            (inner.clone(), prop::collection::vec(inner, 1..=5), var(), var())
                .prop_map(|(s, bodies, a, b)| case_of(s, bodies, (a, b))),
        ]
    })
}

/// Closed terms: the open generator with remaining free variables replaced
/// by small closed values.
pub fn term_strategy() -> impl Strategy<Value = Term> {
    let closed = || (open_term_strategy(), prop::collection::vec(0..4usize, 3)).prop_map(|(t, picks)| close(&t, &picks));
    prop_oneof![
        closed(),
        (open_term_strategy(), prop::collection::vec(closed(), 3)).prop_map(|(body, args)| {
            let f = VARS.iter().rev().fold(body, |b, v| Term::lam(v, b));
            Term::apps(f, args)
        }),
    ]
}

pub fn close(t: &Term, picks: &[usize]) -> Term {
    let fill = [
        Term::nil(),
        Term::left(Term::nil()),
        Term::lam("z", Term::var("z")),
        Term::Bot,
    ];
    VARS.iter()
        .zip(picks)
        .fold(t.clone(), |acc, (v, &i)| substitute(&acc, v, &fill[i % fill.len()]))
}

pub mod oracle {
    //! Direct formulas, written independently of the library's folds.

    use ambreal::interval::{int, pow2_neg, IntervalSet, Rational};
    use ambreal::real_codec::{GCell, SDigit};
    use num_traits::{Signed, Zero};

    /// `[s - 2^-r, s + 2^-r]` with `s` the weighted digit sum.
    pub fn sd_interval(w: &[SDigit]) -> (Rational, Rational) {
        let s = w
            .iter()
            .enumerate()
            .fold(Rational::zero(), |acc, (i, d)| acc + int(d.value() as i64) * pow2_neg(i + 1));
        let r = pow2_neg(w.len());
        (&s - &r, s + r)
    }

    /// Every resolution of the Bot cells, each as a composition of the
    /// affine maps `g_i(x) = -i(x-1)/2` applied to the endpoints of [-1,1].
    pub fn gray_set(cells: &[GCell]) -> IntervalSet {
        let mut words: Vec<Vec<i64>> = vec![vec![]];
        for c in cells {
            let opts: Vec<i64> = match c.value() {
                Some(v) => vec![v as i64],
                None => vec![-1, 1],
            };
            words = words
                .into_iter()
                .flat_map(|w| opts.iter().map(move |&o| [w.clone(), vec![o]].concat()))
                .collect();
        }
        let g = |i: i64, x: Rational| -> Rational { int(-i) * (x - int(1)) / int(2) };
        IntervalSet::from_intervals(words.into_iter().map(|w| {
            let a = w.iter().rev().fold(int(-1), |x, &i| g(i, x));
            let b = w.iter().rev().fold(int(1), |x, &i| g(i, x));
            if a <= b {
                (a, b)
            } else {
                (b, a)
            }
        }))
    }

    /// Signs of the first `n` tent iterates.
    pub fn tent_signs(x: &Rational, n: usize) -> Vec<GCell> {
        let mut y = x.clone();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(if y.is_negative() {
                GCell::Neg
            } else if y.is_positive() {
                GCell::Pos
            } else {
                GCell::Bot
            });
            y = int(1) - int(2) * y.abs();
        }
        out
    }

    pub fn is_dyadic(x: &Rational) -> bool {
        let d = x.denom();
        (d & (d - num_bigint::BigInt::from(1))).is_zero()
    }
}

/// Random rationals in [-1,1] with denominators up to `2^bits`.
pub fn rationals(bits: u32) -> impl Strategy<Value = ambreal::interval::Rational> {
    let max = 1i64 << bits;
    (1..=max).prop_flat_map(|q| (-q..=q, Just(q))).prop_map(|(p, q)| ambreal::interval::rat(p, q))
}

/// Random dyadic rationals in [-1,1] with denominators up to `2^bits`.
pub fn dyadics(bits: u32) -> impl Strategy<Value = ambreal::interval::Rational> {
    (0..=bits).prop_flat_map(|k| {
        let q = 1i64 << k;
        (-q..=q, Just(q))
    })
    .prop_map(|(p, q)| ambreal::interval::rat(p, q))
}

/// Random nonempty compact sets: one to four closed intervals with endpoints
/// on the grid `p/64`, some of them single points.
pub fn compact_sets() -> impl Strategy<Value = ambreal::interval::IntervalSet> {
    let iv = (-64i64..=64, 0i64..=32, prop::bool::weighted(0.25)).prop_map(|(a, w, point)| {
        let b = if point { a } else { (a + w).min(64) };
        (ambreal::interval::rat(a, 64), ambreal::interval::rat(b, 64))
    });
    prop::collection::vec(iv, 1..=4).prop_map(ambreal::interval::IntervalSet::from_intervals)
}

pub mod set_oracle {
    //! Hausdorff distance as the least radius whose dilations cover both
    //! sets, searched over the finitely many candidate radii.

    use ambreal::interval::{int, IntervalSet, Rational};
    use num_traits::Signed;

    fn dilate(a: &IntervalSet, r: &Rational) -> IntervalSet {
        IntervalSet::from_intervals(a.intervals().iter().map(|(lo, hi)| (lo - r, hi + r)))
    }

    fn endpoints(a: &IntervalSet) -> Vec<Rational> {
        a.intervals().iter().flat_map(|(lo, hi)| [lo.clone(), hi.clone()]).collect()
    }

    pub fn hausdorff(a: &IntervalSet, b: &IntervalSet) -> Rational {
        let mut ends = endpoints(a);
        ends.extend(endpoints(b));
        let mut radii: Vec<Rational> = Vec::new();
        for e in &ends {
            for f in &ends {
                let d = (e - f).abs();
                radii.push(d.clone() / int(2));
                radii.push(d);
            }
        }
        radii.sort();
        radii.dedup();
        radii
            .into_iter()
            .find(|r| dilate(b, r).contains_set(a) && dilate(a, r).contains_set(b))
            .expect("the largest endpoint gap covers both sets")
    }

    /// `t[K ∩ [-1,0]]` for `side < 0`, `t[K ∩ [0,1]]` otherwise.
    pub fn tent_image(k: &IntervalSet, side: i8) -> IntervalSet {
        if side < 0 {
            k.intersect(&IntervalSet::interval(int(-1), int(0))).affine(&int(2), &int(1))
        } else {
            k.intersect(&IntervalSet::interval(int(0), int(1))).affine(&int(-2), &int(1))
        }
    }
}

pub mod stepper {
    use ambreal::step::{det_step, is_whnf};
    use ambreal::{Observation, Term};

    /// The textual stepper with a cap on term size; `None` when the fuel or the
    /// cap runs out.
    pub fn capped_whnf(t: &Term, fuel: u64) -> Option<(Term, u64)> {
        let mut cur = t.clone();
        for used in 0..=fuel {
            if is_whnf(&cur) {
                return Some((cur, used));
            }
            if used == fuel || cur.size() > 20_000 {
                return None;
            }
            cur = det_step(&cur).unwrap();
        }
        None
    }

    /// Whether every defined leaf of `reference` appears unchanged in `got`.
    pub fn defined_leaves_agree(reference: &Observation, got: &Observation) -> bool {
        match (reference, got) {
            (Observation::Unresolved, _) => true,
            (Observation::Con(a, xs), Observation::Con(b, ys)) => {
                a == b && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| defined_leaves_agree(x, y))
            }
            (x, y) => x == y,
        }
    }
}

pub mod realise {
    use ambreal::real_codec::{inject_sd, EPStream, SDigit, Wrap};
    use ambreal::realisers::{gray_cell_of, Prelude};
    use ambreal::{Fuel, Policy, Term};

    /// `k` zeros, then `d`, then zeros.
    pub fn zeros_then(k: usize, d: SDigit) -> EPStream<SDigit> {
        let mut pre = vec![SDigit::Zero; k];
        pre.push(d);
        EPStream::new(pre, vec![SDigit::Zero])
    }

    /// Ticks for `f_d` to produce its sign cell, or `None` if it does not
    /// within `fuel`.
    pub fn f_d_ticks(s: &EPStream<SDigit>, fuel: u64) -> (Option<i8>, u64) {
        let mut e = Prelude::load().unwrap().engine().unwrap();
        let t = Term::app(Term::var("f_d"), inject_sd(s, Wrap::Star));
        let n = e.load(&t).unwrap();
        let mut f = Fuel::new(fuel);
        match e.collapse_star_node(&n, &mut f).unwrap() {
            Some(v) => {
                let o = e.observe_node(&v, 2, fuel, Policy::Resolving);
                (gray_cell_of(&o), f.used())
            }
            None => (None, f.used()),
        }
    }
}
