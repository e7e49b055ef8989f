//! Exact signed-digit and Gray-code encodings of rationals in [-1, 1], their
//! prefix-interval oracles, and bridges that inject streams into the engine
//! and extract them back.

use crate::engine::{Engine, EngineError, Fuel, NodeRef, Observation, Policy, ShapeError, Whnf};
use crate::interval::{int, IntervalSet, Rational};
use crate::realisers::{gray_cell_of, gray_cell_term, sd_digit_of, sd_digit_term};
use crate::terms::{Tag, Term};
use num_traits::{Signed, Zero};
use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("value {0} is outside [-1,1]")]
    Domain(Rational),
    #[error("cannot parse `{0}`")]
    Syntax(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// A signed digit, ordered `Neg < Zero < Pos`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SDigit {
    Neg,
    Zero,
    Pos,
}

impl SDigit {
    pub const ALL: [SDigit; 3] = [SDigit::Neg, SDigit::Zero, SDigit::Pos];

    pub fn value(self) -> i8 {
        match self {
            SDigit::Neg => -1,
            SDigit::Zero => 0,
            SDigit::Pos => 1,
        }
    }

    pub fn from_value(v: i8) -> Option<SDigit> {
        match v {
            -1 => Some(SDigit::Neg),
            0 => Some(SDigit::Zero),
            1 => Some(SDigit::Pos),
            _ => None,
        }
    }

    pub fn neg(self) -> SDigit {
        SDigit::from_value(-self.value()).expect("in range")
    }

    pub fn rational(self) -> Rational {
        int(self.value() as i64)
    }
}

impl fmt::Display for SDigit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// A Gray cell: a sign, or the undefined cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GCell {
    Neg,
    Pos,
    Bot,
}

impl GCell {
    pub fn value(self) -> Option<i8> {
        match self {
            GCell::Neg => Some(-1),
            GCell::Pos => Some(1),
            GCell::Bot => None,
        }
    }

    pub fn from_value(v: i8) -> Option<GCell> {
        match v {
            -1 => Some(GCell::Neg),
            1 => Some(GCell::Pos),
            _ => None,
        }
    }
}

impl fmt::Display for GCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{v}"),
            None => write!(f, "_"),
        }
    }
}

/// The eventually periodic sequence `pre · period^ω`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EPStream<T> {
    pub pre: Vec<T>,
    pub period: Vec<T>,
}

impl<T: Clone> EPStream<T> {
    pub fn new(pre: Vec<T>, period: Vec<T>) -> EPStream<T> {
        assert!(!period.is_empty(), "period must be nonempty");
        EPStream { pre, period }
    }

    pub fn get(&self, i: usize) -> T {
        if i < self.pre.len() {
            self.pre[i].clone()
        } else {
            self.period[(i - self.pre.len()) % self.period.len()].clone()
        }
    }

    pub fn prefix(&self, n: usize) -> Vec<T> {
        (0..n).map(|i| self.get(i)).collect()
    }
}

/// Runs a deterministic orbit until a state repeats, splitting the emitted
/// symbols into preperiod and period.
fn orbit<T: Clone>(x: &Rational, step: impl Fn(&Rational) -> (T, Rational)) -> EPStream<T> {
    let mut seen: HashMap<Rational, usize> = HashMap::new();
    let mut out = Vec::new();
    let mut cur = x.clone();
    loop {
        if let Some(&j) = seen.get(&cur) {
            let period = out.split_off(j);
            return EPStream::new(out, period);
        }
        seen.insert(cur.clone(), out.len());
        let (sym, next) = step(&cur);
        out.push(sym);
        cur = next;
    }
}

fn check_unit(x: &Rational) -> Result<(), CodecError> {
    if x.abs() > int(1) {
        Err(CodecError::Domain(x.clone()))
    } else {
        Ok(())
    }
}

/// The tent map `1 - 2|x|`.
pub fn tent(x: &Rational) -> Result<Rational, CodecError> {
    check_unit(x)?;
    Ok(int(1) - int(2) * x.abs())
}

fn sd_step(y: &Rational) -> (SDigit, Rational) {
    let quarter = Rational::new(1.into(), 4.into());
    let d = if *y <= -quarter.clone() {
        SDigit::Neg
    } else if *y >= quarter {
        SDigit::Pos
    } else {
        SDigit::Zero
    };
    (d, int(2) * y - d.rational())
}

fn gray_step(y: &Rational) -> (GCell, Rational) {
    let c = if y.is_negative() {
        GCell::Neg
    } else if y.is_positive() {
        GCell::Pos
    } else {
        GCell::Bot
    };
    (c, int(1) - int(2) * y.abs())
}

/// The first `n` symbols of an orbit.
fn orbit_prefix<T>(x: &Rational, n: usize, step: impl Fn(&Rational) -> (T, Rational)) -> Vec<T> {
    let mut cur = x.clone();
    (0..n)
        .map(|_| {
            let (sym, next) = step(&cur);
            cur = next;
            sym
        })
        .collect()
}

/// The canonical signed-digit stream of `x`.
pub fn sd_encode_stream(x: &Rational) -> Result<EPStream<SDigit>, CodecError> {
    check_unit(x)?;
    Ok(orbit(x, sd_step))
}

/// The first `n` canonical signed digits of `x`.
pub fn sd_encode(x: &Rational, n: usize) -> Result<Vec<SDigit>, CodecError> {
    check_unit(x)?;
    Ok(orbit_prefix(x, n, sd_step))
}

/// The Gray code of `x`: cell `i` is the sign of the `i`-th tent iterate.
pub fn gray_encode_stream(x: &Rational) -> Result<EPStream<GCell>, CodecError> {
    check_unit(x)?;
    Ok(orbit(x, gray_step))
}

/// The first `n` Gray cells of `x`.
pub fn gray_encode(x: &Rational, n: usize) -> Result<Vec<GCell>, CodecError> {
    check_unit(x)?;
    Ok(orbit_prefix(x, n, gray_step))
}

/// The interval of reals whose signed-digit expansions begin with `w`.
pub fn sd_prefix_interval(w: &[SDigit]) -> IntervalSet {
    let half = Rational::new(1.into(), 2.into());
    w.iter()
        .rev()
        .fold(IntervalSet::unit(), |s, d| s.affine(&half, &(d.rational() * &half)))
}

/// The set of reals whose Gray codes match `cells`, with a Bot cell standing
/// for either sign.
pub fn gray_prefix_set(cells: &[GCell]) -> IntervalSet {
    let half = Rational::new(1.into(), 2.into());
    let g_neg = |s: &IntervalSet| s.affine(&half, &-half.clone());
    let g_pos = |s: &IntervalSet| s.affine(&-half.clone(), &half);
    cells.iter().rev().fold(IntervalSet::unit(), |s, c| match c {
        GCell::Neg => g_neg(&s),
        GCell::Pos => g_pos(&s),
        GCell::Bot => g_neg(&s).union(&g_pos(&s)),
    })
}

/// Midpoint and radius of the hull of a nonempty set.
pub fn approx(set: &IntervalSet) -> (Rational, Rational) {
    let (a, b) = set.hull().expect("nonempty set");
    let two = int(2);
    ((&a + &b) / &two, (b - a) / two)
}

pub fn approx_sd(w: &[SDigit]) -> (Rational, Rational) {
    approx(&sd_prefix_interval(w))
}

pub fn approx_gray(w: &[GCell]) -> (Rational, Rational) {
    approx(&gray_prefix_set(w))
}

/// How a stream's layers are wrapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wrap {
    /// Plain values.
    Plain,
    /// Values of the iterated concurrency modality, `Amb(Left(v), bot)`.
    Star,
}

fn ret(t: Term) -> Term {
    Term::amb(Term::left(t), Term::Bot)
}

/// A term for `pre · period^ω`, where `layer(cell, rest)` builds one layer.
fn inject_spine<T: Clone>(s: &EPStream<T>, layer: impl Fn(&T, Term) -> Term) -> Term {
    let body = s.period.iter().rev().fold(Term::var("z"), |rest, c| layer(c, rest));
    let cycle = Term::rec(Term::lam("z", body));
    s.pre.iter().rev().fold(cycle, |rest, c| layer(c, rest))
}

/// A term for a signed-digit stream.
pub fn inject_sd(s: &EPStream<SDigit>, wrap: Wrap) -> Term {
    inject_spine(s, |d, rest| {
        let p = Term::pair(sd_digit_term(d.value()), rest);
        match wrap {
            Wrap::Plain => p,
            Wrap::Star => ret(p),
        }
    })
}

/// A term for a Gray stream.
pub fn inject_gray(s: &EPStream<GCell>, wrap: Wrap) -> Term {
    inject_spine(s, |c, rest| {
        let cell = match (c.value(), wrap) {
            (Some(v), Wrap::Plain) => gray_cell_term(v),
            (Some(v), Wrap::Star) => ret(gray_cell_term(v)),
            (None, Wrap::Plain) => Term::Bot,
            (None, Wrap::Star) => Term::amb(Term::Bot, Term::Bot),
        };
        Term::pair(cell, rest)
    })
}

fn pair_kids(d: &NodeRef) -> Result<[NodeRef; 2], ShapeError> {
    match d.head() {
        Some(Whnf::Con(Tag::Pair, kids)) => Ok([kids[0].clone(), kids[1].clone()]),
        other => Err(ShapeError(format!("expected Pair, found {other:?}"))),
    }
}

/// Reads `n` digits of a signed-digit stream from a loaded node; `None`
/// marks a digit that did not resolve within its fuel. Digits after an
/// unresolved one are unreachable and also `None`.
pub fn extract_sd_node(
    e: &mut Engine,
    node: &NodeRef,
    n: usize,
    fuel: u64,
    wrap: Wrap,
) -> Result<Vec<Option<SDigit>>, ShapeError> {
    let mut out = Vec::with_capacity(n);
    let mut cur = Some(node.clone());
    for _ in 0..n {
        let Some(c) = cur.take() else {
            out.push(None);
            continue;
        };
        let mut f = Fuel::new(fuel);
        let layer = match wrap {
            Wrap::Plain => e.resolve_node(&c, &mut f),
            Wrap::Star => e.collapse_star_node(&c, &mut f)?,
        };
        let Some(layer) = layer else {
            out.push(None);
            continue;
        };
        let [d, rest] = pair_kids(&layer)?;
        let obs = e.observe_node(&d, 2, fuel, Policy::Resolving);
        match obs {
            Observation::Unresolved => out.push(None),
            o => {
                let v = sd_digit_of(&o).ok_or_else(|| ShapeError(format!("not a signed digit: {o}")))?;
                out.push(SDigit::from_value(v));
                cur = Some(rest);
            }
        }
    }
    Ok(out)
}

pub fn extract_sd(e: &mut Engine, t: &Term, n: usize, fuel: u64, wrap: Wrap) -> Result<Vec<Option<SDigit>>, ExtractError> {
    let node = e.load(t)?;
    Ok(extract_sd_node(e, &node, n, fuel, wrap)?)
}

/// Reads `n` cells of a Gray stream with iterated-concurrency cells. Each
/// spine node and each cell gets its own fuel; `None` marks a cell that did
/// not resolve.
pub fn extract_gray_node(e: &mut Engine, node: &NodeRef, n: usize, fuel: u64) -> Result<Vec<Option<GCell>>, ShapeError> {
    let mut out = Vec::with_capacity(n);
    let mut cur = Some(node.clone());
    for _ in 0..n {
        let Some(c) = cur.take() else {
            out.push(None);
            continue;
        };
        let Some(spine) = e.resolve_node(&c, &mut Fuel::new(fuel)) else {
            out.push(None);
            continue;
        };
        let [cell, rest] = pair_kids(&spine)?;
        cur = Some(rest);
        let Some(v) = e.collapse_star_node(&cell, &mut Fuel::new(fuel))? else {
            out.push(None);
            continue;
        };
        match e.observe_node(&v, 1, fuel, Policy::Resolving) {
            Observation::Unresolved => out.push(None),
            o => {
                let c = gray_cell_of(&o).ok_or_else(|| ShapeError(format!("not a Gray cell: {o}")))?;
                out.push(GCell::from_value(c));
            }
        }
    }
    Ok(out)
}

pub fn extract_gray(e: &mut Engine, t: &Term, n: usize, fuel: u64) -> Result<Vec<Option<GCell>>, ExtractError> {
    let node = e.load(t)?;
    Ok(extract_gray_node(e, &node, n, fuel)?)
}

/// Renders cells separated by spaces, with `?` for unresolved ones.
pub fn render_cells<T: fmt::Display>(cells: &[Option<T>]) -> String {
    cells
        .iter()
        .map(|c| c.as_ref().map_or("?".to_string(), |v| v.to_string()))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn render_digits<T: fmt::Display>(cells: &[T]) -> String {
    cells.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_list<T>(s: &str, one: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, CodecError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| one(p).ok_or_else(|| CodecError::Syntax(p.to_string())))
        .collect()
}

/// Parses comma-separated signed digits.
pub fn parse_sd_list(s: &str) -> Result<Vec<SDigit>, CodecError> {
    parse_list(s, |p| p.parse::<i8>().ok().and_then(SDigit::from_value))
}

/// Parses comma-separated Gray cells, `_` for Bot.
pub fn parse_gray_list(s: &str) -> Result<Vec<GCell>, CodecError> {
    parse_list(s, |p| if p == "_" { Some(GCell::Bot) } else { p.parse::<i8>().ok().and_then(GCell::from_value) })
}

/// Parses a stream literal `pre;period`.
pub fn parse_stream<T: Clone>(
    s: &str,
    list: impl Fn(&str) -> Result<Vec<T>, CodecError>,
) -> Result<EPStream<T>, CodecError> {
    let (pre, period) = s.split_once(';').ok_or_else(|| CodecError::Syntax(s.to_string()))?;
    let (pre, period) = (list(pre)?, list(period)?);
    if period.is_empty() {
        return Err(CodecError::Syntax(s.to_string()));
    }
    Ok(EPStream::new(pre, period))
}

/// The value denoted by a signed-digit stream.
pub fn sd_value(s: &EPStream<SDigit>) -> Rational {
    let digits_value = |w: &[SDigit]| -> Rational {
        w.iter().rev().fold(Rational::zero(), |acc, d| (acc + d.rational()) / int(2))
    };
    // The period block p of length L satisfies y = v(p) + 2^-L y.
    let l = s.period.len();
    let scale = Rational::new(1.into(), num_bigint::BigInt::from(1u8) << l);
    let y = digits_value(&s.period) / (int(1) - scale);
    let shift = Rational::new(1.into(), num_bigint::BigInt::from(1u8) << s.pre.len());
    digits_value(&s.pre) + shift * y
}
