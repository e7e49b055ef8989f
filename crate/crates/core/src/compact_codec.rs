//! Nonempty compact subsets of [-1, 1] given as finite interval unions, and
//! their digital trees in signed-digit and Gray form.
//!
//! Trees are finite truncations shared as DAGs. A signed-digit tree of depth
//! `t` has a digit set at every node on levels `0..=t`; nodes on level `t`
//! have no children. A Gray tree of depth `t` has nodes on levels `0..=t`,
//! and child slots are known on levels `0..t`.

use crate::interval::{int, IntervalSet, Rational};
use crate::real_codec::{gray_encode_stream, render_cells, EPStream, GCell, SDigit};
use num_traits::{One, Zero};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::rc::Rc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompactError {
    #[error("the compact set is empty")]
    Empty,
    #[error("tree truncated before the requested depth")]
    DepthExceeded,
    #[error("no digit set could be selected at a node")]
    Unresolved,
    #[error("tree is inconsistent with its annotations: {0}")]
    Inconsistent(&'static str),
}

/// `K ∩ [-1,0]`, `K ∩ [-1/2,1/2]` or `K ∩ [0,1]`.
pub fn restrict(k: &IntervalSet, d: SDigit) -> IntervalSet {
    let half = Rational::new(1.into(), 2.into());
    let (lo, hi) = match d {
        SDigit::Neg => (int(-1), int(0)),
        SDigit::Zero => (-half.clone(), half),
        SDigit::Pos => (int(0), int(1)),
    };
    k.intersect(&IntervalSet::interval(lo, hi))
}

/// The image of `K_d` under `y ↦ 2y - d`.
pub fn sd_child_set(k: &IntervalSet, d: SDigit) -> IntervalSet {
    restrict(k, d).affine(&int(2), &-d.rational())
}

/// The image of `K ∩ [-1,0]` (for `Neg`) or `K ∩ [0,1]` (for `Pos`) under the
/// tent map.
pub fn gray_child_set(k: &IntervalSet, side: GCell) -> IntervalSet {
    match side {
        GCell::Neg => restrict(k, SDigit::Neg).affine(&int(2), &int(1)),
        GCell::Pos => restrict(k, SDigit::Pos).affine(&int(-2), &int(1)),
        GCell::Bot => panic!("a Gray child side is a sign"),
    }
}

// ---------------------------------------------------------------------------
// Signed-digit trees

/// A truncated signed-digit tree.
#[derive(Clone)]
pub struct SdTree(Rc<SdNode>);

struct SdNode {
    digits: Vec<SDigit>,
    kids: Vec<SdTree>,
    depth: usize,
}

impl SdTree {
    /// A node with the given digit set and, unless it is a leaf, one child
    /// per digit in ascending digit order.
    pub fn new(mut digits: Vec<SDigit>, kids: Vec<SdTree>) -> SdTree {
        let mut pairs: Vec<(SDigit, Option<SdTree>)> = if kids.is_empty() {
            digits.iter().map(|d| (*d, None)).collect()
        } else {
            assert_eq!(digits.len(), kids.len(), "one child per digit");
            digits.iter().copied().zip(kids.into_iter().map(Some)).collect()
        };
        pairs.sort_by_key(|p| p.0);
        pairs.dedup_by_key(|p| p.0);
        assert!(!pairs.is_empty(), "digit sets are nonempty");
        digits = pairs.iter().map(|p| p.0).collect();
        let kids: Vec<SdTree> = pairs.into_iter().filter_map(|p| p.1).collect();
        let depth = kids.iter().map(|k| k.depth() + 1).min().unwrap_or(0);
        SdTree(Rc::new(SdNode { digits, kids, depth }))
    }

    pub fn leaf(digits: Vec<SDigit>) -> SdTree {
        SdTree::new(digits, Vec::new())
    }

    pub fn digits(&self) -> &[SDigit] {
        &self.0.digits
    }

    /// The truncation depth: the length of the shortest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.0.depth
    }

    pub fn is_leaf(&self) -> bool {
        self.0.kids.is_empty()
    }

    pub fn child(&self, d: SDigit) -> Option<&SdTree> {
        let i = self.0.digits.iter().position(|e| *e == d)?;
        self.0.kids.get(i)
    }

    pub fn children(&self) -> impl Iterator<Item = (SDigit, &SdTree)> {
        self.0.digits.iter().copied().zip(self.0.kids.iter())
    }

    fn key(&self) -> usize {
        Rc::as_ptr(&self.0) as usize
    }

    pub fn ptr_eq(&self, other: &SdTree) -> bool {
        Rc::ptr_eq(&self.0, &other.0)
    }

    /// Renders the tree as `(E=-1,0,1 (child -1 …) …)`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        self.dump_into(&mut s);
        s
    }

    fn dump_into(&self, s: &mut String) {
        let ds: Vec<String> = self.digits().iter().map(|d| d.to_string()).collect();
        write!(s, "(E={}", ds.join(",")).unwrap();
        for (d, k) in self.children() {
            write!(s, " (child {d} ").unwrap();
            k.dump_into(s);
            s.push(')');
        }
        s.push(')');
    }
}

impl std::fmt::Debug for SdTree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.dump())
    }
}

/// The signed-digit tree of `K` to depth `n`, with the maximal digit set
/// `{d : K_d ≠ ∅}` at every node.
pub fn sdk_truncate(k: &IntervalSet, n: usize) -> Result<SdTree, CompactError> {
    if k.is_empty() {
        return Err(CompactError::Empty);
    }
    let mut memo = HashMap::new();
    Ok(sdk_build(k, n, &mut memo))
}

fn sdk_build(k: &IntervalSet, n: usize, memo: &mut HashMap<(IntervalSet, usize), SdTree>) -> SdTree {
    if let Some(t) = memo.get(&(k.clone(), n)) {
        return t.clone();
    }
    let digits: Vec<SDigit> = SDigit::ALL.into_iter().filter(|d| !restrict(k, *d).is_empty()).collect();
    let kids = if n == 0 {
        Vec::new()
    } else {
        digits.iter().map(|d| sdk_build(&sd_child_set(k, *d), n - 1, memo)).collect()
    };
    let t = SdTree::new(digits, kids);
    memo.insert((k.clone(), n), t.clone());
    t
}

/// Shared memo tables for the syntactic tree transformations.
#[derive(Default)]
pub struct TreeOps {
    negated: HashMap<usize, (SdTree, SdTree)>,
    tent: HashMap<(usize, SDigit), (SdTree, SdTree)>,
    to_gray: HashMap<usize, (SdTree, GrayTree)>,
    gray_neg: HashMap<usize, (GrayTree, GrayTree)>,
    gray_mid: HashMap<usize, (GrayTree, GrayTree)>,
    to_sd: HashMap<(usize, usize), (GrayTree, SdTree)>,
    constant_one: HashMap<usize, SdTree>,
}

impl TreeOps {
    pub fn new() -> TreeOps {
        TreeOps::default()
    }

    /// The tree of `-K`: digits negated, children exchanged accordingly.
    pub fn sdk_negate(&mut self, t: &SdTree) -> SdTree {
        if let Some((_, r)) = self.negated.get(&t.key()) {
            return r.clone();
        }
        let digits = t.digits().iter().map(|d| d.neg()).collect();
        let kids = t.0.kids.iter().map(|k| self.sdk_negate(k)).collect();
        let r = SdTree::new(digits, kids);
        self.negated.insert(t.key(), (t.clone(), r.clone()));
        r
    }

    /// The constant tree of `{1}` to depth `n`.
    fn constant_one(&mut self, n: usize) -> SdTree {
        if let Some(t) = self.constant_one.get(&n) {
            return t.clone();
        }
        let kids = if n == 0 { Vec::new() } else { vec![self.constant_one(n - 1)] };
        let t = SdTree::new(vec![SDigit::Pos], kids);
        self.constant_one.insert(n, t.clone());
        t
    }

    /// A tree for `t[K_d]` computed from the tree of `K` by case analysis on
    /// the root digit set. The result is one level shallower than the input;
    /// `None` for a leaf.
    pub fn sdk_tent_child(&mut self, t: &SdTree, d: SDigit) -> Option<SdTree> {
        assert!(d != SDigit::Zero, "tent children exist for the signs only");
        if t.is_leaf() {
            return None;
        }
        if let Some((_, r)) = self.tent.get(&(t.key(), d)) {
            return Some(r.clone());
        }
        let f = t.digits();
        let r = if f.contains(&d) {
            let c = t.child(d).expect("inner node").clone();
            if d == SDigit::Neg {
                c
            } else {
                self.sdk_negate(&c)
            }
        } else if f.contains(&SDigit::Zero) {
            let c = t.child(SDigit::Zero).expect("inner node").clone();
            match self.sdk_tent_child(&c, d) {
                Some(k) => SdTree::new(vec![SDigit::Pos], vec![k]),
                None => SdTree::leaf(vec![SDigit::Pos]),
            }
        } else {
            self.constant_one(t.depth() - 1)
        };
        self.tent.insert((t.key(), d), (t.clone(), r.clone()));
        Some(r)
    }

    /// Converts a signed-digit tree into a Gray tree of the same set. The
    /// min and max codes come from the point conversion applied to the
    /// least and greatest paths.
    pub fn sdk_to_grayk(&mut self, t: &SdTree) -> GrayTree {
        if let Some((_, g)) = self.to_gray.get(&t.key()) {
            return g.clone();
        }
        let lo = sdk_min_prefix(t);
        let hi = sdk_max_prefix(self, t);
        let kids = if t.is_leaf() {
            None
        } else {
            let neg_present = t.digits().contains(&SDigit::Neg) || first_nonzero(&lo) != Some(SDigit::Pos);
            let pos_present = t.digits().contains(&SDigit::Pos) || first_nonzero(&hi) != Some(SDigit::Neg);
            let mut side = |present: bool, d: SDigit| -> Option<GrayTree> {
                if !present {
                    return None;
                }
                let c = self.sdk_tent_child(t, d).expect("inner node");
                Some(self.sdk_to_grayk(&c))
            };
            let l = side(neg_present, SDigit::Neg);
            let r = side(pos_present, SDigit::Pos);
            Some([l, r])
        };
        let g = GrayTree::new(GrayCode::cells(sd2gray_prefix(&lo)), GrayCode::cells(sd2gray_prefix(&hi)), kids);
        self.to_gray.insert(t.key(), (t.clone(), g.clone()));
        g
    }

    /// The Gray tree of `-K`: codes negated and exchanged, children
    /// exchanged.
    pub fn gray_negate(&mut self, g: &GrayTree) -> GrayTree {
        if let Some((_, r)) = self.gray_neg.get(&g.key()) {
            return r.clone();
        }
        let kids = g.0.kids.as_ref().map(|[l, r]| [r.clone(), l.clone()]);
        let r = GrayTree::new(g.max().negate(), g.min().negate(), kids);
        self.gray_neg.insert(g.key(), (g.clone(), r.clone()));
        r
    }

    /// The Gray tree of `2·K_0`, assembled from the right children of the
    /// two children of the tree of `K`: with `h(y) = (1+y)/2`,
    /// `2·K_0 = -h[LR] ∪ h[RR]`.
    pub fn gray_double_mid(&mut self, g: &GrayTree) -> Result<GrayTree, CompactError> {
        if let Some((_, r)) = self.gray_mid.get(&g.key()) {
            return Ok(r.clone());
        }
        let [l, r] = g.kids().ok_or(CompactError::DepthExceeded)?;
        let grand = |c: Option<&GrayTree>| -> Result<Option<GrayTree>, CompactError> {
            match c {
                None => Ok(None),
                Some(c) => Ok(c.kids().ok_or(CompactError::DepthExceeded)?[1].cloned()),
            }
        };
        let (lr, rr) = (grand(l)?, grand(r)?);
        let neg_h = |code: &GrayCode| GrayCode::cons(GCell::Neg, code.negate());
        let pos_h = |code: &GrayCode| GrayCode::cons(GCell::Pos, code.negate());
        let min = match (&lr, &rr) {
            (Some(a), _) => neg_h(a.max()),
            (None, Some(b)) => pos_h(b.min()),
            (None, None) => return Err(CompactError::Inconsistent("the middle part is empty")),
        };
        let max = match (&lr, &rr) {
            (_, Some(b)) => pos_h(b.max()),
            (Some(a), None) => neg_h(a.min()),
            (None, None) => unreachable!(),
        };
        let kids = [lr.map(|a| self.gray_negate(&a)), rr.map(|b| self.gray_negate(&b))];
        let out = GrayTree::new(min, max, Some(kids));
        self.gray_mid.insert(g.key(), (g.clone(), out.clone()));
        Ok(out)
    }

    /// Converts a Gray tree into a signed-digit tree of depth `n`. The digit
    /// set at each node is selected from four sign probes, the first two
    /// cells of the min and max codes.
    pub fn grayk_to_sdk(&mut self, g: &GrayTree, n: usize) -> Result<SdTree, CompactError> {
        if let Some((_, t)) = self.to_sd.get(&(g.key(), n)) {
            return Ok(t.clone());
        }
        let digits = select_digits(g)?;
        let mut kids = Vec::new();
        if n > 0 {
            for d in &digits {
                let c = match d {
                    SDigit::Neg => g.kids().ok_or(CompactError::DepthExceeded)?[0]
                        .cloned()
                        .ok_or(CompactError::Inconsistent("missing left child"))?,
                    SDigit::Pos => {
                        let r = g.kids().ok_or(CompactError::DepthExceeded)?[1]
                            .cloned()
                            .ok_or(CompactError::Inconsistent("missing right child"))?;
                        self.gray_negate(&r)
                    }
                    SDigit::Zero => self.gray_double_mid(g)?,
                };
                kids.push(self.grayk_to_sdk(&c, n - 1)?);
            }
        }
        let t = SdTree::new(digits, kids);
        self.to_sd.insert((g.key(), n), (g.clone(), t.clone()));
        Ok(t)
    }
}

fn first_nonzero(w: &[SDigit]) -> Option<SDigit> {
    w.iter().copied().find(|d| *d != SDigit::Zero)
}

/// Sign probes on the first two cells of the min and max codes, combined by
/// the case table in priority order (0,0), (0,1), (1,0), (1,1). A case
/// applies when both of its probes resolved and they determine a digit set.
fn select_digits(g: &GrayTree) -> Result<Vec<SDigit>, CompactError> {
    use GCell::{Neg as N, Pos as P};
    use SDigit::{Neg, Pos, Zero};
    let sign = |c: Option<GCell>| c.filter(|c| *c != GCell::Bot);
    let (a0, a1) = (sign(g.min().cell(0)), sign(g.min().cell(1)));
    let (b0, b1) = (sign(g.max().cell(0)), sign(g.max().cell(1)));
    let c00 = match (a0, b0) {
        (Some(P), Some(_)) => Some(vec![Pos]),
        (Some(_), Some(N)) => Some(vec![Neg]),
        (Some(_), Some(_)) => Some(vec![Neg, Pos]),
        _ => None,
    };
    let c01 = match (a0, b1) {
        (Some(P), Some(_)) => Some(vec![Pos]),
        (Some(N), Some(P)) => Some(vec![Neg, Zero]),
        _ => None,
    };
    let c10 = match (a1, b0) {
        (Some(_), Some(N)) => Some(vec![Neg]),
        (Some(P), Some(P)) => Some(vec![Zero, Pos]),
        _ => None,
    };
    let c11 = match (a1, b1) {
        (Some(P), Some(P)) => Some(vec![Zero]),
        (Some(P), Some(N)) => Some(vec![Zero, Pos]),
        (Some(N), Some(P)) => Some(vec![Neg, Zero]),
        _ => None,
    };
    c00.or(c01).or(c10).or(c11).ok_or(CompactError::Unresolved)
}

/// Digits along the least-digit path, one per level.
pub fn sdk_min_prefix(t: &SdTree) -> Vec<SDigit> {
    let mut out = Vec::new();
    let mut cur = t.clone();
    loop {
        let d = cur.digits()[0];
        out.push(d);
        match cur.child(d) {
            Some(c) => cur = c.clone(),
            None => return out,
        }
    }
}

fn sdk_max_prefix(ops: &mut TreeOps, t: &SdTree) -> Vec<SDigit> {
    sdk_min_prefix(&ops.sdk_negate(t)).into_iter().map(SDigit::neg).collect()
}

/// The first `n` digits of the code of `min K` along the least-digit path.
pub fn sdk_min_stream(t: &SdTree, n: usize) -> Result<Vec<SDigit>, CompactError> {
    let mut w = sdk_min_prefix(t);
    if w.len() < n {
        return Err(CompactError::DepthExceeded);
    }
    w.truncate(n);
    Ok(w)
}

/// The first `n` digits of the code of `max K`, read as the negated least
/// path of the negated tree.
pub fn sdk_max_stream(t: &SdTree, n: usize) -> Result<Vec<SDigit>, CompactError> {
    let mut w = sdk_max_prefix(&mut TreeOps::new(), t);
    if w.len() < n {
        return Err(CompactError::DepthExceeded);
    }
    w.truncate(n);
    Ok(w)
}

pub fn sdk_negate(t: &SdTree) -> SdTree {
    TreeOps::new().sdk_negate(t)
}

pub fn sdk_tent_child(t: &SdTree, d: SDigit) -> Option<SdTree> {
    TreeOps::new().sdk_tent_child(t, d)
}

pub fn sdk_to_grayk(t: &SdTree) -> GrayTree {
    TreeOps::new().sdk_to_grayk(t)
}

pub fn grayk_to_sdk(g: &GrayTree, n: usize) -> Result<SdTree, CompactError> {
    TreeOps::new().grayk_to_sdk(g, n)
}

/// The tent map on a finite signed-digit prefix: the longest output prefix
/// determined by the input prefix.
pub fn sd_tent_prefix(w: &[SDigit]) -> Vec<SDigit> {
    let mut out = Vec::new();
    for (i, d) in w.iter().enumerate() {
        match d {
            SDigit::Zero => out.push(SDigit::Pos),
            SDigit::Neg => {
                out.extend_from_slice(&w[i + 1..]);
                return out;
            }
            SDigit::Pos => {
                out.extend(w[i + 1..].iter().map(|e| e.neg()));
                return out;
            }
        }
    }
    out
}

/// The Gray cells determined by a finite signed-digit prefix: cell `k` is
/// the sign of the first nonzero digit of the `k`-th tent iterate, `None`
/// where the prefix does not determine it.
pub fn sd2gray_prefix(w: &[SDigit]) -> Vec<Option<GCell>> {
    let mut out = Vec::new();
    let mut cur = w.to_vec();
    while !cur.is_empty() {
        out.push(first_nonzero(&cur).map(|d| if d == SDigit::Neg { GCell::Neg } else { GCell::Pos }));
        cur = sd_tent_prefix(&cur);
    }
    out
}

// ---------------------------------------------------------------------------
// Gray codes and trees

/// A Gray code, possibly only partly known.
#[derive(Clone)]
pub enum GrayCode {
    /// A complete eventually periodic code.
    Stream(Rc<EPStream<GCell>>),
    /// Observed cells; `None` marks an unresolved cell, and cells past the
    /// end are unresolved.
    Cells(Rc<Vec<Option<GCell>>>),
    /// The code of `-x`: cell 0 flipped.
    Neg(Rc<GrayCode>),
    /// A known first cell followed by another code.
    Cons(GCell, Rc<GrayCode>),
}

impl GrayCode {
    pub fn stream(s: EPStream<GCell>) -> GrayCode {
        GrayCode::Stream(Rc::new(s))
    }

    pub fn cells(c: Vec<Option<GCell>>) -> GrayCode {
        GrayCode::Cells(Rc::new(c))
    }

    pub fn negate(&self) -> GrayCode {
        GrayCode::Neg(Rc::new(self.clone()))
    }

    pub fn cons(c: GCell, rest: GrayCode) -> GrayCode {
        GrayCode::Cons(c, Rc::new(rest))
    }

    /// Cell `i`: `Some(Bot)` for a known undefined cell, `None` when the
    /// cell is not available.
    pub fn cell(&self, mut i: usize) -> Option<GCell> {
        let mut cur = self;
        let mut flip = false;
        loop {
            match cur {
                GrayCode::Stream(s) => return Some(flip_cell(s.get(i), flip)),
                GrayCode::Cells(c) => return c.get(i).copied().flatten().map(|c| flip_cell(c, flip)),
                GrayCode::Neg(inner) => {
                    if i == 0 {
                        flip = !flip;
                    }
                    cur = inner;
                }
                GrayCode::Cons(c, rest) => {
                    if i == 0 {
                        return Some(flip_cell(*c, flip));
                    }
                    i -= 1;
                    flip = false;
                    cur = rest;
                }
            }
        }
    }

    pub fn prefix(&self, n: usize) -> Vec<Option<GCell>> {
        (0..n).map(|i| self.cell(i)).collect()
    }

    /// Renders `n` cells: signs, `_` for Bot and `?` for unavailable.
    pub fn render(&self, n: usize) -> String {
        render_cells(&self.prefix(n))
    }
}

fn flip_cell(c: GCell, flip: bool) -> GCell {
    match (c, flip) {
        (GCell::Neg, true) => GCell::Pos,
        (GCell::Pos, true) => GCell::Neg,
        _ => c,
    }
}

/// A truncated Gray tree.
#[derive(Clone)]
pub struct GrayTree(Rc<GrayNode>);

struct GrayNode {
    min: GrayCode,
    max: GrayCode,
    kids: Option<[Option<GrayTree>; 2]>,
    depth: usize,
}

impl GrayTree {
    /// A node; `kids` is `None` at the truncation frontier and otherwise
    /// holds the left and right child slots.
    pub fn new(min: GrayCode, max: GrayCode, kids: Option<[Option<GrayTree>; 2]>) -> GrayTree {
        let depth = match &kids {
            None => 0,
            Some(k) => k.iter().flatten().map(|c| c.depth() + 1).min().unwrap_or(usize::MAX),
        };
        GrayTree(Rc::new(GrayNode { min, max, kids, depth }))
    }

    pub fn min(&self) -> &GrayCode {
        &self.0.min
    }

    pub fn max(&self) -> &GrayCode {
        &self.0.max
    }

    /// The left and right child slots, or `None` at the truncation frontier.
    pub fn kids(&self) -> Option<[Option<&GrayTree>; 2]> {
        self.0.kids.as_ref().map(|[l, r]| [l.as_ref(), r.as_ref()])
    }

    pub fn depth(&self) -> usize {
        self.0.depth
    }

    fn key(&self) -> usize {
        Rc::as_ptr(&self.0) as usize
    }

    /// Renders the tree as `(min="…" max="…" (L …) (R …))`, showing
    /// `depth + 1` cells of each code at the root.
    pub fn dump(&self, depth: usize) -> String {
        let mut s = String::new();
        self.dump_into(depth, &mut s);
        s
    }

    fn dump_into(&self, depth: usize, s: &mut String) {
        write!(s, "(min=\"{}\" max=\"{}\"", self.min().render(depth + 1), self.max().render(depth + 1)).unwrap();
        if depth > 0 {
            if let Some([l, r]) = self.kids() {
                for (name, c) in [("L", l), ("R", r)] {
                    if let Some(c) = c {
                        write!(s, " ({name} ").unwrap();
                        c.dump_into(depth - 1, s);
                        s.push(')');
                    }
                }
            }
        }
        s.push(')');
    }
}

impl std::fmt::Debug for GrayTree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.dump(self.depth().min(4)))
    }
}

/// The Gray tree of `K` to depth `n`: exact min and max codes at every node,
/// and a child for each side on which `K` has points.
pub fn grayk_truncate(k: &IntervalSet, n: usize) -> Result<GrayTree, CompactError> {
    if k.is_empty() {
        return Err(CompactError::Empty);
    }
    let mut memo = HashMap::new();
    Ok(grayk_build(k, n, &mut memo))
}

fn grayk_build(k: &IntervalSet, n: usize, memo: &mut HashMap<(IntervalSet, usize), GrayTree>) -> GrayTree {
    if let Some(t) = memo.get(&(k.clone(), n)) {
        return t.clone();
    }
    let code = |x: &Rational| GrayCode::stream(gray_encode_stream(x).expect("sets lie in [-1,1]"));
    let min = code(k.min().expect("nonempty"));
    let max = code(k.max().expect("nonempty"));
    let kids = if n == 0 {
        None
    } else {
        let mut side = |c: GCell| {
            let s = gray_child_set(k, c);
            (!s.is_empty()).then(|| grayk_build(&s, n - 1, memo))
        };
        let l = side(GCell::Neg);
        let r = side(GCell::Pos);
        Some([l, r])
    };
    let t = GrayTree::new(min, max, kids);
    memo.insert((k.clone(), n), t.clone());
    t
}

// ---------------------------------------------------------------------------
// Value sets and distances

fn half() -> Rational {
    Rational::new(1.into(), 2.into())
}

/// The union over depth-`n` paths of the composed averaging maps applied to
/// `[-1,1]`. Requires `n <= depth + 1`.
pub fn tree_value_set(t: &SdTree, n: usize) -> Result<IntervalSet, CompactError> {
    fn go(t: &SdTree, n: usize, memo: &mut HashMap<(usize, usize), IntervalSet>) -> Result<IntervalSet, CompactError> {
        if n == 0 {
            return Ok(IntervalSet::unit());
        }
        if let Some(s) = memo.get(&(t.key(), n)) {
            return Ok(s.clone());
        }
        let mut acc = IntervalSet::empty();
        for &d in t.digits() {
            let inner = if n == 1 {
                IntervalSet::unit()
            } else {
                go(t.child(d).ok_or(CompactError::DepthExceeded)?, n - 1, memo)?
            };
            acc = acc.union(&inner.affine(&half(), &(d.rational() * half())));
        }
        memo.insert((t.key(), n), acc.clone());
        Ok(acc)
    }
    go(t, n, &mut HashMap::new())
}

/// The union over depth-`n` child paths of the composed Gray maps applied to
/// `[-1,1]`. Requires `n <= depth`.
pub fn gray_tree_value_set(g: &GrayTree, n: usize) -> Result<IntervalSet, CompactError> {
    fn go(g: &GrayTree, n: usize, memo: &mut HashMap<(usize, usize), IntervalSet>) -> Result<IntervalSet, CompactError> {
        if n == 0 {
            return Ok(IntervalSet::unit());
        }
        if let Some(s) = memo.get(&(g.key(), n)) {
            return Ok(s.clone());
        }
        let [l, r] = g.kids().ok_or(CompactError::DepthExceeded)?;
        let mut acc = IntervalSet::empty();
        if let Some(l) = l {
            acc = acc.union(&go(l, n - 1, memo)?.affine(&half(), &-half()));
        }
        if let Some(r) = r {
            acc = acc.union(&go(r, n - 1, memo)?.affine(&-half(), &half()));
        }
        memo.insert((g.key(), n), acc.clone());
        Ok(acc)
    }
    go(g, n, &mut HashMap::new())
}

/// `2^-n` for the least `n <= max_depth` at which the depth-`n` prefixes of
/// the two trees differ, and `0` if they agree up to `max_depth`.
pub fn hausdorff_trunc(s: &SdTree, t: &SdTree, max_depth: usize) -> Result<Rational, CompactError> {
    fn diff(
        s: &SdTree,
        t: &SdTree,
        m: usize,
        memo: &mut HashMap<(usize, usize, usize), Option<usize>>,
    ) -> Result<Option<usize>, CompactError> {
        if m == 0 || s.ptr_eq(t) {
            return Ok(None);
        }
        if s.digits() != t.digits() {
            return Ok(Some(1));
        }
        if m == 1 {
            return Ok(None);
        }
        if let Some(r) = memo.get(&(s.key(), t.key(), m)) {
            return Ok(*r);
        }
        let mut best: Option<usize> = None;
        for &d in s.digits() {
            let (a, b) = (s.child(d), t.child(d));
            let (a, b) = (a.ok_or(CompactError::DepthExceeded)?, b.ok_or(CompactError::DepthExceeded)?);
            if let Some(k) = diff(a, b, m - 1, memo)? {
                best = Some(best.map_or(k + 1, |b| b.min(k + 1)));
            }
        }
        memo.insert((s.key(), t.key(), m), best);
        Ok(best)
    }
    Ok(match diff(s, t, max_depth, &mut HashMap::new())? {
        None => Rational::zero(),
        Some(n) => Rational::new(One::one(), num_bigint::BigInt::one() << n),
    })
}
