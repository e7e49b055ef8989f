//! Graph-reduction engine for the small-step relation.
//!
//! Terms are compiled to closure code and built into a shared graph of nodes.
//! Variables resolve to existing nodes, so every subterm is evaluated at most
//! once and results are shared. A tick is one root step: starting at the
//! driven node, every reachable redex in evaluation position is rewritten in
//! place exactly once, and constructors pass the tick on to
//! all of their children. `rec M` is built as a cyclic application node.
//!
//! Amb resolution races both branches tick by tick, commits the first branch
//! to reach weak head normal form (left wins ties) and records the choice on
//! the node, so every later observation through that node agrees with it.

use crate::terms::{Pattern, Tag, Term};
use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::{Rc, Weak};
use smallvec::SmallVec;
use thiserror::Error;

/// Errors raised when loading a term into an engine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("open term: unbound variable `{0}`")]
    OpenTerm(String),
}

/// A stream or iteration value whose resolved shape does not fit the expected
/// realiser format.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed shape: {0}")]
pub struct ShapeError(pub String);

/// A budget of root ticks.
#[derive(Debug, Clone)]
pub struct Fuel {
    limit: u64,
    used: u64,
}

impl Fuel {
    pub fn new(limit: u64) -> Fuel {
        Fuel { limit, used: 0 }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.limit - self.used
    }

    fn take(&mut self) -> bool {
        if self.used < self.limit {
            self.used += 1;
            true
        } else {
            false
        }
    }

    fn exhaust(&mut self) {
        self.used = self.limit;
    }
}

/// Evaluation policy for observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Amb is reported as an ordinary binary constructor.
    Raw,
    /// Every Amb head is collapsed to its committed branch.
    Resolving,
}

/// A finite partial view of a possibly infinite value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Observation {
    Con(Tag, Vec<Observation>),
    /// A constructor whose children lie beyond the requested depth.
    Cut(Tag),
    Lambda,
    Unresolved,
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::Unresolved => write!(f, "<unresolved>"),
            Observation::Lambda => write!(f, "<fun>"),
            Observation::Cut(tag) => write!(f, "{}(...)", tag.name()),
            Observation::Con(tag, kids) => {
                write!(f, "{}", tag.name())?;
                if !kids.is_empty() {
                    write!(f, "(")?;
                    for (i, k) in kids.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{k}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

/// The head of a node in weak head normal form.
#[derive(Clone)]
pub enum Whnf {
    Con(Tag, Vec<NodeRef>),
    Lambda,
}

impl fmt::Debug for Whnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Whnf::Con(tag, kids) => write!(f, "Con({}, {} children)", tag.name(), kids.len()),
            Whnf::Lambda => write!(f, "Lambda"),
        }
    }
}

impl Whnf {
    pub fn tag(&self) -> Option<Tag> {
        match self {
            Whnf::Con(tag, _) => Some(*tag),
            Whnf::Lambda => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Compiled code

enum CPat {
    Con(Tag, Vec<CPat>),
    Bind,
    Fun(bool),
    Wild,
}

struct CaseCode {
    clauses: Vec<(CPat, Code)>,
    needs_whnf: bool,
}

enum Code {
    Local(usize),
    Global(NodeRef),
    Con(Tag, Vec<Code>),
    Lam(Rc<Code>),
    App(Box<Code>, Box<Code>),
    Case(Box<Code>, Rc<CaseCode>),
    Rec(Box<Code>),
    Bot,
}

fn compile(t: &Term, scope: &mut Vec<String>, globals: &HashMap<String, NodeRef>) -> Result<Code, EngineError> {
    Ok(match t {
        Term::Var(x) => match scope.iter().rposition(|b| b == x) {
            Some(i) => Code::Local(scope.len() - 1 - i),
            None => match globals.get(x) {
                Some(n) => Code::Global(n.clone()),
                None => return Err(EngineError::OpenTerm(x.clone())),
            },
        },
        Term::Con(tag, kids) if kids.is_empty() => Code::Global(NodeRef::new(Kind::Con(*tag, Kids::new()))),
        Term::Con(tag, kids) => Code::Con(
            *tag,
            kids.iter().map(|k| compile(k, scope, globals)).collect::<Result<_, _>>()?,
        ),
        Term::Lam(x, body) => {
            scope.push(x.clone());
            let b = compile(body, scope, globals);
            scope.pop();
            Code::Lam(Rc::new(b?))
        }
        Term::App(f, a) => Code::App(Box::new(compile(f, scope, globals)?), Box::new(compile(a, scope, globals)?)),
        Term::Case(s, clauses) => {
            let scrutinee = compile(s, scope, globals)?;
            let mut compiled = Vec::with_capacity(clauses.len());
            let mut needs_whnf = true;
            for c in clauses {
                if matches!(c.pattern, Pattern::Var(_) | Pattern::Wild) {
                    needs_whnf = false;
                }
                let vars = c.pattern.vars();
                let n = vars.len();
                scope.extend(vars);
                let body = compile(&c.body, scope, globals);
                scope.truncate(scope.len() - n);
                compiled.push((compile_pattern(&c.pattern), body?));
            }
            Code::Case(
                Box::new(scrutinee),
                Rc::new(CaseCode {
                    clauses: compiled,
                    needs_whnf,
                }),
            )
        }
        Term::Rec(body) => Code::Rec(Box::new(compile(body, scope, globals)?)),
        Term::Bot => Code::Bot,
    })
}

fn compile_pattern(p: &Pattern) -> CPat {
    match p {
        Pattern::Con(tag, ps) => CPat::Con(*tag, ps.iter().map(compile_pattern).collect()),
        Pattern::Var(_) => CPat::Bind,
        Pattern::Fun(name) => CPat::Fun(name.is_some()),
        Pattern::Wild => CPat::Wild,
    }
}

// ---------------------------------------------------------------------------
// Graph

type Link = Rc<RefCell<Node>>;

/// A shared handle to a node of the evaluation graph.
#[derive(Clone)]
pub struct NodeRef(Link);

impl fmt::Debug for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NodeRef({:p})", Rc::as_ptr(&self.0))
    }
}

type Env = Option<Rc<EnvCell>>;

struct EnvCell {
    val: NodeRef,
    next: Env,
}

fn env_push(env: &Env, val: NodeRef) -> Env {
    Some(Rc::new(EnvCell { val, next: env.clone() }))
}

fn env_lookup(env: &Env, mut i: usize) -> NodeRef {
    let mut cur = env.as_ref().expect("unbound de Bruijn index");
    while i > 0 {
        cur = cur.next.as_ref().expect("unbound de Bruijn index");
        i -= 1;
    }
    cur.val.clone()
}

type Kids = SmallVec<[NodeRef; 2]>;

enum Kind {
    Ind(NodeRef),
    Con(Tag, Kids),
    Lam(Rc<Code>, Env),
    App(NodeRef, NodeRef),
    Case(NodeRef, Rc<CaseCode>, Env),
    Bot,
}

type Chain = Vec<(Weak<RefCell<Node>>, u32)>;

struct Node {
    kind: Kind,
    epoch: u64,
    version: u32,
    inert: bool,
    commit: Option<u8>,
    chain: Option<Box<Chain>>,
}

thread_local! {
    static PENDING: std::cell::Cell<Vec<Link>> = const { std::cell::Cell::new(Vec::new()) };
}

impl Drop for Node {
    fn drop(&mut self) {
        if matches!(self.kind, Kind::Bot) {
            return;
        }
        let mut pending = PENDING.with(|p| p.take());
        drain_kind(std::mem::replace(&mut self.kind, Kind::Bot), &mut pending);
        while let Some(link) = pending.pop() {
            if let Ok(cell) = Rc::try_unwrap(link) {
                let mut node = cell.into_inner();
                drain_kind(std::mem::replace(&mut node.kind, Kind::Bot), &mut pending);
            }
        }
        PENDING.with(|p| p.set(pending));
    }
}

/// Queues a link for iterative release if this is its last strong handle,
/// and otherwise just releases the handle.
fn defer(link: Link, pending: &mut Vec<Link>) {
    if Rc::strong_count(&link) == 1 {
        pending.push(link);
    }
}

fn drain_kind(kind: Kind, pending: &mut Vec<Link>) {
    match kind {
        Kind::Ind(n) => defer(n.0, pending),
        Kind::Con(_, kids) => kids.into_iter().for_each(|k| defer(k.0, pending)),
        Kind::Lam(_, env) => drain_env(env, pending),
        Kind::App(f, a) => {
            defer(f.0, pending);
            defer(a.0, pending);
        }
        Kind::Case(s, _, env) => {
            defer(s.0, pending);
            drain_env(env, pending);
        }
        Kind::Bot => {}
    }
}

fn drain_env(mut env: Env, pending: &mut Vec<Link>) {
    while let Some(rc) = env {
        match Rc::try_unwrap(rc) {
            Ok(cell) => {
                let EnvCell { val, next } = cell;
                defer(val.0, pending);
                env = next;
            }
            Err(_) => break,
        }
    }
}

impl NodeRef {
    fn new(kind: Kind) -> NodeRef {
        let inert = kind_inert(&kind);
        NodeRef(Rc::new(RefCell::new(Node {
            kind,
            epoch: 0,
            version: 0,
            inert,
            commit: None,
            chain: None,
        })))
    }

    pub fn ptr_eq(&self, other: &NodeRef) -> bool {
        Rc::ptr_eq(&self.0, &other.0)
    }

    /// Follows indirections to the representative node, compressing the path.
    #[inline]
    fn deref(&self) -> NodeRef {
        if !matches!(self.0.borrow().kind, Kind::Ind(_)) {
            return self.clone();
        }
        self.deref_chain()
    }

    fn deref_chain(&self) -> NodeRef {
        let mut cur = self.clone();
        loop {
            let next = match &cur.0.borrow().kind {
                Kind::Ind(t) => t.clone(),
                _ => break,
            };
            cur = next;
        }
        if !cur.ptr_eq(self) {
            let mut walk = self.clone();
            while !walk.ptr_eq(&cur) {
                let next = {
                    let mut b = walk.0.borrow_mut();
                    match &mut b.kind {
                        Kind::Ind(t) => std::mem::replace(t, cur.clone()),
                        _ => break,
                    }
                };
                walk = next;
            }
        }
        cur
    }

    /// The weak head normal form of this node, if it has been reached.
    pub fn head(&self) -> Option<Whnf> {
        let d = self.deref();
        let b = d.0.borrow();
        match &b.kind {
            Kind::Con(tag, kids) => Some(Whnf::Con(*tag, kids.to_vec())),
            Kind::Lam(..) => Some(Whnf::Lambda),
            _ => None,
        }
    }

    /// The committed branch of an Amb node, if any.
    pub fn commitment(&self) -> Option<u8> {
        self.deref().0.borrow().commit
    }

    fn is_whnf(&self) -> bool {
        matches!(self.0.borrow().kind, Kind::Con(..) | Kind::Lam(..))
    }

    fn is_bot(&self) -> bool {
        matches!(self.0.borrow().kind, Kind::Bot)
    }

    fn is_inert(&self) -> bool {
        self.0.borrow().inert
    }

    fn set_kind(&self, kind: Kind) {
        let inert = kind_inert(&kind);
        let old = {
            let mut b = self.0.borrow_mut();
            b.version = b.version.wrapping_add(1);
            b.inert = inert;
            b.chain = None;
            std::mem::replace(&mut b.kind, kind)
        };
        drop(old);
    }
}

fn kind_inert(kind: &Kind) -> bool {
    match kind {
        Kind::Lam(..) | Kind::Bot => true,
        Kind::Con(_, kids) => kids.iter().all(ref_inert),
        _ => false,
    }
}

fn ref_inert(n: &NodeRef) -> bool {
    let b = n.0.borrow();
    match &b.kind {
        Kind::Ind(t) => ref_inert(t),
        _ => b.inert,
    }
}

fn build(code: &Code, env: &Env) -> NodeRef {
    match code {
        Code::Local(i) => env_lookup(env, *i),
        Code::Global(n) => n.clone(),
        Code::Bot => NodeRef::new(Kind::Bot),
        Code::Rec(_) => {
            let n = NodeRef::new(Kind::Bot);
            build_into(&n, code, env);
            n
        }
        _ => NodeRef::new(fresh_kind(code, env)),
    }
}

/// The node contents for code that builds a new constructor, closure,
/// application or case node.
fn fresh_kind(code: &Code, env: &Env) -> Kind {
    match code {
        Code::Con(tag, kids) => {
            let mut built = Kids::new();
            for k in kids {
                built.push(build(k, env));
            }
            Kind::Con(*tag, built)
        }
        Code::Lam(body) => Kind::Lam(body.clone(), env.clone()),
        Code::App(f, a) => Kind::App(build(f, env), build(a, env)),
        Code::Case(s, cc) => Kind::Case(build(s, env), cc.clone(), env.clone()),
        Code::Local(_) | Code::Global(_) | Code::Rec(_) | Code::Bot => unreachable!("handled by the callers"),
    }
}

fn indirect(slot: &NodeRef, target: NodeRef) -> Kind {
    let t = target.deref();
    if t.ptr_eq(slot) {
        Kind::Bot
    } else {
        Kind::Ind(t)
    }
}

fn build_into(slot: &NodeRef, code: &Code, env: &Env) {
    let kind = match code {
        Code::Local(i) => indirect(slot, env_lookup(env, *i)),
        Code::Global(n) => indirect(slot, n.clone()),
        Code::Rec(m) => Kind::App(build(m, env), slot.clone()),
        Code::Bot => Kind::Bot,
        _ => fresh_kind(code, env),
    };
    slot.set_kind(kind);
}

fn match_pattern(p: &CPat, n: &NodeRef, binds: &mut Vec<NodeRef>) -> bool {
    match p {
        CPat::Wild => true,
        CPat::Bind => {
            binds.push(n.clone());
            true
        }
        CPat::Fun(bind) => {
            let d = n.deref();
            let is_lam = matches!(d.0.borrow().kind, Kind::Lam(..));
            if is_lam && *bind {
                binds.push(d);
            }
            is_lam
        }
        CPat::Con(tag, ps) => {
            let d = n.deref();
            let b = d.0.borrow();
            match &b.kind {
                Kind::Con(t, kids) if t == tag => ps.iter().zip(kids).all(|(q, k)| match_pattern(q, k, binds)),
                _ => false,
            }
        }
    }
}

enum Action {
    Nothing,
    Through(NodeRef),
    Pushed,
    Beta(Rc<Code>, Env, NodeRef),
    Select(Rc<CaseCode>, usize, Env),
    Dead,
}

fn action(n: &NodeRef, stack: &mut Vec<NodeRef>, binds: &mut Vec<NodeRef>) -> Action {
    let b = n.0.borrow();
    match &b.kind {
        Kind::Ind(_) => unreachable!("visited nodes are dereferenced"),
        Kind::Lam(..) | Kind::Bot => Action::Nothing,
        Kind::Con(_, kids) => {
            let before = stack.len();
            stack.extend(kids.iter().map(NodeRef::deref).filter(|k| !k.is_inert()));
            if stack.len() == before {
                drop(b);
                n.0.borrow_mut().inert = true;
                Action::Nothing
            } else {
                Action::Pushed
            }
        }
        Kind::App(f, a) => {
            let fd = f.deref();
            let fb = fd.0.borrow();
            match &fb.kind {
                Kind::Lam(body, env) => Action::Beta(body.clone(), env.clone(), a.clone()),
                Kind::Con(..) | Kind::Bot => Action::Dead,
                _ => {
                    drop(fb);
                    Action::Through(fd)
                }
            }
        }
        Kind::Case(s, cc, env) => {
            let sd = s.deref();
            if cc.needs_whnf && !sd.is_whnf() {
                if sd.is_bot() {
                    return Action::Dead;
                }
                return Action::Through(sd);
            }
            for (i, (pat, _)) in cc.clauses.iter().enumerate() {
                binds.clear();
                if match_pattern(pat, &sd, binds) {
                    return Action::Select(cc.clone(), i, env.clone());
                }
            }
            if sd.is_inert() {
                Action::Dead
            } else {
                stack.push(sd);
                Action::Pushed
            }
        }
    }
}

/// An evaluation graph together with its global definitions.
#[derive(Default)]
pub struct Engine {
    epoch: u64,
    stack: Vec<NodeRef>,
    globals: HashMap<String, NodeRef>,
    changed: bool,
    ticks: u64,
    binds: Vec<NodeRef>,
    scratch: Option<Box<Chain>>,
}

const CHAIN_MIN: usize = 4;

impl Engine {
    pub fn new() -> Engine {
        Engine::default()
    }

    /// Total ticks performed by this engine.
    pub fn total_ticks(&self) -> u64 {
        self.ticks
    }

    /// Adds a global definition; the term may refer to earlier globals.
    pub fn define(&mut self, name: &str, t: &Term) -> Result<(), EngineError> {
        let n = self.load(t)?;
        self.globals.insert(name.to_string(), n);
        Ok(())
    }

    pub fn global(&self, name: &str) -> Option<NodeRef> {
        self.globals.get(name).cloned()
    }

    /// Builds a term whose free variables are globals into a fresh node.
    pub fn load(&mut self, t: &Term) -> Result<NodeRef, EngineError> {
        let code = compile(t, &mut Vec::new(), &self.globals)?;
        Ok(build(&code, &None))
    }

    /// One root step.
    fn tick(&mut self, root: &NodeRef) {
        self.ticks += 1;
        self.epoch += 1;
        self.changed = false;
        let epoch = self.epoch;
        let mut stack = std::mem::take(&mut self.stack);
        stack.push(root.clone());
        while let Some(n) = stack.pop() {
            self.visit(n, epoch, &mut stack);
        }
        self.stack = stack;
    }

    fn visit(&mut self, start: NodeRef, epoch: u64, stack: &mut Vec<NodeRef>) {
        let start = start.deref();
        let stored = start.0.borrow_mut().chain.take();
        let mut chain = stored.or_else(|| self.scratch.take()).unwrap_or_default();
        let mut cur = start.clone();
        if !chain.is_empty() {
            match resume_point(&chain) {
                Some(p) => {
                    cur = chain[p].0.upgrade().map(NodeRef).expect("intact chain entry is alive");
                    chain.truncate(p);
                }
                None => chain.clear(),
            }
        }
        loop {
            {
                let mut b = cur.0.borrow_mut();
                if b.epoch == epoch || b.inert {
                    break;
                }
                b.epoch = epoch;
            }
            match action(&cur, stack, &mut self.binds) {
                Action::Nothing | Action::Pushed => break,
                Action::Through(next) => {
                    let version = cur.0.borrow().version;
                    chain.push((Rc::downgrade(&cur.0), version));
                    cur = next;
                }
                Action::Beta(body, env, arg) => {
                    self.changed = true;
                    build_into(&cur, &body, &env_push(&env, arg));
                    break;
                }
                Action::Select(cc, i, env) => {
                    self.changed = true;
                    let env = self.binds.drain(..).fold(env, |e, v| env_push(&e, v));
                    build_into(&cur, &cc.clauses[i].1, &env);
                    break;
                }
                Action::Dead => {
                    self.changed = true;
                    cur.set_kind(Kind::Bot);
                    break;
                }
            }
        }
        if chain.len() >= CHAIN_MIN && Weak::as_ptr(&chain[0].0) == Rc::as_ptr(&start.0) {
            start.0.borrow_mut().chain = Some(chain);
        } else {
            chain.clear();
            self.scratch = Some(chain);
        }
    }

    /// Drives a node to weak head normal form.
    pub fn whnf_node(&mut self, n: &NodeRef, fuel: &mut Fuel) -> Option<NodeRef> {
        loop {
            let d = n.deref();
            if d.is_whnf() {
                return Some(d);
            }
            if d.is_bot() {
                fuel.exhaust();
                return None;
            }
            if !fuel.take() {
                return None;
            }
            self.tick(&d);
            if !self.changed {
                fuel.exhaust();
                return None;
            }
        }
    }

    /// Drives a node to a non-Amb weak head normal form, resolving every Amb
    /// head by a fair race between its branches. Passing through a committed
    /// Amb costs one tick.
    pub fn resolve_node(&mut self, n: &NodeRef, fuel: &mut Fuel) -> Option<NodeRef> {
        let mut cur = n.clone();
        loop {
            let d = self.whnf_node(&cur, fuel)?;
            match self.race(&d, fuel)? {
                Some(branch) => {
                    if !fuel.take() {
                        return None;
                    }
                    cur = branch;
                }
                None => return Some(d),
            }
        }
    }

    /// For an Amb node in whnf, returns the committed branch, racing the two
    /// branches first if no commitment exists; `Some(None)` for other nodes.
    fn race(&mut self, d: &NodeRef, fuel: &mut Fuel) -> Option<Option<NodeRef>> {
        let (a, b, commit) = {
            let nb = d.0.borrow();
            match &nb.kind {
                Kind::Con(Tag::Amb, kids) => (kids[0].clone(), kids[1].clone(), nb.commit),
                _ => return Some(None),
            }
        };
        if let Some(c) = commit {
            return Some(Some(if c == 0 { a } else { b }));
        }
        loop {
            let (ad, bd) = (a.deref(), b.deref());
            let choice = if ad.is_whnf() {
                Some(0u8)
            } else if bd.is_whnf() {
                Some(1u8)
            } else {
                None
            };
            if let Some(c) = choice {
                d.0.borrow_mut().commit = Some(c);
                return Some(Some(if c == 0 { ad } else { bd }));
            }
            if ad.is_bot() && bd.is_bot() {
                fuel.exhaust();
                return None;
            }
            if !fuel.take() {
                return None;
            }
            self.tick(d);
            if !self.changed {
                fuel.exhaust();
                return None;
            }
        }
    }

    /// Collapses a realiser of the iterated concurrency modality: resolves the
    /// outer Amb, returns the whnf of the payload on `Left`, and recurses on
    /// `Right`. The fuel is shared across the iteration, and each `Right`
    /// level costs one tick.
    pub fn collapse_star_node(&mut self, n: &NodeRef, fuel: &mut Fuel) -> Result<Option<NodeRef>, ShapeError> {
        let mut cur = n.clone();
        loop {
            let Some(d) = self.whnf_node(&cur, fuel) else {
                return Ok(None);
            };
            let branch = match self.race(&d, fuel) {
                None => return Ok(None),
                Some(None) => return Err(ShapeError(format!("expected Amb, found {}", describe(&d)))),
                Some(Some(b)) => b,
            };
            let Some(chosen) = self.whnf_node(&branch, fuel) else {
                return Ok(None);
            };
            let (tag, kid) = match chosen.head() {
                Some(Whnf::Con(tag @ (Tag::Left | Tag::Right), kids)) => (tag, kids[0].clone()),
                _ => return Err(ShapeError(format!("expected Left or Right, found {}", describe(&chosen)))),
            };
            if tag == Tag::Left {
                return Ok(self.whnf_node(&kid, fuel));
            }
            if !fuel.take() {
                return Ok(None);
            }
            cur = kid;
        }
    }

    /// Observes a node to the given constructor depth; each node gets its own
    /// fuel budget.
    pub fn observe_node(&mut self, n: &NodeRef, depth: usize, fuel_per_node: u64, policy: Policy) -> Observation {
        let mut fuel = Fuel::new(fuel_per_node);
        let d = match policy {
            Policy::Raw => self.whnf_node(n, &mut fuel),
            Policy::Resolving => self.resolve_node(n, &mut fuel),
        };
        match d.and_then(|d| d.head()) {
            None => Observation::Unresolved,
            Some(Whnf::Lambda) => Observation::Lambda,
            Some(Whnf::Con(tag, kids)) => {
                if kids.is_empty() {
                    Observation::Con(tag, Vec::new())
                } else if depth == 0 {
                    Observation::Cut(tag)
                } else {
                    Observation::Con(
                        tag,
                        kids.iter().map(|k| self.observe_node(k, depth - 1, fuel_per_node, policy)).collect(),
                    )
                }
            }
        }
    }

    /// Reads the head of cell `k` of a Pair-spine stream. Each spine node and
    /// the head get their own fuel budget.
    pub fn stream_cell_node(
        &mut self,
        n: &NodeRef,
        k: usize,
        depth: usize,
        fuel: u64,
    ) -> Result<Observation, ShapeError> {
        let mut cur = n.clone();
        for i in 0..=k {
            let Some(d) = self.resolve_node(&cur, &mut Fuel::new(fuel)) else {
                return Ok(Observation::Unresolved);
            };
            let kids = match d.head() {
                Some(Whnf::Con(Tag::Pair, kids)) => kids,
                _ => return Err(ShapeError(format!("stream spine is {}", describe(&d)))),
            };
            if i == k {
                return Ok(self.observe_node(&kids[0], depth, fuel, Policy::Resolving));
            }
            cur = kids[1].clone();
        }
        unreachable!()
    }

    // Term-level conveniences.

    pub fn whnf(&mut self, t: &Term, fuel: &mut Fuel) -> Result<Option<Whnf>, EngineError> {
        let n = self.load(t)?;
        Ok(self.whnf_node(&n, fuel).and_then(|d| d.head()))
    }

    pub fn resolve_amb(&mut self, t: &Term, fuel: &mut Fuel) -> Result<Option<Whnf>, EngineError> {
        let n = self.load(t)?;
        Ok(self.resolve_node(&n, fuel).and_then(|d| d.head()))
    }

    pub fn observe(&mut self, t: &Term, depth: usize, fuel_per_node: u64, policy: Policy) -> Result<Observation, EngineError> {
        let n = self.load(t)?;
        Ok(self.observe_node(&n, depth, fuel_per_node, policy))
    }

    pub fn collapse_star(&mut self, t: &Term, fuel: &mut Fuel) -> Result<Result<Option<Whnf>, ShapeError>, EngineError> {
        let n = self.load(t)?;
        Ok(self.collapse_star_node(&n, fuel).map(|r| r.and_then(|d| d.head())))
    }

    pub fn stream_cell(&mut self, t: &Term, k: usize, depth: usize, fuel: u64) -> Result<Result<Observation, ShapeError>, EngineError> {
        let n = self.load(t)?;
        Ok(self.stream_cell_node(&n, k, depth, fuel))
    }
}

/// Index of the deepest still-intact entry of a pass-through chain. Entries
/// are intact while their node has not been rewritten since it was recorded.
/// The intact entries form a prefix of the chain: a node waiting on an
/// unrewritten child is never rewritten itself.
fn resume_point(chain: &Chain) -> Option<usize> {
    let intact = |i: usize| -> bool {
        let (w, v) = &chain[i];
        match w.upgrade() {
            Some(rc) => {
                let b = rc.borrow();
                b.version == *v && !matches!(b.kind, Kind::Ind(_))
            }
            None => false,
        }
    };
    let last = chain.len() - 1;
    if intact(last) {
        return Some(last);
    }
    if !intact(0) {
        return None;
    }
    let (mut lo, mut hi) = (0usize, last);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if intact(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

fn describe(n: &NodeRef) -> String {
    let d = n.deref();
    let b = d.0.borrow();
    match &b.kind {
        Kind::Con(tag, _) => tag.name().to_string(),
        Kind::Lam(..) => "a function".to_string(),
        Kind::Bot => "bot".to_string(),
        _ => "an unevaluated term".to_string(),
    }
}

/// The strict application `f↓a`: forces `a` to a non-Amb weak head normal
/// form before applying `f`.
pub fn strict_apply(f: Term, a: Term) -> Term {
    let fa = Term::app(f, a.clone());
    let clause = |pattern: Pattern| crate::terms::Clause {
        pattern,
        body: fa.clone(),
    };
    Term::case(
        a,
        vec![
            clause(Pattern::Con(Tag::Nil, vec![])),
            clause(Pattern::Con(Tag::Left, vec![Pattern::Wild])),
            clause(Pattern::Con(Tag::Right, vec![Pattern::Wild])),
            clause(Pattern::Con(Tag::Pair, vec![Pattern::Wild, Pattern::Wild])),
            clause(Pattern::Fun(None)),
        ],
    )
}
