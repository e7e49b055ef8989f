//! Abstract syntax of the program calculus: constructors, terms, patterns and
//! clauses, together with printing, free variables, capture-avoiding
//! substitution and α-equality.

use std::collections::BTreeSet;
use std::fmt;

/// Constructor tags with their fixed arities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Nil,
    Left,
    Right,
    Pair,
    Amb,
}

impl Tag {
    pub const ALL: [Tag; 5] = [Tag::Nil, Tag::Left, Tag::Right, Tag::Pair, Tag::Amb];

    pub fn arity(self) -> usize {
        match self {
            Tag::Nil => 0,
            Tag::Left | Tag::Right => 1,
            Tag::Pair | Tag::Amb => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tag::Nil => "Nil",
            Tag::Left => "Left",
            Tag::Right => "Right",
            Tag::Pair => "Pair",
            Tag::Amb => "Amb",
        }
    }

    pub fn from_name(name: &str) -> Option<Tag> {
        Tag::ALL.into_iter().find(|t| t.name() == name)
    }
}

/// A program term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Con(Tag, Vec<Term>),
    Lam(String, Box<Term>),
    App(Box<Term>, Box<Term>),
    Case(Box<Term>, Vec<Clause>),
    Rec(Box<Term>),
    Bot,
}

/// A case clause `pattern -> body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub pattern: Pattern,
    pub body: Term,
}

/// A clause pattern. `Wild` is the anonymous variable `_`; a `Fun` pattern
/// matches only λ-abstractions and may itself be anonymous (`fun(_)`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pattern {
    Con(Tag, Vec<Pattern>),
    Var(String),
    Fun(Option<String>),
    Wild,
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn con(tag: Tag, kids: Vec<Term>) -> Term {
        assert_eq!(tag.arity(), kids.len(), "arity mismatch for {}", tag.name());
        Term::Con(tag, kids)
    }

    pub fn nil() -> Term {
        Term::Con(Tag::Nil, vec![])
    }

    pub fn left(t: Term) -> Term {
        Term::Con(Tag::Left, vec![t])
    }

    pub fn right(t: Term) -> Term {
        Term::Con(Tag::Right, vec![t])
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Con(Tag::Pair, vec![a, b])
    }

    pub fn amb(a: Term, b: Term) -> Term {
        Term::Con(Tag::Amb, vec![a, b])
    }

    pub fn lam(binder: &str, body: Term) -> Term {
        Term::Lam(binder.to_string(), Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    /// Left-nested application `f a1 a2 …`.
    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn case(scrutinee: Term, clauses: Vec<Clause>) -> Term {
        Term::Case(Box::new(scrutinee), clauses)
    }

    pub fn rec(body: Term) -> Term {
        Term::Rec(Box::new(body))
    }

    /// Free variables of the term.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    out.insert(x.clone());
                }
            }
            Term::Con(_, kids) => kids.iter().for_each(|k| k.collect_free(bound, out)),
            Term::Lam(x, body) => {
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Term::App(f, a) => {
                f.collect_free(bound, out);
                a.collect_free(bound, out);
            }
            Term::Case(s, clauses) => {
                s.collect_free(bound, out);
                for c in clauses {
                    let vars = c.pattern.vars();
                    let n = vars.len();
                    bound.extend(vars);
                    c.body.collect_free(bound, out);
                    bound.truncate(bound.len() - n);
                }
            }
            Term::Rec(body) => body.collect_free(bound, out),
            Term::Bot => {}
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Number of syntax nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Bot => 1,
            Term::Con(_, kids) => 1 + kids.iter().map(Term::size).sum::<usize>(),
            Term::Lam(_, b) | Term::Rec(b) => 1 + b.size(),
            Term::App(f, a) => 1 + f.size() + a.size(),
            Term::Case(s, cs) => 1 + s.size() + cs.iter().map(|c| c.body.size()).sum::<usize>(),
        }
    }
}

impl Pattern {
    /// Variables bound by the pattern, in left-to-right order.
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Pattern::Con(_, ps) => ps.iter().for_each(|p| p.collect_vars(out)),
            Pattern::Var(x) | Pattern::Fun(Some(x)) => out.push(x.clone()),
            Pattern::Fun(None) | Pattern::Wild => {}
        }
    }

    /// The first variable that occurs twice, if any.
    pub fn nonlinear_var(&self) -> Option<String> {
        let vars = self.vars();
        let mut seen = BTreeSet::new();
        vars.into_iter().find(|v| !seen.insert(v.clone()))
    }
}

/// A name not occurring in `avoid`, obtained by appending primes to `base`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let mut candidate = format!("{base}'");
    while avoid.contains(&candidate) {
        candidate.push('\'');
    }
    candidate
}

/// Capture-avoiding substitution `t[s/v]`.
pub fn substitute(t: &Term, v: &str, s: &Term) -> Term {
    let fv_s = s.free_vars();
    subst(t, v, s, &fv_s)
}

fn subst(t: &Term, v: &str, s: &Term, fv_s: &BTreeSet<String>) -> Term {
    match t {
        Term::Var(x) => {
            if x == v {
                s.clone()
            } else {
                t.clone()
            }
        }
        Term::Con(tag, kids) => Term::Con(*tag, kids.iter().map(|k| subst(k, v, s, fv_s)).collect()),
        Term::Lam(x, body) => {
            if x == v || !body.free_vars().contains(v) {
                return t.clone();
            }
            if fv_s.contains(x) {
                let mut avoid = body.free_vars();
                avoid.extend(fv_s.iter().cloned());
                avoid.insert(v.to_string());
                let x2 = fresh_name(x, &avoid);
                let body2 = subst(body, x, &Term::Var(x2.clone()), &BTreeSet::from([x2.clone()]));
                Term::Lam(x2, Box::new(subst(&body2, v, s, fv_s)))
            } else {
                Term::Lam(x.clone(), Box::new(subst(body, v, s, fv_s)))
            }
        }
        Term::App(f, a) => Term::app(subst(f, v, s, fv_s), subst(a, v, s, fv_s)),
        Term::Case(scr, clauses) => {
            let scr2 = subst(scr, v, s, fv_s);
            let clauses2 = clauses.iter().map(|c| subst_clause(c, v, s, fv_s)).collect();
            Term::Case(Box::new(scr2), clauses2)
        }
        Term::Rec(body) => Term::rec(subst(body, v, s, fv_s)),
        Term::Bot => Term::Bot,
    }
}

fn subst_clause(c: &Clause, v: &str, s: &Term, fv_s: &BTreeSet<String>) -> Clause {
    let vars = c.pattern.vars();
    if vars.iter().any(|x| x == v) || !c.body.free_vars().contains(v) {
        return c.clone();
    }
    let mut pattern = c.pattern.clone();
    let mut body = c.body.clone();
    let clashing: Vec<String> = vars.iter().filter(|x| fv_s.contains(*x)).cloned().collect();
    if !clashing.is_empty() {
        let mut avoid = body.free_vars();
        avoid.extend(fv_s.iter().cloned());
        avoid.extend(vars.iter().cloned());
        avoid.insert(v.to_string());
        for x in clashing {
            let x2 = fresh_name(&x, &avoid);
            avoid.insert(x2.clone());
            body = subst(&body, &x, &Term::Var(x2.clone()), &BTreeSet::from([x2.clone()]));
            pattern = rename_pattern_var(&pattern, &x, &x2);
        }
    }
    Clause {
        pattern,
        body: subst(&body, v, s, fv_s),
    }
}

fn rename_pattern_var(p: &Pattern, from: &str, to: &str) -> Pattern {
    match p {
        Pattern::Con(tag, ps) => Pattern::Con(*tag, ps.iter().map(|q| rename_pattern_var(q, from, to)).collect()),
        Pattern::Var(x) if x == from => Pattern::Var(to.to_string()),
        Pattern::Fun(Some(x)) if x == from => Pattern::Fun(Some(to.to_string())),
        other => other.clone(),
    }
}

/// Equality modulo consistent renaming of bound variables.
pub fn alpha_eq(t1: &Term, t2: &Term) -> bool {
    alpha(t1, t2, &mut Vec::new(), &mut Vec::new())
}

fn alpha(t1: &Term, t2: &Term, env1: &mut Vec<String>, env2: &mut Vec<String>) -> bool {
    match (t1, t2) {
        (Term::Var(x), Term::Var(y)) => {
            let i = env1.iter().rposition(|b| b == x);
            let j = env2.iter().rposition(|b| b == y);
            match (i, j) {
                (Some(i), Some(j)) => env1.len() - i == env2.len() - j,
                (None, None) => x == y,
                _ => false,
            }
        }
        (Term::Con(a, ks), Term::Con(b, ls)) => {
            a == b && ks.len() == ls.len() && ks.iter().zip(ls).all(|(k, l)| alpha(k, l, env1, env2))
        }
        (Term::Lam(x, b1), Term::Lam(y, b2)) => {
            env1.push(x.clone());
            env2.push(y.clone());
            let r = alpha(b1, b2, env1, env2);
            env1.pop();
            env2.pop();
            r
        }
        (Term::App(f1, a1), Term::App(f2, a2)) => alpha(f1, f2, env1, env2) && alpha(a1, a2, env1, env2),
        (Term::Case(s1, c1), Term::Case(s2, c2)) => {
            if !alpha(s1, s2, env1, env2) || c1.len() != c2.len() {
                return false;
            }
            c1.iter().zip(c2).all(|(a, b)| {
                if !same_pattern_shape(&a.pattern, &b.pattern) {
                    return false;
                }
                let va = a.pattern.vars();
                let vb = b.pattern.vars();
                let n = va.len();
                env1.extend(va);
                env2.extend(vb);
                let r = alpha(&a.body, &b.body, env1, env2);
                env1.truncate(env1.len() - n);
                env2.truncate(env2.len() - n);
                r
            })
        }
        (Term::Rec(b1), Term::Rec(b2)) => alpha(b1, b2, env1, env2),
        (Term::Bot, Term::Bot) => true,
        _ => false,
    }
}

fn same_pattern_shape(p: &Pattern, q: &Pattern) -> bool {
    match (p, q) {
        (Pattern::Con(a, ps), Pattern::Con(b, qs)) => {
            a == b && ps.len() == qs.len() && ps.iter().zip(qs).all(|(x, y)| same_pattern_shape(x, y))
        }
        (Pattern::Var(_), Pattern::Var(_)) | (Pattern::Wild, Pattern::Wild) => true,
        (Pattern::Fun(a), Pattern::Fun(b)) => a.is_some() == b.is_some(),
        _ => false,
    }
}

/// Renders a term in the concrete syntax accepted by the parser.
pub fn print_term(t: &Term) -> String {
    t.to_string()
}

#[derive(Clone, Copy, PartialEq)]
enum Ctx {
    Top,
    Fun,
    Arg,
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term, ctx: Ctx) -> fmt::Result {
    match t {
        Term::Var(x) => write!(f, "{x}"),
        Term::Bot => write!(f, "bot"),
        Term::Con(tag, kids) => {
            write!(f, "{}", tag.name())?;
            if !kids.is_empty() {
                write!(f, "(")?;
                for (i, k) in kids.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write_term(f, k, Ctx::Top)?;
                }
                write!(f, ")")?;
            }
            Ok(())
        }
        Term::Lam(x, body) => {
            let paren = ctx != Ctx::Top;
            if paren {
                write!(f, "(")?;
            }
            write!(f, "fun {x} -> ")?;
            write_term(f, body, Ctx::Top)?;
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        }
        Term::Rec(body) => {
            let paren = ctx != Ctx::Top;
            if paren {
                write!(f, "(")?;
            }
            write!(f, "rec ")?;
            write_term(f, body, Ctx::Arg)?;
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        }
        Term::App(fun, arg) => {
            let paren = ctx == Ctx::Arg;
            if paren {
                write!(f, "(")?;
            }
            write_term(f, fun, Ctx::Fun)?;
            write!(f, " ")?;
            write_term(f, arg, Ctx::Arg)?;
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        }
        Term::Case(s, clauses) => {
            write!(f, "case ")?;
            write_term(f, s, Ctx::Top)?;
            write!(f, " of {{ ")?;
            for (i, c) in clauses.iter().enumerate() {
                if i > 0 {
                    write!(f, "; ")?;
                }
                write!(f, "{} -> ", c.pattern)?;
                write_term(f, &c.body, Ctx::Top)?;
            }
            write!(f, " }}")
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, Ctx::Top)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Wild => write!(f, "_"),
            Pattern::Var(x) => write!(f, "{x}"),
            Pattern::Fun(Some(x)) => write!(f, "fun({x})"),
            Pattern::Fun(None) => write!(f, "fun(_)"),
            Pattern::Con(tag, ps) => {
                write!(f, "{}", tag.name())?;
                if !ps.is_empty() {
                    write!(f, "(")?;
                    for (i, p) in ps.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{p}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}
