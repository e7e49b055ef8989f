//! Clause compatibility: any two clauses whose patterns unify must have
//! α-equal bodies under the most general unifier.

use crate::terms::{alpha_eq, substitute, Clause, Pattern, Term};
use std::fmt;

/// A pair of clauses that overlap with different results.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incompatibility {
    pub first: usize,
    pub second: usize,
    /// Bindings of the first clause's variables, then the second's.
    pub mgu: Vec<(String, Term)>,
    pub first_body: Term,
    pub second_body: Term,
}

impl fmt::Display for Incompatibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "incompatible clauses {} and {}: mgu {{", self.first, self.second)?;
        for (i, (x, t)) in self.mgu.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x} ↦ {t}")?;
        }
        write!(f, "}} gives `{}` versus `{}`", self.first_body, self.second_body)
    }
}

impl std::error::Error for Incompatibility {}

/// The most general common instance of two linear patterns with disjoint
/// variables, as a term over fresh variables, plus the bindings of each
/// side's variables.
#[derive(Debug, Clone)]
pub struct Unifier {
    pub instance: Term,
    pub left: Vec<(String, Term)>,
    pub right: Vec<(String, Term)>,
}

struct Fresh(usize);

impl Fresh {
    fn next(&mut self) -> Term {
        self.0 += 1;
        Term::Var(format!("%{}", self.0))
    }
}

/// Computes the most general unifier of two linear patterns, or `None` if
/// they have no common instance.
pub fn unify_patterns(p: &Pattern, q: &Pattern) -> Option<Unifier> {
    let mut fresh = Fresh(0);
    let mut left = Vec::new();
    let mut right = Vec::new();
    let instance = unify(p, q, &mut fresh, &mut left, &mut right)?;
    Some(Unifier { instance, left, right })
}

fn unify(
    p: &Pattern,
    q: &Pattern,
    fresh: &mut Fresh,
    left: &mut Vec<(String, Term)>,
    right: &mut Vec<(String, Term)>,
) -> Option<Term> {
    match (p, q) {
        (Pattern::Wild, _) => Some(instantiate(q, fresh, right)),
        (_, Pattern::Wild) => Some(instantiate(p, fresh, left)),
        (Pattern::Var(x), _) => {
            let t = instantiate(q, fresh, right);
            left.push((x.clone(), t.clone()));
            Some(t)
        }
        (_, Pattern::Var(y)) => {
            let t = instantiate(p, fresh, left);
            right.push((y.clone(), t.clone()));
            Some(t)
        }
        (Pattern::Fun(x), Pattern::Fun(y)) => {
            let z = fresh.next();
            if let Some(x) = x {
                left.push((x.clone(), z.clone()));
            }
            if let Some(y) = y {
                right.push((y.clone(), z.clone()));
            }
            Some(z)
        }
        (Pattern::Con(a, ps), Pattern::Con(b, qs)) => {
            if a != b {
                return None;
            }
            let kids = ps
                .iter()
                .zip(qs)
                .map(|(x, y)| unify(x, y, fresh, left, right))
                .collect::<Option<Vec<_>>>()?;
            Some(Term::Con(*a, kids))
        }
        (Pattern::Fun(_), Pattern::Con(..)) | (Pattern::Con(..), Pattern::Fun(_)) => None,
    }
}

fn instantiate(p: &Pattern, fresh: &mut Fresh, binds: &mut Vec<(String, Term)>) -> Term {
    match p {
        Pattern::Wild | Pattern::Fun(None) => fresh.next(),
        Pattern::Var(x) | Pattern::Fun(Some(x)) => {
            let z = fresh.next();
            binds.push((x.clone(), z.clone()));
            z
        }
        Pattern::Con(tag, ps) => Term::Con(*tag, ps.iter().map(|q| instantiate(q, fresh, binds)).collect()),
    }
}

fn apply_bindings(t: &Term, binds: &[(String, Term)]) -> Term {
    binds.iter().fold(t.clone(), |acc, (x, s)| substitute(&acc, x, s))
}

/// Checks every pair of clauses for compatibility.
pub fn check_compatibility(clauses: &[Clause]) -> Result<(), Incompatibility> {
    for i in 0..clauses.len() {
        for j in i + 1..clauses.len() {
            let (a, b) = (&clauses[i], &clauses[j]);
            if let Some(u) = unify_patterns(&a.pattern, &b.pattern) {
                let ba = apply_bindings(&a.body, &u.left);
                let bb = apply_bindings(&b.body, &u.right);
                if !alpha_eq(&ba, &bb) {
                    let mut mgu = u.left;
                    mgu.extend(u.right);
                    return Err(Incompatibility {
                        first: i,
                        second: j,
                        mgu,
                        first_body: ba,
                        second_body: bb,
                    });
                }
            }
        }
    }
    Ok(())
}
