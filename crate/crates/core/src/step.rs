//! The deterministic small-step relation on terms, by textual substitution.
//!
//! Values and `bot` step to themselves. It is slow but simple, and serves as
//! the reference semantics that the graph engine is checked against.

use crate::engine::EngineError;
use crate::terms::{substitute, Pattern, Term};

fn match_term(p: &Pattern, t: &Term, binds: &mut Vec<(String, Term)>) -> bool {
    match p {
        Pattern::Wild => true,
        Pattern::Var(x) => {
            binds.push((x.clone(), t.clone()));
            true
        }
        Pattern::Fun(x) => match t {
            Term::Lam(..) => {
                if let Some(x) = x {
                    binds.push((x.clone(), t.clone()));
                }
                true
            }
            _ => false,
        },
        Pattern::Con(tag, ps) => match t {
            Term::Con(u, kids) if u == tag => ps.iter().zip(kids).all(|(q, k)| match_term(q, k, binds)),
            _ => false,
        },
    }
}

fn step(t: &Term) -> Term {
    match t {
        Term::Var(_) | Term::Lam(..) | Term::Bot => t.clone(),
        Term::Con(tag, kids) => Term::Con(*tag, kids.iter().map(step).collect()),
        Term::Rec(m) => Term::app((**m).clone(), t.clone()),
        Term::App(f, a) => match &**f {
            Term::Lam(x, body) => substitute(body, x, a),
            _ => Term::app(step(f), (**a).clone()),
        },
        Term::Case(s, clauses) => {
            for c in clauses {
                let mut binds = Vec::new();
                if match_term(&c.pattern, s, &mut binds) {
                    return binds.iter().fold(c.body.clone(), |acc, (x, v)| substitute(&acc, x, v));
                }
            }
            Term::case(step(s), clauses.clone())
        }
    }
}

/// The unique successor of a closed term under the small-step relation.
pub fn det_step(t: &Term) -> Result<Term, EngineError> {
    if let Some(x) = t.free_vars().into_iter().next() {
        return Err(EngineError::OpenTerm(x));
    }
    Ok(step(t))
}

/// Whether a term is in weak head normal form.
pub fn is_whnf(t: &Term) -> bool {
    matches!(t, Term::Con(..) | Term::Lam(..))
}

/// Iterates the step relation at the root until a weak head normal form is
/// reached. Returns the value and the number of steps taken, or `None` once
/// `fuel` steps have been spent.
pub fn textual_whnf(t: &Term, fuel: u64) -> Result<Option<(Term, u64)>, EngineError> {
    let mut cur = t.clone();
    if let Some(x) = cur.free_vars().into_iter().next() {
        return Err(EngineError::OpenTerm(x));
    }
    for used in 0..=fuel {
        if is_whnf(&cur) {
            return Ok(Some((cur, used)));
        }
        if used == fuel {
            break;
        }
        cur = step(&cur);
    }
    Ok(None)
}
