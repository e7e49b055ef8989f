//! The realiser library: an embedded prelude of programs in the term
//! language, checked at load time, plus helpers to run them.

use crate::engine::{Engine, EngineError, Observation, Policy};
use crate::parse::{parse_program, ParseError};
use crate::terms::{substitute, Tag, Term};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

/// The prelude source shipped with the library.
pub const PRELUDE_SRC: &str = include_str!("prelude.cfp");

/// A prelude entry that failed to load.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreludeError {
    #[error("prelude entry `{entry}`: {err}")]
    Parse { entry: String, err: ParseError },
    #[error("prelude entry `{entry}`: unbound name `{name}`")]
    Unbound { entry: String, name: String },
    #[error("prelude entry `{0}` is defined twice")]
    Duplicate(String),
    #[error("unknown prelude entry `{0}`")]
    Unknown(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// A checked list of definitions, each closed relative to the earlier ones.
#[derive(Debug, Clone)]
pub struct Prelude {
    defs: Vec<(String, Term)>,
    index: HashMap<String, usize>,
}

fn entry_at(src: &str, line: usize) -> String {
    src.lines()
        .take(line)
        .filter_map(|l| l.trim_start().strip_prefix("def "))
        .filter_map(|rest| rest.split_whitespace().next())
        .last()
        .unwrap_or("<start>")
        .to_string()
}

impl Prelude {
    /// Loads the embedded prelude.
    pub fn load() -> Result<Prelude, PreludeError> {
        Prelude::from_source(PRELUDE_SRC)
    }

    /// Parses and checks a prelude source. Every definition may mention only
    /// earlier definitions, and every case must pass the compatibility check.
    pub fn from_source(src: &str) -> Result<Prelude, PreludeError> {
        let prog = parse_program(src).map_err(|err| PreludeError::Parse { entry: entry_at(src, err.line), err })?;
        let mut index = HashMap::new();
        for (i, (name, body)) in prog.defs.iter().enumerate() {
            if let Some(x) = body.free_vars().into_iter().find(|x| !index.contains_key(x)) {
                return Err(PreludeError::Unbound { entry: name.clone(), name: x });
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(PreludeError::Duplicate(name.clone()));
            }
        }
        Ok(Prelude { defs: prog.defs, index })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.iter().map(|(n, _)| n.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// The body of a definition as written, possibly mentioning earlier names.
    pub fn source_of(&self, name: &str) -> Option<&Term> {
        self.index.get(name).map(|&i| &self.defs[i].1)
    }

    /// A closed term for the named program, with every earlier definition it
    /// uses substituted in.
    pub fn get_program(&self, name: &str) -> Result<Term, PreludeError> {
        let mut memo = HashMap::new();
        self.closed(name, &mut memo)
    }

    fn closed(&self, name: &str, memo: &mut HashMap<String, Term>) -> Result<Term, PreludeError> {
        if let Some(t) = memo.get(name) {
            return Ok(t.clone());
        }
        let body = self.source_of(name).ok_or_else(|| PreludeError::Unknown(name.to_string()))?;
        let mut t = body.clone();
        let free: HashSet<String> = body.free_vars().into_iter().collect();
        for x in free {
            let v = self.closed(&x, memo)?;
            t = substitute(&t, &x, &v);
        }
        memo.insert(name.to_string(), t.clone());
        Ok(t)
    }

    /// A fresh engine with every definition installed as a shared global.
    pub fn engine(&self) -> Result<Engine, PreludeError> {
        let mut e = Engine::new();
        for (name, body) in &self.defs {
            e.define(name, body)?;
        }
        Ok(e)
    }

    /// Applies the named program to the arguments and observes the result in
    /// a fresh engine.
    pub fn run(
        &self,
        name: &str,
        args: &[Term],
        depth: usize,
        fuel_per_node: u64,
        policy: Policy,
    ) -> Result<Observation, PreludeError> {
        if !self.contains(name) {
            return Err(PreludeError::Unknown(name.to_string()));
        }
        let t = args.iter().fold(Term::var(name), |f, a| Term::app(f, a.clone()));
        let mut e = self.engine()?;
        Ok(e.observe(&t, depth, fuel_per_node, policy)?)
    }
}

/// A signed digit as a term: -1 is `Left(Left(Nil))`, +1 is
/// `Left(Right(Nil))` and 0 is `Right(Nil)`.
pub fn sd_digit_term(d: i8) -> Term {
    match d {
        -1 => Term::left(Term::left(Term::nil())),
        1 => Term::left(Term::right(Term::nil())),
        0 => Term::right(Term::nil()),
        _ => panic!("signed digit out of range: {d}"),
    }
}

/// A Gray cell value as a term: -1 is `Left(Nil)` and +1 is `Right(Nil)`.
pub fn gray_cell_term(c: i8) -> Term {
    match c {
        -1 => Term::left(Term::nil()),
        1 => Term::right(Term::nil()),
        _ => panic!("Gray cell out of range: {c}"),
    }
}

/// Reads a signed digit back from a fully observed term.
pub fn sd_digit_of(o: &Observation) -> Option<i8> {
    use Observation::Con;
    match o {
        Con(Tag::Left, k) => match k.as_slice() {
            [Con(Tag::Left, n)] if is_nil(n) => Some(-1),
            [Con(Tag::Right, n)] if is_nil(n) => Some(1),
            _ => None,
        },
        Con(Tag::Right, n) if is_nil(n) => Some(0),
        _ => None,
    }
}

/// Reads a Gray cell back from a fully observed term.
pub fn gray_cell_of(o: &Observation) -> Option<i8> {
    match o {
        Observation::Con(Tag::Left, n) if is_nil(n) => Some(-1),
        Observation::Con(Tag::Right, n) if is_nil(n) => Some(1),
        _ => None,
    }
}

fn is_nil(kids: &[Observation]) -> bool {
    matches!(kids, [Observation::Con(Tag::Nil, k)] if k.is_empty())
}
