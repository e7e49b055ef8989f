//! Concrete syntax: a hand-written lexer and recursive-descent parser for
//! terms and for `.cfp` program files.
//!
//! ```text
//! file    := { "def" name "=" term ";" } [ "main" "=" term ";" ]
//! term    := "fun" name "->" term | "rec" term | app
//! app     := atom { atom }
//! atom    := name | "bot" | Nil | Left "(" term ")" | Right "(" term ")"
//!          | Pair "(" term "," term ")" | Amb "(" term "," term ")"
//!          | "(" term ")" | "case" term "of" "{" clause { ";" clause } [";"] "}"
//! clause  := pattern "->" term
//! pattern := "_" | name | "fun" "(" (name | "_") ")" | Constructor [ "(" pattern, … ")" ]
//! ```
//!
//! Line comments start with `--`.

use crate::compat::check_compatibility;
use crate::terms::{Clause, Pattern, Tag, Term};
use std::fmt;
use thiserror::Error;

/// A syntax, linearity or compatibility error with its source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

/// A parsed `.cfp` file.
#[derive(Debug, Clone, Default)]
pub struct Program {
    pub defs: Vec<(String, Term)>,
    pub main: Option<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Con(Tag),
    Fun,
    Case,
    Of,
    Rec,
    Bot,
    Def,
    Main,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Arrow,
    Eq,
    Underscore,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "name `{s}`"),
            Tok::Con(t) => write!(f, "constructor `{}`", t.name()),
            Tok::Fun => write!(f, "`fun`"),
            Tok::Case => write!(f, "`case`"),
            Tok::Of => write!(f, "`of`"),
            Tok::Rec => write!(f, "`rec`"),
            Tok::Bot => write!(f, "`bot`"),
            Tok::Def => write!(f, "`def`"),
            Tok::Main => write!(f, "`main`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Underscore => write!(f, "`_`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut advance = |n: usize, i: &mut usize| {
            for _ in 0..n {
                if chars[*i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                *i += 1;
            }
        };
        if c.is_whitespace() {
            advance(1, &mut i);
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                advance(1, &mut i);
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            '=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(tok) = single {
            advance(1, &mut i);
            out.push(Spanned { tok, line: l0, col: c0 });
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            advance(2, &mut i);
            out.push(Spanned { tok: Tok::Arrow, line: l0, col: c0 });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                advance(1, &mut i);
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.as_str() {
                "_" => Tok::Underscore,
                "fun" => Tok::Fun,
                "case" => Tok::Case,
                "of" => Tok::Of,
                "rec" => Tok::Rec,
                "bot" => Tok::Bot,
                "def" => Tok::Def,
                "main" => Tok::Main,
                _ => {
                    if word.starts_with(|ch: char| ch.is_uppercase()) {
                        match Tag::from_name(&word) {
                            Some(tag) => Tok::Con(tag),
                            None => {
                                return Err(ParseError {
                                    line: l0,
                                    col: c0,
                                    msg: format!("unknown constructor `{word}`"),
                                })
                            }
                        }
                    } else {
                        Tok::Ident(word)
                    }
                }
            };
            out.push(Spanned { tok, line: l0, col: c0 });
            continue;
        }
        return Err(ParseError {
            line: l0,
            col: c0,
            msg: format!("unexpected character `{c}`"),
        });
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn err<T>(&self, msg: String) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError { line, col, msg })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {want}, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected a name, found {other}")),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Tok::Fun => {
                self.bump();
                let x = self.ident()?;
                self.expect(Tok::Arrow)?;
                let body = self.term()?;
                Ok(Term::Lam(x, Box::new(body)))
            }
            Tok::Rec => {
                self.bump();
                let body = self.term()?;
                Ok(Term::rec(body))
            }
            _ => self.app(),
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_) | Tok::Bot | Tok::Con(_) | Tok::LParen | Tok::Case | Tok::Fun | Tok::Rec
        )
    }

    fn app(&mut self) -> Result<Term, ParseError> {
        let mut t = self.atom()?;
        while self.starts_atom() {
            let arg = match self.peek() {
                Tok::Fun | Tok::Rec => self.term()?,
                _ => self.atom()?,
            };
            t = Term::app(t, arg);
        }
        Ok(t)
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.bump();
                Ok(Term::Var(x))
            }
            Tok::Bot => {
                self.bump();
                Ok(Term::Bot)
            }
            Tok::Con(tag) => {
                self.bump();
                let mut kids = Vec::new();
                if tag.arity() > 0 {
                    self.expect(Tok::LParen)?;
                    for i in 0..tag.arity() {
                        if i > 0 {
                            self.expect(Tok::Comma)?;
                        }
                        kids.push(self.term()?);
                    }
                    self.expect(Tok::RParen)?;
                }
                Ok(Term::Con(tag, kids))
            }
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Case => {
                let (line, col) = self.here();
                self.bump();
                let scrutinee = self.term()?;
                self.expect(Tok::Of)?;
                self.expect(Tok::LBrace)?;
                let mut clauses = vec![self.clause()?];
                while *self.peek() == Tok::Semi {
                    self.bump();
                    if *self.peek() == Tok::RBrace {
                        break;
                    }
                    clauses.push(self.clause()?);
                }
                self.expect(Tok::RBrace)?;
                if let Err(report) = check_compatibility(&clauses) {
                    return Err(ParseError {
                        line,
                        col,
                        msg: report.to_string(),
                    });
                }
                Ok(Term::Case(Box::new(scrutinee), clauses))
            }
            other => self.err(format!("expected a term, found {other}")),
        }
    }

    fn clause(&mut self) -> Result<Clause, ParseError> {
        let (line, col) = self.here();
        let pattern = self.pattern()?;
        if let Some(x) = pattern.nonlinear_var() {
            return Err(ParseError {
                line,
                col,
                msg: format!("nonlinear pattern: variable `{x}` occurs more than once"),
            });
        }
        self.expect(Tok::Arrow)?;
        let body = self.term()?;
        Ok(Clause { pattern, body })
    }

    fn pattern(&mut self) -> Result<Pattern, ParseError> {
        match self.peek().clone() {
            Tok::Underscore => {
                self.bump();
                Ok(Pattern::Wild)
            }
            Tok::Ident(x) => {
                self.bump();
                Ok(Pattern::Var(x))
            }
            Tok::Fun => {
                self.bump();
                self.expect(Tok::LParen)?;
                let name = match self.bump() {
                    Tok::Ident(x) => Some(x),
                    Tok::Underscore => None,
                    other => {
                        self.pos -= 1;
                        return self.err(format!("expected a name or `_`, found {other}"));
                    }
                };
                self.expect(Tok::RParen)?;
                Ok(Pattern::Fun(name))
            }
            Tok::Con(tag) => {
                self.bump();
                let mut ps = Vec::new();
                if tag.arity() > 0 {
                    self.expect(Tok::LParen)?;
                    for i in 0..tag.arity() {
                        if i > 0 {
                            self.expect(Tok::Comma)?;
                        }
                        ps.push(self.pattern()?);
                    }
                    self.expect(Tok::RParen)?;
                }
                Ok(Pattern::Con(tag, ps))
            }
            other => self.err(format!("expected a pattern, found {other}")),
        }
    }
}

/// Parses a single term.
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let t = p.term()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {} after term", p.peek()));
    }
    Ok(t)
}

/// Parses a `.cfp` file: definitions followed by an optional `main`.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let mut prog = Program::default();
    loop {
        match p.peek() {
            Tok::Def => {
                p.bump();
                let name = p.ident()?;
                p.expect(Tok::Eq)?;
                let body = p.term()?;
                p.expect(Tok::Semi)?;
                prog.defs.push((name, body));
            }
            Tok::Main => {
                p.bump();
                p.expect(Tok::Eq)?;
                prog.main = Some(p.term()?);
                p.expect(Tok::Semi)?;
                if *p.peek() != Tok::Eof {
                    return p.err(format!("unexpected {} after `main`", p.peek()));
                }
                return Ok(prog);
            }
            Tok::Eof => return Ok(prog),
            other => return p.err(format!("expected `def` or `main`, found {other}")),
        }
    }
}
