//! Command-line front end: encode rationals, convert streams through the
//! engine, evaluate `.cfp` programs, inspect compact-set trees and query the
//! prefix oracles.

use ambreal::compact_codec::{
    gray_tree_value_set, grayk_to_sdk, grayk_truncate, hausdorff_trunc, sdk_to_grayk, sdk_truncate,
    tree_value_set, SdTree,
};
use ambreal::interval::{in_unit, parse_interval_set, parse_rational, IntervalSet, Rational};
use ambreal::parse::parse_program;
use ambreal::real_codec::{
    extract_gray, extract_sd, gray_encode_stream, gray_prefix_set, inject_gray, inject_sd,
    parse_gray_list, parse_sd_list, parse_stream, render_cells, render_digits, sd_encode_stream,
    sd_prefix_interval, sd_value, CodecError, EPStream, GCell, SDigit, Wrap,
};
use ambreal::realisers::Prelude;
use ambreal::{Observation, Policy, Term};
use clap::{Parser, Subcommand, ValueEnum};
use std::fmt::Display;
use std::process::ExitCode;

const DEFAULT_FUEL: u64 = 1_000_000;
const DEFAULT_DEPTH: usize = 16;
const DEFAULT_DIGITS: usize = 16;

#[derive(Parser)]
#[command(name = "ambreal", version, about = "Exact real codes and compact-set trees over a calculus with Amb")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Rep {
    Sd,
    Gray,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TreeRep {
    Sdk,
    Grayk,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TreeAction {
    Encode,
    Convert,
    Value,
    Dist,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Raw,
    Resolving,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the canonical code prefix of a rational and the exact hull it denotes.
    Encode {
        #[arg(allow_hyphen_values = true)]
        value: Option<String>,
        rep: Option<Rep>,
        digits: Option<usize>,
        #[arg(long = "value", allow_hyphen_values = true)]
        value_flag: Option<String>,
        #[arg(long = "rep")]
        rep_flag: Option<Rep>,
        #[arg(long = "digits")]
        digits_flag: Option<usize>,
    },
    /// Convert a stream between representations by running the engine realisers.
    Convert {
        from: Option<Rep>,
        to: Option<Rep>,
        #[arg(long = "from")]
        from_flag: Option<Rep>,
        #[arg(long = "to")]
        to_flag: Option<Rep>,
        #[arg(long, allow_hyphen_values = true)]
        value: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        stream: Option<String>,
        #[arg(long, default_value_t = DEFAULT_DIGITS)]
        digits: usize,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Observe `main` of a program file under the prelude.
    Eval {
        file: String,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = PolicyArg::Resolving)]
        policy: PolicyArg,
    },
    /// Build, convert, evaluate or compare truncated trees of a compact set.
    Tree {
        #[arg(allow_hyphen_values = true)]
        set: Option<String>,
        rep: Option<TreeRep>,
        depth: Option<usize>,
        action: Option<TreeAction>,
        #[arg(long = "set", allow_hyphen_values = true)]
        set_flag: Option<String>,
        #[arg(long = "rep")]
        rep_flag: Option<TreeRep>,
        #[arg(long = "depth")]
        depth_flag: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        other: Option<String>,
    },
    /// Print the exact set denoted by a finite code prefix.
    Oracle {
        #[arg(allow_hyphen_values = true)]
        prefix: Option<String>,
        rep: Option<Rep>,
        #[arg(long = "rep")]
        rep_flag: Option<Rep>,
    },
}

/// A finished command: the lines to print and whether the answer is
/// unresolved.
struct Report {
    lines: Vec<String>,
    unresolved: bool,
}

impl Report {
    fn done(lines: Vec<String>) -> Report {
        Report { lines, unresolved: false }
    }
}

/// A usage, parse or domain error.
struct Failure(String);

impl<E: Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure(e.to_string())
    }
}

type Outcome = Result<Report, Failure>;

fn pick<T>(positional: Option<T>, flag: Option<T>, name: &str) -> Result<T, Failure> {
    match (positional, flag) {
        (Some(_), Some(_)) => Err(Failure(format!("{name} given both positionally and as --{name}"))),
        (Some(v), None) | (None, Some(v)) => Ok(v),
        (None, None) => Err(Failure(format!("missing {name}"))),
    }
}

fn parse_value(s: &str) -> Result<Rational, Failure> {
    let x = parse_rational(s).ok_or_else(|| Failure(format!("cannot parse rational `{s}`")))?;
    if !in_unit(&x) {
        return Err(CodecError::Domain(x).into());
    }
    Ok(x)
}

fn parse_set(s: &str) -> Result<IntervalSet, Failure> {
    let k = parse_interval_set(s).ok_or_else(|| Failure(format!("cannot parse compact set `{s}`")))?;
    if k.is_empty() {
        return Err(Failure("the compact set is empty".to_string()));
    }
    let (lo, hi) = k.hull().expect("nonempty");
    if !in_unit(&lo) || !in_unit(&hi) {
        return Err(Failure(format!("compact set `{s}` leaves [-1,1]")));
    }
    Ok(k)
}

fn hull_line(set: &IntervalSet) -> String {
    let (lo, hi) = set.hull().expect("prefix sets are nonempty");
    format!("[{lo},{hi}]")
}

fn encode(value: &str, rep: Rep, digits: usize) -> Outcome {
    let x = parse_value(value)?;
    let lines = match rep {
        Rep::Sd => {
            let w = sd_encode_stream(&x)?.prefix(digits);
            vec![render_digits(&w), hull_line(&sd_prefix_interval(&w))]
        }
        Rep::Gray => {
            let w = gray_encode_stream(&x)?.prefix(digits);
            vec![render_digits(&w), hull_line(&gray_prefix_set(&w))]
        }
    };
    Ok(Report::done(lines))
}

enum Input {
    Sd(EPStream<SDigit>),
    Gray(EPStream<GCell>),
}

fn convert_input(from: Rep, value: Option<String>, stream: Option<String>) -> Result<Input, Failure> {
    match (value, stream) {
        (Some(_), Some(_)) => Err(Failure("give either --value or --stream, not both".to_string())),
        (None, None) => Err(Failure("missing --value or --stream".to_string())),
        (Some(v), None) => {
            let x = parse_value(&v)?;
            Ok(match from {
                Rep::Sd => Input::Sd(sd_encode_stream(&x)?),
                Rep::Gray => Input::Gray(gray_encode_stream(&x)?),
            })
        }
        (None, Some(s)) => Ok(match from {
            Rep::Sd => Input::Sd(parse_stream(&s, parse_sd_list)?),
            Rep::Gray => Input::Gray(parse_stream(&s, parse_gray_list)?),
        }),
    }
}

fn convert(input: Input, to: Rep, digits: usize, fuel: u64) -> Outcome {
    let prelude = Prelude::load()?;
    match (input, to) {
        (Input::Sd(s), Rep::Sd) => Ok(Report::done(vec![render_digits(&s.prefix(digits))])),
        (Input::Gray(s), Rep::Gray) => Ok(Report::done(vec![render_digits(&s.prefix(digits))])),
        (Input::Sd(s), Rep::Gray) => {
            let mut e = prelude.engine()?;
            let t = Term::app(Term::var("sd2gray"), inject_sd(&s, Wrap::Star));
            let cells = extract_gray(&mut e, &t, digits, fuel)?;
            let truth = gray_encode_stream(&sd_value(&s))?.prefix(digits);
            let unresolved = cells.iter().zip(&truth).any(|(c, t)| c.is_none() && *t != GCell::Bot);
            Ok(Report { lines: vec![render_cells(&cells)], unresolved })
        }
        (Input::Gray(s), Rep::Sd) => {
            let mut e = prelude.engine()?;
            let t = Term::app(Term::var("gray2sd"), inject_gray(&s, Wrap::Star));
            let got = extract_sd(&mut e, &t, digits, fuel, Wrap::Star)?;
            let unresolved = got.iter().any(Option::is_none);
            Ok(Report { lines: vec![render_cells(&got)], unresolved })
        }
    }
}

fn eval(file: &str, fuel: u64, depth: usize, policy: PolicyArg) -> Outcome {
    let src = std::fs::read_to_string(file).map_err(|e| Failure(format!("{file}: {e}")))?;
    let prog = parse_program(&src).map_err(|e| Failure(format!("{file}:{e}")))?;
    let main = prog.main.ok_or_else(|| Failure(format!("{file}: no `main` definition")))?;
    let mut e = Prelude::load()?.engine()?;
    for (name, body) in &prog.defs {
        e.define(name, body)?;
    }
    let policy = match policy {
        PolicyArg::Raw => Policy::Raw,
        PolicyArg::Resolving => Policy::Resolving,
    };
    let o = e.observe(&main, depth, fuel, policy)?;
    Ok(Report { unresolved: o == Observation::Unresolved, lines: vec![o.to_string()] })
}

/// The signed-digit tree of `k` to depth `n`, obtained from the Gray tree
/// when `rep` is `Grayk`.
fn sd_tree_via(k: &IntervalSet, rep: TreeRep, n: usize) -> Result<SdTree, Failure> {
    Ok(match rep {
        TreeRep::Sdk => sdk_truncate(k, n)?,
        TreeRep::Grayk => grayk_to_sdk(&grayk_truncate(k, 2 * n + 2)?, n)?,
    })
}

fn tree(k: &IntervalSet, rep: TreeRep, n: usize, action: TreeAction, other: Option<String>) -> Outcome {
    if action != TreeAction::Dist && other.is_some() {
        return Err(Failure("--other is only used by the dist action".to_string()));
    }
    let line = match (action, rep) {
        (TreeAction::Encode, TreeRep::Sdk) => sdk_truncate(k, n)?.dump(),
        (TreeAction::Encode, TreeRep::Grayk) => grayk_truncate(k, n)?.dump(n),
        (TreeAction::Convert, TreeRep::Sdk) => sdk_to_grayk(&sdk_truncate(k, n)?).dump(n),
        (TreeAction::Convert, TreeRep::Grayk) => sd_tree_via(k, TreeRep::Grayk, n)?.dump(),
        (TreeAction::Value, TreeRep::Sdk) => tree_value_set(&sdk_truncate(k, n)?, n)?.to_string(),
        (TreeAction::Value, TreeRep::Grayk) => gray_tree_value_set(&grayk_truncate(k, n)?, n)?.to_string(),
        (TreeAction::Dist, rep) => {
            let other = other.ok_or_else(|| Failure("the dist action needs --other".to_string()))?;
            let l = parse_set(&other)?;
            hausdorff_trunc(&sd_tree_via(k, rep, n)?, &sd_tree_via(&l, rep, n)?, n)?.to_string()
        }
    };
    Ok(Report::done(vec![line]))
}

fn oracle(prefix: &str, rep: Rep) -> Outcome {
    let set = match rep {
        Rep::Sd => sd_prefix_interval(&parse_sd_list(prefix)?),
        Rep::Gray => gray_prefix_set(&parse_gray_list(prefix)?),
    };
    Ok(Report::done(vec![set.to_string()]))
}

fn run(cmd: Cmd) -> Outcome {
    match cmd {
        Cmd::Encode { value, rep, digits, value_flag, rep_flag, digits_flag } => {
            let value = pick(value, value_flag, "value")?;
            let rep = pick(rep, rep_flag, "rep")?;
            let digits = pick(digits, digits_flag, "digits").unwrap_or(DEFAULT_DIGITS);
            encode(&value, rep, digits)
        }
        Cmd::Convert { from, to, from_flag, to_flag, value, stream, digits, fuel } => {
            let from = pick(from, from_flag, "from")?;
            let to = pick(to, to_flag, "to")?;
            convert(convert_input(from, value, stream)?, to, digits, fuel)
        }
        Cmd::Eval { file, fuel, depth, policy } => eval(&file, fuel, depth, policy),
        Cmd::Tree { set, rep, depth, action, set_flag, rep_flag, depth_flag, other } => {
            let k = parse_set(&pick(set, set_flag, "set")?)?;
            let rep = pick(rep, rep_flag, "rep")?;
            let depth = pick(depth, depth_flag, "depth").unwrap_or(DEFAULT_DEPTH);
            tree(&k, rep, depth, action.unwrap_or(TreeAction::Encode), other)
        }
        Cmd::Oracle { prefix, rep, rep_flag } => oracle(&prefix.unwrap_or_default(), pick(rep, rep_flag, "rep")?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match ambreal::with_large_stack(move || run(cli.cmd)) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            ExitCode::from(u8::from(report.unresolved))
        }
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
