//! Acceptance suite: one PASS or FAIL line per criterion, with the time each
//! one took. Exits nonzero if any criterion fails.

use ambreal::compact_codec::*;
use ambreal::compat::check_compatibility;
use ambreal::interval::{hausdorff_sets, int, pow2_neg, rat, IntervalSet, Rational};
use ambreal::parse::parse_term;
use ambreal::real_codec::*;
use ambreal::realisers::Prelude;
use ambreal::{Clause, Engine, Fuel, Observation, Policy, Tag, Term};
use common::realise::{f_d_ticks, zeros_then};
use common::stepper::defined_leaves_agree;
use common::{oracle, set_oracle};
use num_traits::{Signed, Zero};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::time::{Duration, Instant};

mod common;

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

const SEED: u64 = 0x5eed_0001;

/// Ticks allowed per leading digit before `f_d` must produce its sign.
const C_FD: u64 = 128;

/// Denominator bound for the codec corpus.
const CODEC_BITS: u32 = 20;
/// Denominator bound for the engine conversion corpus.
const ENGINE_BITS: u32 = 10;

const ENGINE_CORPUS: usize = 200;
const ENGINE_DYADICS: usize = 50;
const CONVERSION_DIGITS: usize = 24;
const CONVERSION_FUEL: u64 = 1_000_000;
const BOT_FUELS: [u64; 3] = [1_000, 100_000, 10_000_000];

const PREFIX_LEN: usize = 48;
const SET_CORPUS: usize = 100;
const TREE_DEPTH: usize = 12;
const CONVERSION_DEPTH: usize = 10;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "parallel-or", budget: secs(1), run: parallel_or },
        Criterion { id: 2, name: "encoder soundness", budget: secs(10), run: encoder_soundness },
        Criterion { id: 3, name: "gray to sd via engine", budget: secs(120), run: gray_to_sd },
        Criterion { id: 4, name: "sd to gray via engine", budget: secs(120), run: sd_to_gray },
        Criterion { id: 5, name: "bot-cell independence", budget: secs(5), run: bot_cell_independence },
        Criterion { id: 6, name: "fairness bound", budget: secs(10), run: fairness },
        Criterion { id: 7, name: "compatibility checker", budget: secs(10), run: compatibility },
        Criterion { id: 8, name: "archimedean combinators", budget: secs(60), run: archimedean },
        Criterion { id: 9, name: "compact-set trees", budget: secs(30), run: compact_trees },
        Criterion { id: 10, name: "tree conversions", budget: secs(120), run: tree_conversions },
        Criterion { id: 11, name: "fuel monotonicity and commitment", budget: secs(60), run: monotonicity },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = ambreal::with_large_stack(c.run);
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {:?} budget", c.budget)),
            Err(d) => (false, d),
        };
        failed += usize::from(!ok);
        println!(
            "{} {:>2} {:<34} {:>8.2}s  {}",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            took.as_secs_f64(),
            detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_rational(rng: &mut StdRng, bits: u32) -> Rational {
    let q: i64 = rng.gen_range(1..=1i64 << bits);
    let p: i64 = rng.gen_range(-q..=q);
    rat(p, q)
}

fn random_dyadic(rng: &mut StdRng, bits: u32) -> Rational {
    let k = rng.gen_range(1..=bits);
    let q = 1i64 << k;
    rat(rng.gen_range(1 - q..q), q)
}

/// Values drawn from a proptest strategy with a fixed seed.
fn samples<S: Strategy>(s: S, n: usize) -> Vec<S::Value> {
    let mut runner = TestRunner::deterministic();
    (0..n).map(|_| s.new_tree(&mut runner).expect("strategy yields values").current()).collect()
}

fn p(src: &str) -> Term {
    parse_term(src).expect("literal term parses")
}

fn parallel_or() -> Outcome {
    let pre = Prelude::load().map_err(|e| e.to_string())?;
    let por = |arg: &str, fuel: u64| pre.run("por", &[p(arg)], 1, fuel, Policy::Resolving).map_err(|e| e.to_string());
    let tt = Observation::Con(Tag::Left, vec![Observation::Con(Tag::Nil, vec![])]);
    for arg in ["Pair(Left(Nil), bot)", "Pair(bot, Left(Nil))"] {
        let o = por(arg, 10_000)?;
        check(o == tt, || format!("por {arg} gave {o}"))?;
    }
    let o = por("Pair(bot, bot)", 1_000_000)?;
    check(o == Observation::Unresolved, || format!("por Pair(bot, bot) gave {o}"))?;
    Ok("true on either defined side at 10^4, unresolved on bot pair at 10^6".into())
}

fn encoder_soundness() -> Outcome {
    let mut rng = StdRng::seed_from_u64(SEED);
    let n = PREFIX_LEN;
    for _ in 0..500 {
        let x = random_rational(&mut rng, CODEC_BITS);
        let w = sd_encode(&x, n).map_err(|e| e.to_string())?;
        let (lo, hi) = oracle::sd_interval(&w);
        check(lo <= x && x <= hi, || format!("{x} outside its signed-digit interval"))?;
        check(&hi - &lo <= pow2_neg(n - 1), || format!("signed-digit interval of {x} too wide"))?;
        let g = gray_encode(&x, n).map_err(|e| e.to_string())?;
        let s = oracle::gray_set(&g);
        check(s.contains(&x), || format!("{x} outside its Gray set"))?;
        let d = s.diameter().expect("nonempty");
        check(d <= pow2_neg(n - 2), || format!("Gray set of {x} has diameter {d}"))?;
    }
    Ok(format!("500 rationals, n = {n}"))
}

/// The engine corpus: random rationals and dyadics in the open unit interval.
fn engine_corpus() -> Vec<Rational> {
    let mut rng = StdRng::seed_from_u64(SEED + 3);
    let mut xs: Vec<Rational> = (0..ENGINE_DYADICS).map(|_| random_dyadic(&mut rng, ENGINE_BITS)).collect();
    while xs.len() < ENGINE_CORPUS {
        let x = random_rational(&mut rng, ENGINE_BITS);
        if !oracle::is_dyadic(&x) {
            xs.push(x);
        }
    }
    xs
}

fn engine_with_prelude() -> Engine {
    Prelude::load().expect("prelude loads").engine().expect("prelude installs")
}

fn gray_to_sd() -> Outcome {
    for x in engine_corpus() {
        let mut e = engine_with_prelude();
        let input = inject_gray(&gray_encode_stream(&x).map_err(|e| e.to_string())?, Wrap::Star);
        let t = Term::app(Term::var("gray2sd"), input);
        let got = extract_sd(&mut e, &t, CONVERSION_DIGITS, CONVERSION_FUEL, Wrap::Star).map_err(|e| e.to_string())?;
        let w: Vec<SDigit> = got.iter().map_while(|d| *d).collect();
        check(w.len() == CONVERSION_DIGITS, || format!("{x}: only {} digits defined", w.len()))?;
        for i in 0..=w.len() {
            let (lo, hi) = oracle::sd_interval(&w[..i]);
            check(lo <= x && x <= hi, || format!("{x}: prefix of length {i} excludes it"))?;
        }
    }
    Ok(format!(
        "{ENGINE_CORPUS} rationals ({ENGINE_DYADICS} dyadic), {CONVERSION_DIGITS} digits each"
    ))
}

fn sd2gray_cells(x: &Rational, n: usize, fuel: u64) -> Result<Vec<Option<GCell>>, String> {
    let mut e = engine_with_prelude();
    let input = inject_sd(&sd_encode_stream(x).map_err(|e| e.to_string())?, Wrap::Star);
    let t = Term::app(Term::var("sd2gray"), input);
    extract_gray(&mut e, &t, n, fuel).map_err(|e| e.to_string())
}

fn sd_to_gray() -> Outcome {
    let n = CONVERSION_DIGITS;
    let mut bot_checks = 0;
    for x in engine_corpus() {
        let truth = oracle::tent_signs(&x, n);
        let got = sd2gray_cells(&x, n, BOT_FUELS[1])?;
        for (i, (g, t)) in got.iter().zip(&truth).enumerate() {
            match (g, t) {
                (Some(g), t) => check(g == t && *t != GCell::Bot, || format!("{x}: cell {i} is {g}, oracle {t}"))?,
                (None, GCell::Bot) => {}
                (None, _) => return Err(format!("{x}: cell {i} unresolved")),
            }
        }
        if let Some(j) = truth.iter().position(|c| *c == GCell::Bot) {
            for fuel in [BOT_FUELS[0], BOT_FUELS[2]] {
                let cell = sd2gray_cells(&x, j + 1, fuel)?[j];
                check(cell.is_none(), || format!("{x}: bot cell {j} printed {cell:?} at fuel {fuel}"))?;
            }
            bot_checks += 1;
        }
    }
    check(bot_checks >= ENGINE_DYADICS, || format!("only {bot_checks} dyadics carried a bot cell"))?;
    Ok(format!("{ENGINE_CORPUS} rationals, {bot_checks} bot cells held at 10^3, 10^5 and 10^7"))
}

fn bot_cell_independence() -> Outcome {
    let got = sd2gray_cells(&int(0), 9, 100_000)?;
    check(got[0].is_none(), || format!("cell 0 of zero resolved to {:?}", got[0]))?;
    let truth = oracle::tent_signs(&int(0), 9);
    for i in 1..9 {
        check(got[i] == Some(truth[i]), || format!("cell {i} of zero is {:?}", got[i]))?;
    }
    Ok("cells 1..8 of zero resolve past the unresolved cell 0".into())
}

fn fairness() -> Outcome {
    let terms = samples(common::term_strategy(), 2_000);
    let mut rng = StdRng::seed_from_u64(SEED + 6);
    let mut checked = 0;
    let mut worst = 0.0f64;
    for t in terms {
        if checked == 100 {
            break;
        }
        let delay: u64 = rng.gen_range(0..900);
        let a = (0..delay).fold(t, |acc, _| Term::app(Term::lam("x", Term::var("x")), acc));
        let mut probe = Fuel::new(1_000);
        match Engine::new().whnf(&a, &mut probe).map_err(|e| e.to_string())? {
            Some(w) if w.tag() != Some(Tag::Amb) => {}
            _ => continue,
        }
        let k = probe.used();
        let mut e = Engine::new();
        let mut fuel = Fuel::new(3 * k + 64);
        let r = e.resolve_amb(&Term::amb(Term::Bot, a), &mut fuel).map_err(|e| e.to_string())?;
        check(r.is_some(), || format!("Amb(bot, A) unresolved with A at {k} ticks"))?;
        worst = worst.max(fuel.used() as f64 / (3 * k + 64) as f64);
        checked += 1;
    }
    check(checked == 100, || format!("only {checked} terms reached whnf"))?;
    Ok(format!("100 terms, peak use {:.0}% of 3k + 64", worst * 100.0))
}

fn collect_cases(t: &Term, out: &mut Vec<Vec<Clause>>) {
    match t {
        Term::Case(s, cs) => {
            out.push(cs.clone());
            collect_cases(s, out);
            cs.iter().for_each(|c| collect_cases(&c.body, out));
        }
        Term::Con(_, kids) => kids.iter().for_each(|k| collect_cases(k, out)),
        Term::Lam(_, b) | Term::Rec(b) => collect_cases(b, out),
        Term::App(f, a) => {
            collect_cases(f, out);
            collect_cases(a, out);
        }
        Term::Var(_) | Term::Bot => {}
    }
}

fn compatibility() -> Outcome {
    let pre = Prelude::load().map_err(|e| e.to_string())?;
    let mut cases = Vec::new();
    for name in pre.names() {
        collect_cases(pre.source_of(name).expect("listed"), &mut cases);
    }
    for cs in &cases {
        check_compatibility(cs).map_err(|e| format!("prelude case rejected: {e:?}"))?;
    }
    let clauses = |t: Term| match t {
        Term::Case(_, cs) => cs,
        _ => unreachable!(),
    };
    let por = clauses(p("case x of { Pair(Left(Nil), _) -> Left(Nil); Pair(_, Left(Nil)) -> Left(Nil); Pair(Right(Nil), Right(Nil)) -> Right(Nil) }"));
    check_compatibility(&por).map_err(|e| format!("por rejected: {e:?}"))?;
    let left = |p: ambreal::Pattern, body: Term| Clause { pattern: ambreal::Pattern::Con(Tag::Left, vec![p]), body };
    let bad = vec![
        left(ambreal::Pattern::Var("a".into()), Term::var("a")),
        left(ambreal::Pattern::Con(Tag::Nil, vec![]), Term::left(Term::nil())),
    ];
    check(check_compatibility(&bad).is_err(), || "the overlapping Left pair was accepted".into())?;
    Ok(format!("{} prelude case expressions and por accepted, overlapping pair rejected", cases.len()))
}

fn archimedean() -> Outcome {
    let mut rng = StdRng::seed_from_u64(SEED + 8);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 100 {
        let x = random_rational(&mut rng, CODEC_BITS);
        if x.is_zero() {
            continue;
        }
        let s = sd_encode_stream(&x).map_err(|e| e.to_string())?;
        let k = (0..).find(|&i| s.get(i) != SDigit::Zero).expect("nonzero x has a nonzero digit");
        let budget = C_FD * (k as u64 + 1);
        let (cell, ticks) = f_d_ticks(&s, budget);
        let want = if x.is_negative() { -1 } else { 1 };
        check(cell == Some(want), || format!("f_d on {x} gave {cell:?} within {budget} ticks"))?;
        worst = worst.max(ticks as f64 / (k as f64 + 1.0));
        done += 1;
    }
    let (zero, _) = f_d_ticks(&EPStream::new(vec![], vec![SDigit::Zero]), 1_000_000);
    check(zero.is_none(), || format!("f_d on zero gave {zero:?}"))?;

    let mut e = engine_with_prelude();
    let premise = p("fun a -> case a of { Pair(d, r) -> case d of {
        Left(x) -> Left(x);
        Right(Nil) -> Right(Pair(r, fun y -> Pair(Nil, y)))
    } }");
    let chi = |s: &EPStream<SDigit>| Term::app(Term::app(Term::var("aicr_fix"), premise.clone()), inject_sd(s, Wrap::Plain));
    let o = e.observe(&chi(&zeros_then(2, SDigit::Pos)), 8, 10_000, Policy::Resolving).map_err(|e| e.to_string())?;
    check(o.to_string() == "Pair(Nil, Pair(Nil, Right(Nil)))", || format!("aicr_fix gave {o}"))?;
    let zero = EPStream::new(vec![], vec![SDigit::Zero]);
    let o = e.observe(&chi(&zero), 8, 1_000_000, Policy::Resolving).map_err(|e| e.to_string())?;
    check(o == Observation::Unresolved, || format!("aicr_fix on zero gave {o}"))?;
    Ok(format!("c = {C_FD}, peak {worst:.1} ticks per digit; zero unresolved; aicr_fix chain ok"))
}

fn compact_trees() -> Outcome {
    let n = TREE_DEPTH;
    for k in samples(common::compact_sets(), SET_CORPUS) {
        let t = sdk_truncate(&k, n).map_err(|e| e.to_string())?;
        let v = tree_value_set(&t, n).map_err(|e| e.to_string())?;
        let d = hausdorff_sets(&v, &k).expect("nonempty");
        check(d <= pow2_neg(n - 1), || format!("{k}: value set at distance {d}"))?;
        check(d == set_oracle::hausdorff(&v, &k), || format!("{k}: distance disagrees with the dilation oracle"))?;
        check(hausdorff_trunc(&t, &t, n).map_err(|e| e.to_string())?.is_zero(), || "self distance".into())?;
    }
    let zero = sdk_truncate(&IntervalSet::point(int(0)), n).map_err(|e| e.to_string())?;
    let one = sdk_truncate(&IntervalSet::point(int(1)), n).map_err(|e| e.to_string())?;
    let d = hausdorff_trunc(&zero, &one, n).map_err(|e| e.to_string())?;
    check(d == rat(1, 2), || format!("{{0}} vs {{1}} at {d}"))?;
    Ok(format!("{SET_CORPUS} sets at depth {n}; equal trees 0, {{0}} vs {{1}} 1/2"))
}

fn tree_conversions() -> Outcome {
    let n = CONVERSION_DEPTH;
    let tol = pow2_neg(n - 2);
    for k in samples(common::compact_sets(), SET_CORPUS) {
        let mut ops = TreeOps::new();
        let g = ops.sdk_to_grayk(&sdk_truncate(&k, n).map_err(|e| e.to_string())?);
        let v = gray_tree_value_set(&g, n).map_err(|e| e.to_string())?;
        let d = set_oracle::hausdorff(&v, &k);
        check(d <= tol, || format!("{k}: signed-digit to Gray at distance {d}"))?;
        for (code, x) in [(g.min(), k.min().expect("nonempty")), (g.max(), k.max().expect("nonempty"))] {
            let cells: Vec<GCell> = code.prefix(n).into_iter().map(|c| c.unwrap_or(GCell::Bot)).collect();
            for i in 0..=n {
                check(oracle::gray_set(&cells[..i]).contains(x), || format!("{k}: code of {x} fails at {i} cells"))?;
            }
        }
        let gk = grayk_truncate(&k, 2 * n + 2).map_err(|e| e.to_string())?;
        let t = ops.grayk_to_sdk(&gk, n).map_err(|e| format!("{k}: {e}"))?;
        let d = set_oracle::hausdorff(&tree_value_set(&t, n).map_err(|e| e.to_string())?, &k);
        check(d <= tol, || format!("{k}: Gray to signed-digit at distance {d}"))?;
    }
    Ok(format!("{SET_CORPUS} sets at depth {n}, both directions within 2^-{}", n - 2))
}

fn monotonicity() -> Outcome {
    let terms = samples(common::term_strategy(), 400);
    let mut rng = StdRng::seed_from_u64(SEED + 11);
    for pair in terms.chunks(2) {
        let (t, u) = (&pair[0], &pair[1]);
        let f: u64 = rng.gen_range(1..400);
        let small = Engine::new().observe(t, 3, f, Policy::Resolving).map_err(|e| e.to_string())?;
        let big = Engine::new().observe(t, 3, 4 * f, Policy::Resolving).map_err(|e| e.to_string())?;
        check(defined_leaves_agree(&small, &big), || format!("{t}: {small} at {f}, {big} at {}", 4 * f))?;

        let mut e = Engine::new();
        let node = e.load(&Term::amb(t.clone(), u.clone())).map_err(|e| e.to_string())?;
        let mut first: Option<(u8, Observation)> = None;
        for _ in 0..3 {
            let o = e.observe_node(&node, 3, f, Policy::Resolving);
            match (&first, node.commitment()) {
                (None, Some(c)) => first = Some((c, o)),
                (Some((c0, o0)), c) => {
                    check(c == Some(*c0), || format!("{t}: commitment moved"))?;
                    check(defined_leaves_agree(o0, &o), || format!("{t}: {o0} then {o}"))?;
                }
                (None, None) => {}
            }
        }
    }
    Ok("200 terms defined-identical at 4F; committed Amb observations stable".into())
}
