//! A lazy term calculus with McCarthy's Amb and fair small-step evaluation,
//! the realiser programs for exact real and compact-set conversions written
//! in it, and exact rational oracles for the signed-digit and Gray-code
//! representations of [-1, 1].

pub mod compact_codec;
pub mod compat;
pub mod engine;
pub mod interval;
pub mod parse;
pub mod real_codec;
pub mod realisers;
pub mod step;
pub mod terms;

pub use engine::{strict_apply, Engine, Fuel, Observation, Policy, ShapeError, Whnf};
pub use terms::{Clause, Pattern, Tag, Term};

/// Stack size used by [`with_large_stack`].
pub const LARGE_STACK: usize = 1 << 30;

/// Runs `f` on a scoped thread with a [`LARGE_STACK`]-byte stack, for work
/// on deep terms such as injected streams with long periods.
pub fn with_large_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(LARGE_STACK)
            .spawn_scoped(s, f)
            .expect("spawn worker thread")
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}
