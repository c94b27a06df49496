//! Thin switch between rayon and sequential iteration.
//!
//! Everything data-parallel in this crate (exhaustive enumeration, ADMM block
//! updates, branch-and-bound child bounds) goes through these helpers so the
//! `parallel` feature can be toggled without touching solver code.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..len` and collect the results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<U, F>(len: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U, F>(len: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..len).map(f).collect()
}

/// Run two closures, in parallel when the feature is enabled.
#[cfg(feature = "parallel")]
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    rayon::join(a, b)
}

#[cfg(not(feature = "parallel"))]
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA,
    B: FnOnce() -> RB,
{
    (a(), b())
}
