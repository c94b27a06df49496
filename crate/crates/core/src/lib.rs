//! Toolkit for minimizing sums of clipped convex functions
//! `f0(x) + sum_i min(f_i(x), alpha_i)`.
//!
//! Clipping makes each term saturate at `alpha_i`, which buys robustness to
//! outliers at the price of convexity. This crate provides:
//!
//! - a problem model (square, Huber, and logistic atoms composed with affine
//!   expressions, plus a convex quadratic base objective over a box) with a
//!   JSON interchange format,
//! - fast heuristics: alternating minimization over the bi-convex surrogate
//!   (exact or inexact weight updates) and the convex-concave procedure,
//! - lower bounds from a perspective-function relaxation, solved directly or
//!   by consensus ADMM, yielding suboptimality certificates,
//! - global solvers: exhaustive enumeration of the on/off patterns and
//!   branch and bound driven by the relaxation bounds.
//!
//! The `parallel` feature (on by default) runs enumeration, ADMM blocks,
//! and branch-and-bound children on a rayon thread pool; disabling it gives
//! a dependency-free sequential build with identical results.

pub mod error;
pub mod exact;
pub mod heuristics;
pub mod model;
pub(crate) mod parallel;
pub mod perspective;
pub mod report;
pub mod solver;

pub use error::{Error, Result};
pub use exact::{solve_bnb, solve_exhaustive, BnbConfig, ExhaustiveConfig, GlobalResult};
pub use heuristics::{
    minimal_convex_extension, solve_altmin, solve_ccp, AltMinConfig, AltMinMode, CcpConfig,
};
pub use model::{
    parse_problem, serialize_problem, AffineExpr, BaseObjective, ClippedTerm, LossAtom, Problem,
    QuadTerm,
};
pub use perspective::{
    solve_relaxation, solve_relaxation_admm, AdmmConfig, BoundCertificate, PerspectiveVars,
    RelaxConfig, RelaxStatus,
};
pub use report::{SolveReport, Termination};
pub use solver::{weighted_subproblem, InnerConfig, SubproblemSolution, WeightVector};
