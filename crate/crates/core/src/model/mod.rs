//! Problem data model: minimize `f0(x) + sum_i min{f_i(x), alpha_i}`.
//!
//! The base objective `f0` is a sum of squared affine terms, a ridge term,
//! and a box indicator. Each clipped term is a scalar convex loss atom
//! composed with an affine map, scaled by a positive weight, and clipped
//! at level `alpha`.

mod schema;

pub use schema::{parse_problem, serialize_problem};

use crate::error::{Error, Result};

/// Feasibility tolerance for the box indicator: violations up to this size
/// are treated as roundoff from projecting solvers, not infeasibility.
pub const BOX_FEAS_TOL: f64 = 1e-9;

/// Scalar convex loss atom. All atoms are convex and continuously
/// differentiable on the whole real line.
#[derive(Debug, Clone, PartialEq)]
pub enum LossAtom {
    /// `u^2`
    Square,
    /// `u^2` for `|u| <= delta`, `delta * (2|u| - delta)` otherwise.
    Huber { delta: f64 },
    /// `log(1 + exp(-label * u))` with `label` in {-1, +1}.
    Logistic { label: f64 },
}

impl LossAtom {
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            LossAtom::Square => u * u,
            LossAtom::Huber { delta } => {
                if u.abs() <= delta {
                    u * u
                } else {
                    delta * (2.0 * u.abs() - delta)
                }
            }
            LossAtom::Logistic { label } => softplus(-label * u),
        }
    }

    pub fn grad(&self, u: f64) -> f64 {
        match *self {
            LossAtom::Square => 2.0 * u,
            LossAtom::Huber { delta } => {
                if u.abs() <= delta {
                    2.0 * u
                } else {
                    2.0 * delta * u.signum()
                }
            }
            // d/du log(1 + exp(-label*u)) = -label * sigmoid(-label*u)
            LossAtom::Logistic { label } => -label * sigmoid(-label * u),
        }
    }

    /// Upper bound on the second derivative, used for step-size estimates.
    pub fn curvature_bound(&self) -> f64 {
        match *self {
            LossAtom::Square | LossAtom::Huber { .. } => 2.0,
            LossAtom::Logistic { .. } => 0.25,
        }
    }

    /// Recession function `lim_{g -> 0+} g * loss(d / g)`.
    ///
    /// This is the `t = 0` limit of the perspective of the atom along
    /// direction `d`.
    pub fn recession(&self, d: f64) -> f64 {
        match *self {
            LossAtom::Square => {
                if d == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            LossAtom::Huber { delta } => 2.0 * delta * d.abs(),
            LossAtom::Logistic { label } => (-label * d).max(0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            LossAtom::Square => Ok(()),
            LossAtom::Huber { delta } => {
                if delta.is_finite() && delta > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Validation(format!(
                        "huber delta must be a positive finite real, got {delta}"
                    )))
                }
            }
            LossAtom::Logistic { label } => {
                if label == 1.0 || label == -1.0 {
                    Ok(())
                } else {
                    Err(Error::Validation(format!(
                        "logistic label must be +1 or -1, got {label}"
                    )))
                }
            }
        }
    }
}

/// Overflow-safe `log(1 + exp(s))`.
fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Affine scalar expression `a^T x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr {
    pub a: Vec<f64>,
    pub b: f64,
}

impl AffineExpr {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        AffineExpr { a, b }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(self.a.len(), x.len());
        self.a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() + self.b
    }

    /// `a^T x` only (no offset), used by perspective evaluations.
    pub fn dot(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(self.a.len(), x.len());
        self.a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>()
    }

    pub fn norm_sq(&self) -> f64 {
        self.a.iter().map(|ai| ai * ai).sum()
    }

    /// Nonzero entries of `a`, for hot loops over sparse expressions.
    pub fn sparse(&self) -> SparseExpr {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (j, &aj) in self.a.iter().enumerate() {
            if aj != 0.0 {
                idx.push(j);
                val.push(aj);
            }
        }
        SparseExpr {
            idx,
            val,
            b: self.b,
        }
    }

    fn validate(&self, n: usize, context: &str) -> Result<()> {
        if self.a.len() != n {
            return Err(Error::DimensionMismatch {
                context: context.to_string(),
                expected: n,
                got: self.a.len(),
            });
        }
        if self.a.iter().any(|v| !v.is_finite()) || !self.b.is_finite() {
            return Err(Error::NonFinite(context.to_string()));
        }
        Ok(())
    }
}

/// Sparse view of an [`AffineExpr`] for inner-loop evaluation.
#[derive(Debug, Clone)]
pub struct SparseExpr {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
    pub b: f64,
}

impl SparseExpr {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.dot(x) + self.b
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.idx
            .iter()
            .zip(&self.val)
            .map(|(&j, &v)| v * x[j])
            .sum()
    }

    /// `g += c * a`
    pub fn accumulate(&self, c: f64, g: &mut [f64]) {
        for (&j, &v) in self.idx.iter().zip(&self.val) {
            g[j] += c * v;
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.val.iter().map(|v| v * v).sum()
    }
}

/// One clipped term `min{ weight * loss(a^T x + b), alpha }`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClippedTerm {
    pub loss: LossAtom,
    pub expr: AffineExpr,
    pub weight: f64,
    pub alpha: f64,
}

impl ClippedTerm {
    /// Unclipped value `weight * loss(expr(x))`.
    pub fn raw(&self, x: &[f64]) -> f64 {
        self.weight * self.loss.value(self.expr.value(x))
    }

    pub fn clipped(&self, x: &[f64]) -> f64 {
        self.raw(x).min(self.alpha)
    }

    /// Scalar `weight * loss'(expr(x))`; the gradient of the raw term is
    /// this value times `expr.a`.
    pub fn raw_grad_scale(&self, x: &[f64]) -> f64 {
        self.weight * self.loss.grad(self.expr.value(x))
    }

    fn validate(&self, n: usize, index: usize) -> Result<()> {
        self.loss.validate()?;
        self.expr.validate(n, &format!("terms[{index}].a"))?;
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return Err(Error::Validation(format!(
                "terms[{index}].weight must be positive and finite, got {}",
                self.weight
            )));
        }
        // alpha = +inf disables the clip (plain convex term).
        if self.alpha.is_nan() || self.alpha == f64::NEG_INFINITY {
            return Err(Error::Validation(format!(
                "terms[{index}].alpha must be a real number or +inf, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Squared affine contribution `c * (a^T x + b)^2` to the base objective.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadTerm {
    pub c: f64,
    pub expr: AffineExpr,
}

/// Base objective `f0(x) = sum_k c_k expr_k(x)^2 + ridge * ||x||^2`
/// plus the indicator of the box `l <= x <= u`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseObjective {
    pub quad_terms: Vec<QuadTerm>,
    pub ridge: f64,
    /// Lower bounds, entries may be `-inf`.
    pub lower: Vec<f64>,
    /// Upper bounds, entries may be `+inf`.
    pub upper: Vec<f64>,
}

impl BaseObjective {
    /// Unbounded base objective of dimension `n` with no quadratic terms.
    pub fn free(n: usize) -> Self {
        BaseObjective {
            quad_terms: Vec::new(),
            ridge: 0.0,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    /// Smooth part of `f0` (quadratic terms + ridge), box excluded.
    pub fn smooth_value(&self, x: &[f64]) -> f64 {
        let quad: f64 = self
            .quad_terms
            .iter()
            .map(|q| {
                let e = q.expr.value(x);
                q.c * e * e
            })
            .sum();
        quad + self.ridge * x.iter().map(|v| v * v).sum::<f64>()
    }

    /// Largest componentwise violation of the box at `x`.
    pub fn box_violation(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&xj, (&lj, &uj))| (lj - xj).max(xj - uj).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Whether every coordinate has finite lower and upper bounds.
    pub fn box_is_compact(&self) -> bool {
        self.lower.iter().all(|v| v.is_finite()) && self.upper.iter().all(|v| v.is_finite())
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.lower.len() != n {
            return Err(Error::DimensionMismatch {
                context: "base.box.l".into(),
                expected: n,
                got: self.lower.len(),
            });
        }
        if self.upper.len() != n {
            return Err(Error::DimensionMismatch {
                context: "base.box.u".into(),
                expected: n,
                got: self.upper.len(),
            });
        }
        for (j, (&lj, &uj)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lj.is_nan() || uj.is_nan() {
                return Err(Error::NonFinite(format!("base.box at coordinate {j}")));
            }
            if lj > uj {
                return Err(Error::BoxInverted {
                    index: j,
                    lower: lj,
                    upper: uj,
                });
            }
        }
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(Error::Validation(format!(
                "base.ridge must be nonnegative and finite, got {}",
                self.ridge
            )));
        }
        for (k, q) in self.quad_terms.iter().enumerate() {
            q.expr.validate(n, &format!("base.quad_terms[{k}].a"))?;
            if !(q.c.is_finite() && q.c > 0.0) {
                return Err(Error::Validation(format!(
                    "base.quad_terms[{k}].c must be positive and finite, got {}",
                    q.c
                )));
            }
        }
        Ok(())
    }
}

/// A sum-of-clipped-convex-functions minimization problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub n: usize,
    pub base: BaseObjective,
    pub terms: Vec<ClippedTerm>,
}

impl Problem {
    pub fn new(n: usize, base: BaseObjective, terms: Vec<ClippedTerm>) -> Result<Self> {
        let p = Problem { n, base, terms };
        p.validate()?;
        Ok(p)
    }

    pub fn m(&self) -> usize {
        self.terms.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Validation("dimension n must be at least 1".into()));
        }
        if self.terms.is_empty() {
            return Err(Error::Validation(
                "problem must have at least one clipped term".into(),
            ));
        }
        self.base.validate(self.n)?;
        for (i, term) in self.terms.iter().enumerate() {
            term.validate(self.n, i)?;
        }
        Ok(())
    }

    /// Evaluate one term, returning `(raw, clipped)`.
    pub fn eval_term(&self, index: usize, x: &[f64]) -> Result<(f64, f64)> {
        check_dim(self.n, x)?;
        let term = &self.terms[index];
        let raw = term.raw(x);
        Ok((raw, raw.min(term.alpha)))
    }

    /// Full objective of the problem at `x`: `+inf` when the box is violated
    /// beyond [`BOX_FEAS_TOL`], otherwise base smooth part plus clipped terms.
    pub fn eval_objective(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n, x)?;
        if self.base.box_violation(x) > BOX_FEAS_TOL {
            return Ok(f64::INFINITY);
        }
        let clipped: f64 = self.terms.iter().map(|t| t.clipped(x)).sum();
        Ok(self.base.smooth_value(x) + clipped)
    }

    /// `true` when the weighted subproblems need an extra ridge to make the
    /// base superlinear (required by the perspective relaxation).
    pub fn base_is_superlinear(&self) -> bool {
        self.base.ridge > 0.0 || self.base.box_is_compact()
    }
}

pub(crate) fn check_dim(n: usize, x: &[f64]) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            context: "x".into(),
            expected: n,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("x".into()));
    }
    Ok(())
}
