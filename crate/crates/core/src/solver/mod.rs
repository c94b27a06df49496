//! Inner convex solver for the weighted subproblem
//! `minimize f0(x) + sum_i lambda_i f_i(x) + (1 - lambda_i) alpha_i`
//! over the box, with the weight vector `lambda` fixed.
//!
//! This is the workhorse called by every outer method: alternating
//! minimization, CCP majorizer solves, and the exact enumeration.

pub(crate) mod engine;

use crate::error::{Error, Result};
use crate::model::{check_dim, Problem, SparseExpr};
use engine::{minimize_projected, SmoothObjective};

/// Per-term weights `lambda` with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    lambda: Vec<f64>,
}

impl WeightVector {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda
            .iter()
            .any(|&v| !v.is_finite() || !(0.0..=1.0).contains(&v))
        {
            return Err(Error::Validation(
                "weight vector entries must lie in [0, 1]".into(),
            ));
        }
        Ok(WeightVector { lambda })
    }

    /// The all-halves vector, the default start of the outer heuristics.
    pub fn half(m: usize) -> Self {
        WeightVector {
            lambda: vec![0.5; m],
        }
    }

    pub fn ones(m: usize) -> Self {
        WeightVector {
            lambda: vec![1.0; m],
        }
    }

    /// Binary weights from the low `m` bits of `mask` (bit i -> lambda_i).
    pub fn from_mask(mask: u64, m: usize) -> Self {
        WeightVector {
            lambda: (0..m)
                .map(|i| if mask >> i & 1 == 1 { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambda
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn is_binary(&self) -> bool {
        self.lambda.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

/// Configuration of the projected-gradient inner solver.
#[derive(Debug, Clone)]
pub struct InnerConfig {
    /// Stationarity tolerance on the projected-gradient norm.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Step shrink factor in `(0, 1)`.
    pub backtrack: f64,
}

impl Default for InnerConfig {
    fn default() -> Self {
        InnerConfig {
            grad_tol: 1e-6,
            max_iters: 5000,
            backtrack: 0.5,
        }
    }
}

/// Componentwise projection onto the box `[l, u]`.
pub fn project_box(x: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&xj, (&lj, &uj))| xj.clamp(lj, uj))
        .collect()
}

pub(crate) fn project_box_in_place(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for (xj, (&lj, &uj)) in x.iter_mut().zip(lower.iter().zip(upper)) {
        *xj = xj.clamp(lj, uj);
    }
}

/// Result of one weighted subproblem solve.
#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub x: Vec<f64>,
    /// `L(x, lambda)` including the `sum_i (1 - lambda_i) alpha_i` constant.
    pub value: f64,
    pub converged: bool,
    pub iters: usize,
}

/// Precompiled smooth objective
/// `sum_k c_k e_k(x)^2 + r ||x||^2 + sum_i lambda_i w_i loss_i(u_i(x)) + const + q^T x`.
pub(crate) struct WeightedObjective<'a> {
    problem: &'a Problem,
    lambda: Vec<f64>,
    term_exprs: Vec<SparseExpr>,
    quad_exprs: Vec<SparseExpr>,
    /// `sum_i (1 - lambda_i) alpha_i`
    constant: f64,
    /// Extra ridge coefficient (used by the relaxation's superlinearity fix).
    extra_ridge: f64,
    /// Optional extra linear term `q^T x` (used by the CCP majorizer).
    linear: Option<Vec<f64>>,
}

impl<'a> WeightedObjective<'a> {
    pub fn new(problem: &'a Problem, lambda: &WeightVector) -> Result<Self> {
        if lambda.len() != problem.m() {
            return Err(Error::DimensionMismatch {
                context: "lambda".into(),
                expected: problem.m(),
                got: lambda.len(),
            });
        }
        let mut constant = 0.0;
        for (t, &li) in problem.terms.iter().zip(lambda.as_slice()) {
            if li < 1.0 {
                constant += (1.0 - li) * t.alpha;
            }
        }
        Ok(WeightedObjective {
            problem,
            lambda: lambda.as_slice().to_vec(),
            term_exprs: problem.terms.iter().map(|t| t.expr.sparse()).collect(),
            quad_exprs: problem
                .base
                .quad_terms
                .iter()
                .map(|q| q.expr.sparse())
                .collect(),
            constant,
            extra_ridge: 0.0,
            linear: None,
        })
    }

    pub fn with_linear(mut self, q: Vec<f64>) -> Self {
        self.linear = Some(q);
        self
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Curvature upper bound of the smooth part.
    pub fn lipschitz_bound(&self) -> f64 {
        let quad: f64 = self
            .problem
            .base
            .quad_terms
            .iter()
            .map(|q| 2.0 * q.c * q.expr.norm_sq())
            .sum();
        let terms: f64 = self
            .problem
            .terms
            .iter()
            .zip(&self.lambda)
            .map(|(t, &li)| li * t.weight * t.loss.curvature_bound() * t.expr.norm_sq())
            .sum();
        quad + 2.0 * (self.problem.base.ridge + self.extra_ridge) + terms
    }
}

impl SmoothObjective for WeightedObjective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let base = &self.problem.base;
        let mut v = self.constant;
        for (q, e) in base.quad_terms.iter().zip(&self.quad_exprs) {
            let ev = e.value(x);
            v += q.c * ev * ev;
        }
        let r = base.ridge + self.extra_ridge;
        if r > 0.0 {
            v += r * x.iter().map(|a| a * a).sum::<f64>();
        }
        for ((t, e), &li) in self.problem.terms.iter().zip(&self.term_exprs).zip(&self.lambda) {
            if li > 0.0 {
                v += li * t.weight * t.loss.value(e.value(x));
            }
        }
        if let Some(q) = &self.linear {
            v += q.iter().zip(x).map(|(qi, xi)| qi * xi).sum::<f64>();
        }
        v
    }

    fn value_grad(&self, x: &[f64], g: &mut [f64]) -> f64 {
        let base = &self.problem.base;
        g.fill(0.0);
        let mut v = self.constant;
        for (q, e) in base.quad_terms.iter().zip(&self.quad_exprs) {
            let ev = e.value(x);
            v += q.c * ev * ev;
            e.accumulate(2.0 * q.c * ev, g);
        }
        let r = base.ridge + self.extra_ridge;
        if r > 0.0 {
            for (gj, &xj) in g.iter_mut().zip(x) {
                *gj += 2.0 * r * xj;
            }
            v += r * x.iter().map(|a| a * a).sum::<f64>();
        }
        for ((t, e), &li) in self.problem.terms.iter().zip(&self.term_exprs).zip(&self.lambda) {
            if li > 0.0 {
                let u = e.value(x);
                v += li * t.weight * t.loss.value(u);
                e.accumulate(li * t.weight * t.loss.grad(u), g);
            }
        }
        if let Some(q) = &self.linear {
            for (gj, qj) in g.iter_mut().zip(q) {
                *gj += qj;
            }
            v += q.iter().zip(x).map(|(qi, xi)| qi * xi).sum::<f64>();
        }
        v
    }
}

/// Value and gradient of the smooth part of `L(x, lambda)`
/// (box indicator excluded, `sum (1 - lambda_i) alpha_i` constant included).
pub fn smooth_value_grad(
    problem: &Problem,
    lambda: &WeightVector,
    x: &[f64],
) -> Result<(f64, Vec<f64>)> {
    check_dim(problem.n, x)?;
    let obj = WeightedObjective::new(problem, lambda)?;
    let mut g = vec![0.0; problem.n];
    let v = obj.value_grad(x, &mut g);
    Ok((v, g))
}

/// Solve the weighted subproblem with `lambda` fixed, starting from `x0`
/// (projected onto the box first).
pub fn weighted_subproblem(
    problem: &Problem,
    lambda: &WeightVector,
    x0: &[f64],
    cfg: &InnerConfig,
) -> Result<SubproblemSolution> {
    weighted_subproblem_linear(problem, lambda, None, x0, cfg)
}

/// Weighted subproblem with an extra linear term `q^T x` in the objective
/// (the CCP majorizer needs this).
pub(crate) fn weighted_subproblem_linear(
    problem: &Problem,
    lambda: &WeightVector,
    linear: Option<&[f64]>,
    x0: &[f64],
    cfg: &InnerConfig,
) -> Result<SubproblemSolution> {
    check_dim(problem.n, x0)?;
    let mut obj = WeightedObjective::new(problem, lambda)?;
    if let Some(q) = linear {
        obj = obj.with_linear(q.to_vec());
    }

    let x_start = project_box(x0, &problem.base.lower, &problem.base.upper);

    if obj.constant() == f64::INFINITY {
        // Some unclipped term carries weight < 1: the objective is
        // identically +inf, nothing to minimize.
        return Ok(SubproblemSolution {
            x: x_start,
            value: f64::INFINITY,
            converged: true,
            iters: 0,
        });
    }

    let lip = obj.lipschitz_bound();
    if lip == 0.0 && linear.is_none() {
        // Constant smooth part: any feasible point is optimal.
        let value = obj.constant();
        return Ok(SubproblemSolution {
            x: x_start,
            value,
            converged: true,
            iters: 0,
        });
    }

    let lower = &problem.base.lower;
    let upper = &problem.base.upper;
    let project = |x: &mut [f64]| project_box_in_place(x, lower, upper);
    let result = minimize_projected(&obj, &project, x_start, lip.max(1e-12), cfg)?;
    Ok(SubproblemSolution {
        x: result.x,
        value: result.value,
        converged: result.converged,
        iters: result.iters,
    })
}
