//! Outer heuristic solvers.
//!
//! * Inexact alternating minimization: minimize over `x` with `lambda`
//!   fixed, then take a signed projected gradient step on `lambda`.
//! * Exact alternating minimization: the same loop with the closed-form
//!   binary `lambda` update (equivalent to step size >= 1).
//! * Convex-concave procedure on the difference-of-convex split
//!   `f0 + sum f_i - sum max(f_i - alpha_i, 0)`.
//! * Minimal convex extension of clipped squared terms (Huber replacement).

use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{check_dim, ClippedTerm, LossAtom, Problem};
use crate::report::{SolveReport, Termination};
use crate::solver::{
    project_box, smooth_value_grad, weighted_subproblem, weighted_subproblem_linear, InnerConfig,
    WeightVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AltMinMode {
    /// Signed projected gradient step of size `beta` on lambda.
    Inexact,
    /// Closed-form binary lambda update each iteration.
    Exact,
}

#[derive(Debug, Clone)]
pub struct AltMinConfig {
    /// Initial weights; defaults to all 1/2.
    pub lambda0: Option<WeightVector>,
    /// Lambda step size for the inexact mode.
    pub beta: f64,
    /// Stop when `||lambda^k - lambda^{k-1}||_1 <= eps`.
    pub eps: f64,
    /// Maximum outer iterations.
    pub n_iter: usize,
    pub mode: AltMinMode,
    /// Starting point; defaults to the box projection of the origin.
    pub x0: Option<Vec<f64>>,
    pub inner: InnerConfig,
}

impl Default for AltMinConfig {
    fn default() -> Self {
        AltMinConfig {
            lambda0: None,
            beta: 0.1,
            eps: 1e-6,
            n_iter: 100,
            mode: AltMinMode::Inexact,
            x0: None,
            inner: InnerConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CcpConfig {
    /// Starting point; defaults to the box projection of the origin.
    pub x0: Option<Vec<f64>>,
    pub max_iters: usize,
    /// Stop when the true objective changes by at most this much.
    pub tol: f64,
    pub inner: InnerConfig,
}

impl Default for CcpConfig {
    fn default() -> Self {
        CcpConfig {
            x0: None,
            max_iters: 100,
            tol: 1e-8,
            inner: InnerConfig::default(),
        }
    }
}

/// Closed-form minimizer of `L(x, .)` over `lambda` at fixed `x`:
/// `lambda_i = 1` iff `f_i(x) <= alpha_i` (ties give 1).
pub fn lambda_exact_update(problem: &Problem, x: &[f64]) -> Result<WeightVector> {
    check_dim(problem.n, x)?;
    let lambda = problem
        .terms
        .iter()
        .map(|t| if t.raw(x) <= t.alpha { 1.0 } else { 0.0 })
        .collect();
    WeightVector::new(lambda)
}

/// Signed projected gradient step `clip(lambda_i - beta * sign(g_i))` with
/// the convention `sign(0) = +1`.
pub fn lambda_sign_step(lambda: &WeightVector, g: &[f64], beta: f64) -> Result<WeightVector> {
    if g.len() != lambda.len() {
        return Err(Error::DimensionMismatch {
            context: "lambda gradient".into(),
            expected: lambda.len(),
            got: g.len(),
        });
    }
    let updated = lambda
        .as_slice()
        .iter()
        .zip(g)
        .map(|(&li, &gi)| {
            let sign = if gi >= 0.0 { 1.0 } else { -1.0 };
            (li - beta * sign).clamp(0.0, 1.0)
        })
        .collect();
    WeightVector::new(updated)
}

fn default_start(problem: &Problem) -> Vec<f64> {
    project_box(
        &vec![0.0; problem.n],
        &problem.base.lower,
        &problem.base.upper,
    )
}

fn l1_distance(a: &WeightVector, b: &WeightVector) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .sum()
}

/// Alternating minimization on the bi-convex reformulation.
pub fn solve_altmin(problem: &Problem, cfg: &AltMinConfig) -> Result<SolveReport> {
    problem.validate()?;
    if !(cfg.beta > 0.0) {
        return Err(Error::Validation("beta must be positive".into()));
    }
    if !(cfg.eps > 0.0) {
        return Err(Error::Validation("eps must be positive".into()));
    }
    let start = Instant::now();
    let m = problem.m();

    let mut lambda = match &cfg.lambda0 {
        Some(l) if l.len() == m => l.clone(),
        Some(l) => {
            return Err(Error::DimensionMismatch {
                context: "lambda0".into(),
                expected: m,
                got: l.len(),
            })
        }
        None => WeightVector::half(m),
    };
    let mut x = cfg.x0.clone().unwrap_or_else(|| default_start(problem));
    check_dim(problem.n, &x)?;

    let mut objective_trace = Vec::new();
    let mut lambda_trace = vec![lambda.as_slice().to_vec()];
    let mut x_best = project_box(&x, &problem.base.lower, &problem.base.upper);
    let mut best_value = problem.eval_objective(&x_best)?;
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;

    for _ in 0..cfg.n_iter {
        iterations += 1;

        // 1. Minimize over x with lambda fixed (warm start at previous x).
        let sub = weighted_subproblem(problem, &lambda, &x, &cfg.inner)?;
        x = sub.x;

        // 2. Update lambda.
        let lambda_new = match cfg.mode {
            AltMinMode::Exact => lambda_exact_update(problem, &x)?,
            AltMinMode::Inexact => {
                let g: Vec<f64> = problem.terms.iter().map(|t| t.raw(&x) - t.alpha).collect();
                lambda_sign_step(&lambda, &g, cfg.beta)?
            }
        };

        // Trace L(x^k, lambda^k) with the updated weights.
        let (l_val, _) = smooth_value_grad(problem, &lambda_new, &x)?;
        objective_trace.push(l_val);
        lambda_trace.push(lambda_new.as_slice().to_vec());

        let true_obj = problem.eval_objective(&x)?;
        if true_obj < best_value {
            best_value = true_obj;
            x_best = x.clone();
        }

        // 3. Stopping criterion on the lambda change.
        let delta = l1_distance(&lambda_new, &lambda);
        lambda = lambda_new;
        if delta <= cfg.eps {
            termination = Termination::ToleranceMet;
            break;
        }
    }

    Ok(SolveReport {
        x_best,
        objective_value: best_value,
        objective_trace,
        lambda_trace,
        iterations,
        termination,
        wall_time: start.elapsed(),
        lower_bound: None,
    })
}

/// Linearization data of the concave part at one point.
#[derive(Debug, Clone)]
pub struct TermLinearization {
    /// Chosen subgradient of `h_i = max(f_i - alpha_i, 0)`; zero when
    /// `f_i(x) <= alpha_i` (ties included).
    pub slope: Vec<f64>,
    /// `h_i(x)`.
    pub excess: f64,
}

/// Per-term subgradients of the concave part `-sum h_i` at `x`.
pub fn ccp_linearize(problem: &Problem, x: &[f64]) -> Result<Vec<TermLinearization>> {
    check_dim(problem.n, x)?;
    Ok(problem
        .terms
        .iter()
        .map(|t| {
            let raw = t.raw(x);
            if raw > t.alpha {
                let scale = t.raw_grad_scale(x);
                TermLinearization {
                    slope: t.expr.a.iter().map(|ai| scale * ai).collect(),
                    excess: raw - t.alpha,
                }
            } else {
                TermLinearization {
                    slope: vec![0.0; x.len()],
                    excess: 0.0,
                }
            }
        })
        .collect())
}

/// Convex-concave procedure on the DC split of the clipped objective.
///
/// Each iteration minimizes the convex majorizer
/// `f0 + sum_i f_i - sum_i (h_i(x^k) + s_i^T (x - x^k))`; the true clipped
/// objective is nonincreasing across iterations.
pub fn solve_ccp(problem: &Problem, cfg: &CcpConfig) -> Result<SolveReport> {
    problem.validate()?;
    let start = Instant::now();

    let mut x = cfg.x0.clone().unwrap_or_else(|| default_start(problem));
    check_dim(problem.n, &x)?;
    x = project_box(&x, &problem.base.lower, &problem.base.upper);

    let ones = WeightVector::ones(problem.m());
    let mut objective_trace = vec![problem.eval_objective(&x)?];
    let mut x_best = x.clone();
    let mut best_value = objective_trace[0];
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;

    for _ in 0..cfg.max_iters {
        iterations += 1;
        let lin = ccp_linearize(problem, &x)?;
        let mut q = vec![0.0; problem.n];
        for l in &lin {
            for (qj, sj) in q.iter_mut().zip(&l.slope) {
                *qj -= sj;
            }
        }
        let sub = weighted_subproblem_linear(problem, &ones, Some(&q), &x, &cfg.inner)?;
        x = sub.x;

        let obj = problem.eval_objective(&x)?;
        let prev = *objective_trace.last().unwrap();
        objective_trace.push(obj);
        if obj < best_value {
            best_value = obj;
            x_best = x.clone();
        }
        if (prev - obj).abs() <= cfg.tol {
            termination = Termination::ToleranceMet;
            break;
        }
    }

    Ok(SolveReport {
        x_best,
        objective_value: best_value,
        objective_trace,
        lambda_trace: Vec::new(),
        iterations,
        termination,
        wall_time: start.elapsed(),
        lower_bound: None,
    })
}

/// Replace a clipped squared term by its minimal convex extension: the Huber
/// function with threshold `tau = sqrt(alpha / weight)`, which agrees with
/// the original term on its `alpha`-sublevel set and grows linearly outside.
/// The clipped objective is unchanged.
pub fn minimal_convex_extension(term: &ClippedTerm) -> Result<ClippedTerm> {
    match term.loss {
        LossAtom::Square => {
            if !(term.alpha.is_finite() && term.alpha > 0.0) {
                return Err(Error::Unsupported(format!(
                    "minimal convex extension needs a positive finite clip level, got {}",
                    term.alpha
                )));
            }
            let tau = (term.alpha / term.weight).sqrt();
            Ok(ClippedTerm {
                loss: LossAtom::Huber { delta: tau },
                expr: term.expr.clone(),
                weight: term.weight,
                alpha: term.alpha,
            })
        }
        _ => Err(Error::Unsupported(
            "minimal convex extension is only available for square losses".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AffineExpr, BaseObjective};

    fn sq_term(a: Vec<f64>, b: f64, alpha: f64) -> ClippedTerm {
        ClippedTerm {
            loss: LossAtom::Square,
            expr: AffineExpr::new(a, b),
            weight: 1.0,
            alpha,
        }
    }

    fn one_term(alpha: f64) -> Problem {
        // min{x^2, alpha}
        Problem::new(1, BaseObjective::free(1), vec![sq_term(vec![1.0], 0.0, alpha)]).unwrap()
    }

    #[test]
    fn exact_update_branches() {
        let p = one_term(0.25);
        assert_eq!(lambda_exact_update(&p, &[0.0]).unwrap().as_slice(), &[1.0]);
        assert_eq!(lambda_exact_update(&p, &[1.0]).unwrap().as_slice(), &[0.0]);
        // equality tie gives 1
        assert_eq!(lambda_exact_update(&p, &[0.5]).unwrap().as_slice(), &[1.0]);
    }

    #[test]
    fn sign_step_examples() {
        let l = WeightVector::new(vec![0.5]).unwrap();
        assert_eq!(
            lambda_sign_step(&l, &[-2.0], 0.1).unwrap().as_slice(),
            &[0.6]
        );
        let l = WeightVector::new(vec![0.95]).unwrap();
        assert_eq!(
            lambda_sign_step(&l, &[-1.0], 0.1).unwrap().as_slice(),
            &[1.0]
        );
        // sign(0) = +1
        let l = WeightVector::new(vec![0.5]).unwrap();
        let stepped = lambda_sign_step(&l, &[0.0], 0.1).unwrap();
        assert!((stepped.as_slice()[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn altmin_clip_inactive() {
        let p = Problem::new(
            1,
            BaseObjective {
                quad_terms: vec![],
                ridge: 1e-6,
                lower: vec![f64::NEG_INFINITY],
                upper: vec![f64::INFINITY],
            },
            vec![sq_term(vec![1.0], -1.0, 10.0)],
        )
        .unwrap();
        let r = solve_altmin(&p, &AltMinConfig::default()).unwrap();
        assert!((r.x_best[0] - 1.0).abs() < 1e-3);
        assert!(r.objective_value < 1e-4);
        assert_eq!(r.lambda_trace.last().unwrap()[0], 1.0);
        assert_eq!(r.termination, Termination::ToleranceMet);
    }

    #[test]
    fn altmin_two_well_instance_reaches_global() {
        // min{x^2, 1} + min{(x-10)^2, 1}; global value 1 near x = 0 or 10.
        let p = Problem::new(
            1,
            BaseObjective::free(1),
            vec![sq_term(vec![1.0], 0.0, 1.0), sq_term(vec![1.0], -10.0, 1.0)],
        )
        .unwrap();
        let r = solve_altmin(&p, &AltMinConfig::default()).unwrap();
        assert!((r.objective_value - 1.0).abs() < 1e-6, "{}", r.objective_value);
    }

    #[test]
    fn altmin_trace_is_nonincreasing() {
        let p = Problem::new(
            1,
            BaseObjective::free(1),
            vec![sq_term(vec![1.0], 0.0, 1.0), sq_term(vec![1.0], -10.0, 1.0)],
        )
        .unwrap();
        let r = solve_altmin(&p, &AltMinConfig::default()).unwrap();
        for w in r.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "trace increased: {w:?}");
        }
    }

    #[test]
    fn exact_mode_matches_closed_form_update() {
        let p = Problem::new(
            1,
            BaseObjective::free(1),
            vec![sq_term(vec![1.0], 0.0, 1.0), sq_term(vec![1.0], -10.0, 1.0)],
        )
        .unwrap();
        let cfg = AltMinConfig {
            mode: AltMinMode::Exact,
            ..AltMinConfig::default()
        };
        let r = solve_altmin(&p, &cfg).unwrap();
        for lam in &r.lambda_trace[1..] {
            assert!(lam.iter().all(|&v| v == 0.0 || v == 1.0));
        }
    }

    #[test]
    fn ccp_linearize_cases() {
        let p = one_term(1.0);
        let lin = ccp_linearize(&p, &[0.0]).unwrap();
        assert_eq!(lin[0].slope, vec![0.0]);
        assert_eq!(lin[0].excess, 0.0);

        let lin = ccp_linearize(&p, &[2.0]).unwrap();
        assert_eq!(lin[0].slope, vec![4.0]);
        assert_eq!(lin[0].excess, 3.0);

        // tie rule: slope 0 at f = alpha
        let lin = ccp_linearize(&p, &[1.0]).unwrap();
        assert_eq!(lin[0].slope, vec![0.0]);
    }

    #[test]
    fn ccp_majorizer_dominates_objective() {
        let p = Problem::new(
            1,
            BaseObjective::free(1),
            vec![sq_term(vec![1.0], 0.0, 1.0), sq_term(vec![1.0], -3.0, 0.5)],
        )
        .unwrap();
        let xk = [1.7];
        let lin = ccp_linearize(&p, &xk).unwrap();
        let majorizer = |x: &[f64]| -> f64 {
            let mut v = p.base.smooth_value(x);
            for (t, l) in p.terms.iter().zip(&lin) {
                let lin_h = l.excess + l.slope[0] * (x[0] - xk[0]);
                v += t.raw(x) - lin_h;
            }
            v
        };
        // majorizer >= true objective at sample points, equality at xk
        let mut u = -4.0;
        while u <= 4.0 {
            let maj = majorizer(&[u]);
            let obj = p.eval_objective(&[u]).unwrap();
            assert!(maj >= obj - 1e-9, "majorization fails at {u}: {maj} < {obj}");
            u += 0.13;
        }
        assert!((majorizer(&xk) - p.eval_objective(&xk).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ccp_two_well_instance() {
        let p = Problem::new(
            1,
            BaseObjective::free(1),
            vec![sq_term(vec![1.0], 0.0, 1.0), sq_term(vec![1.0], -10.0, 1.0)],
        )
        .unwrap();
        let r = solve_ccp(&p, &CcpConfig::default()).unwrap();
        assert!((r.objective_value - 1.0).abs() < 1e-6);
        for w in r.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn ccp_unclipped_matches_convex_solve() {
        // alpha generous: CCP equals plain convex minimization of f0 + f1
        let p = Problem::new(
            1,
            BaseObjective {
                quad_terms: vec![],
                ridge: 0.5,
                lower: vec![f64::NEG_INFINITY],
                upper: vec![f64::INFINITY],
            },
            vec![sq_term(vec![1.0], -2.0, 100.0)],
        )
        .unwrap();
        let r = solve_ccp(&p, &CcpConfig::default()).unwrap();
        let convex = weighted_subproblem(
            &p,
            &WeightVector::ones(1),
            &[0.0],
            &InnerConfig::default(),
        )
        .unwrap();
        // the subproblem value includes no clip constant here (lambda = 1)
        assert!((r.objective_value - convex.value).abs() < 1e-6);
    }

    #[test]
    fn extension_examples() {
        let term = sq_term(vec![1.0], 0.0, 0.25);
        let ext = minimal_convex_extension(&term).unwrap();
        match ext.loss {
            LossAtom::Huber { delta } => assert!((delta - 0.5).abs() < 1e-15),
            _ => panic!("expected huber"),
        }
        // inside the threshold the extension equals the square
        assert!((ext.raw(&[0.3]) - 0.09).abs() < 1e-15);
        // outside: 0.5 * (2*1 - 0.5) = 0.75
        assert!((ext.raw(&[1.0]) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn extension_preserves_clipped_values() {
        let term = ClippedTerm {
            loss: LossAtom::Square,
            expr: AffineExpr::new(vec![1.3], -0.4),
            weight: 0.7,
            alpha: 0.35,
        };
        let ext = minimal_convex_extension(&term).unwrap();
        let mut u = -5.0;
        while u <= 5.0 {
            let orig = term.clipped(&[u]);
            let new = ext.clipped(&[u]);
            assert!((orig - new).abs() < 1e-12, "mismatch at {u}: {orig} vs {new}");
            u += 0.01;
        }
    }

    #[test]
    fn extension_rejects_non_square() {
        let term = ClippedTerm {
            loss: LossAtom::Logistic { label: 1.0 },
            expr: AffineExpr::new(vec![1.0], 0.0),
            weight: 1.0,
            alpha: 1.0,
        };
        assert!(matches!(
            minimal_convex_extension(&term),
            Err(Error::Unsupported(_))
        ));
    }
}
