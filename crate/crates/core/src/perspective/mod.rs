//! Perspective transformation of the clipped problem.
//!
//! For a convex `f`, the perspective is `f^p(x, t) = t f(x / t)` for `t > 0`
//! with the recession-function limit at `t = 0`. Replacing each clipped term
//! by perspectives with a Boolean selector `t_i` gives an equivalent
//! mixed-integer convex program; relaxing `t` to `[0, 1]` gives a convex
//! problem whose optimal value is a lower bound on the clipped objective,
//! i.e. a suboptimality certificate for any heuristic solution.

mod admm;
mod relax;

pub use admm::{solve_relaxation_admm, AdmmConfig};
pub use relax::{solve_relaxation, RelaxConfig};

use crate::error::{Error, Result};
use crate::model::{BaseObjective, ClippedTerm, Problem, SparseExpr, BOX_FEAS_TOL};

/// Variables of the perspective formulation: the shared `x`, per-term
/// splits `z_i`, and selectors `t_i`.
#[derive(Debug, Clone)]
pub struct PerspectiveVars {
    pub x: Vec<f64>,
    pub z: Vec<Vec<f64>>,
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxStatus {
    Converged,
    MaxIters,
    Infeasible,
}

/// Lower-bound certificate from a relaxation solve.
#[derive(Debug, Clone)]
pub struct BoundCertificate {
    /// Achieved relaxation objective: a lower bound on the global optimum
    /// (up to solver tolerance).
    pub lower_bound: f64,
    pub solution: PerspectiveVars,
    pub status: RelaxStatus,
    pub iters: usize,
    /// Extra ridge added to make the base superlinear, zero when none.
    pub auto_ridge: f64,
    /// RMS consensus residual `y_i - x` at termination; `None` for solvers
    /// without a consensus split.
    pub primal_residual: Option<f64>,
}

impl BoundCertificate {
    /// Suboptimality certificate `p - q*` for a heuristic value `p`.
    pub fn gap_vs(&self, heuristic_value: f64) -> f64 {
        heuristic_value - self.lower_bound
    }
}

/// Perspective of one weighted clipped atom: `t * w * loss((a^T z)/t + b)`
/// for `t > 0`, and the recession value `w * rec(a^T z)` at `t = 0`.
pub fn perspective_term_eval(term: &ClippedTerm, z: &[f64], t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::Validation(format!(
            "perspective requires t >= 0, got {t}"
        )));
    }
    let az = term.expr.dot(z);
    if t == 0.0 {
        Ok(term.weight * term.loss.recession(az))
    } else {
        Ok(t * term.weight * term.loss.value(az / t + term.expr.b))
    }
}

/// Perspective of the base objective (quadratics + ridge + box indicator):
/// `sum_k c_k (a_k^T v + b_k s)^2 / s + r ||v||^2 / s` plus the indicator of
/// `s*l <= v <= s*u`, with the exact recession limit at `s = 0`.
pub fn perspective_base_eval(
    base: &BaseObjective,
    extra_ridge: f64,
    v: &[f64],
    s: f64,
) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::Validation(format!(
            "perspective requires t >= 0, got {s}"
        )));
    }
    let r = base.ridge + extra_ridge;
    if s == 0.0 {
        // Recession: quadratics force a_k^T v = 0, ridge forces v = 0,
        // box forces v into the recession cone of [l, u].
        for q in &base.quad_terms {
            if q.expr.dot(v).abs() > BOX_FEAS_TOL {
                return Ok(f64::INFINITY);
            }
        }
        if r > 0.0 && v.iter().any(|&vj| vj.abs() > BOX_FEAS_TOL) {
            return Ok(f64::INFINITY);
        }
        for (j, &vj) in v.iter().enumerate() {
            if base.lower[j].is_finite() && vj < -BOX_FEAS_TOL {
                return Ok(f64::INFINITY);
            }
            if base.upper[j].is_finite() && vj > BOX_FEAS_TOL {
                return Ok(f64::INFINITY);
            }
        }
        return Ok(0.0);
    }
    // Box: s*l <= v <= s*u within tolerance.
    for (j, &vj) in v.iter().enumerate() {
        let lo = s * base.lower[j];
        let hi = s * base.upper[j];
        if vj < lo - BOX_FEAS_TOL || vj > hi + BOX_FEAS_TOL {
            return Ok(f64::INFINITY);
        }
    }
    let mut value = 0.0;
    for q in &base.quad_terms {
        let e = q.expr.dot(v) + q.expr.b * s;
        value += q.c * e * e / s;
    }
    if r > 0.0 {
        value += r * v.iter().map(|a| a * a).sum::<f64>() / s;
    }
    Ok(value)
}

/// Exact objective of the relaxed perspective formulation at `vars`:
/// `sum_i f_i^p(z_i, t_i) + (1 - t_i) alpha_i
///  + (1/m) (f0^p(z_i, t_i) + f0^p(x - z_i, 1 - t_i))`.
pub fn relaxation_objective(
    problem: &Problem,
    vars: &PerspectiveVars,
    extra_ridge: f64,
) -> Result<f64> {
    let m = problem.m();
    let n = problem.n;
    if vars.x.len() != n {
        return Err(Error::DimensionMismatch {
            context: "vars.x".into(),
            expected: n,
            got: vars.x.len(),
        });
    }
    if vars.z.len() != m || vars.t.len() != m {
        return Err(Error::DimensionMismatch {
            context: "vars.z / vars.t".into(),
            expected: m,
            got: vars.z.len().min(vars.t.len()),
        });
    }
    let inv_m = 1.0 / m as f64;
    let mut total = 0.0;
    let mut diff = vec![0.0; n];
    for i in 0..m {
        let t = vars.t[i];
        if !(-1e-12..=1.0 + 1e-12).contains(&t) {
            return Err(Error::Validation(format!(
                "relaxation requires 0 <= t <= 1, got t[{i}] = {t}"
            )));
        }
        let t = t.clamp(0.0, 1.0);
        let z = &vars.z[i];
        if z.len() != n {
            return Err(Error::DimensionMismatch {
                context: format!("vars.z[{i}]"),
                expected: n,
                got: z.len(),
            });
        }
        let term = &problem.terms[i];
        total += perspective_term_eval(term, z, t)?;
        total += if t == 1.0 { 0.0 } else { (1.0 - t) * term.alpha };
        for j in 0..n {
            diff[j] = vars.x[j] - z[j];
        }
        total += inv_m
            * (perspective_base_eval(&problem.base, extra_ridge, z, t)?
                + perspective_base_eval(&problem.base, extra_ridge, &diff, 1.0 - t)?);
        if total == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
    }
    Ok(total)
}

/// Objective actually minimized by the relaxation solvers: the smooth
/// perspective parts with the box coupling as a quadratic penalty (see
/// [`COUPLING_MU`]), the box on `x` itself still hard. Selectors at exactly
/// 0 or 1 use the analytic limits (`z = x` resp. `z = 0`), where the penalty
/// vanishes. This is a relaxation of the hard-constrained formulation, so
/// its value at any point with `x` in the box is a valid lower-bound
/// certificate once minimized.
pub(crate) fn penalized_objective(
    problem: &Problem,
    vars: &PerspectiveVars,
    extra_ridge: f64,
) -> Result<f64> {
    let n = problem.n;
    let m = problem.m();
    let x = &vars.x;
    for j in 0..n {
        if x[j] < problem.base.lower[j] - BOX_FEAS_TOL
            || x[j] > problem.base.upper[j] + BOX_FEAS_TOL
        {
            return Ok(f64::INFINITY);
        }
    }
    let r_eff = problem.base.ridge + extra_ridge;
    let mut base_smooth = 0.0;
    for q in &problem.base.quad_terms {
        let e = q.expr.value(x);
        base_smooth += q.c * e * e;
    }
    base_smooth += r_eff * x.iter().map(|a| a * a).sum::<f64>();
    let inv_m = 1.0 / m as f64;

    let mut total = 0.0;
    let mut diff = vec![0.0; n];
    for i in 0..m {
        let t = vars.t[i];
        if t == 1.0 {
            total += problem.terms[i].raw(x) + inv_m * base_smooth;
        } else if t == 0.0 {
            total += problem.terms[i].alpha + inv_m * base_smooth;
        } else {
            let block = BlockEval::new(problem, i, extra_ridge);
            total += block.value(x, &vars.z[i], t, &mut diff);
        }
    }
    Ok(total)
}

/// Extra ridge needed to make the base superlinear: zero when `ridge > 0`
/// or the box is compact, `sigma` otherwise.
pub(crate) fn required_auto_ridge(problem: &Problem, sigma: f64) -> f64 {
    if problem.base_is_superlinear() {
        0.0
    } else {
        sigma
    }
}

/// Weight of the smooth one-sided quadratic penalties standing in for the
/// box coupling `t*l <= z <= t*u`, `(1-t)*l <= y - z <= (1-t)*u`. A penalty
/// (instead of a hard constraint) keeps the solver's constraint set
/// separable, so componentwise projection is the exact metric projection;
/// since a penalty only relaxes the problem, the bound stays valid.
pub(crate) const COUPLING_MU: f64 = 1e4;

/// Guarded smooth evaluation of one perspective block, shared by the direct
/// relaxation solver and the ADMM blocks. All `t` arguments are assumed to
/// lie in `[t_floor, 1 - t_floor]`, so the `1/t` forms are well defined.
pub(crate) struct BlockEval<'a> {
    pub base: &'a BaseObjective,
    pub term: &'a ClippedTerm,
    pub term_sparse: SparseExpr,
    pub quad_sparse: Vec<SparseExpr>,
    pub r_eff: f64,
    pub inv_m: f64,
    /// Coordinates with at least one finite box bound.
    boxed: Vec<usize>,
}

impl<'a> BlockEval<'a> {
    pub fn new(problem: &'a Problem, i: usize, extra_ridge: f64) -> Self {
        BlockEval {
            base: &problem.base,
            term: &problem.terms[i],
            term_sparse: problem.terms[i].expr.sparse(),
            quad_sparse: problem
                .base
                .quad_terms
                .iter()
                .map(|q| q.expr.sparse())
                .collect(),
            r_eff: problem.base.ridge + extra_ridge,
            inv_m: 1.0 / problem.m() as f64,
            boxed: (0..problem.n)
                .filter(|&j| {
                    problem.base.lower[j].is_finite() || problem.base.upper[j].is_finite()
                })
                .collect(),
        }
    }

    /// Penalty `mu * sum_j dist(z_j, [t l_j, t u_j])^2
    ///               + dist(y_j - z_j, [(1-t) l_j, (1-t) u_j])^2`, value only.
    fn coupling_value(&self, y: &[f64], z: &[f64], t: f64) -> f64 {
        let mut v = 0.0;
        for &j in &self.boxed {
            let (lj, uj) = (self.base.lower[j], self.base.upper[j]);
            if lj.is_finite() {
                v += (t * lj - z[j]).max(0.0).powi(2);
                v += ((1.0 - t) * lj - (y[j] - z[j])).max(0.0).powi(2);
            }
            if uj.is_finite() {
                v += (z[j] - t * uj).max(0.0).powi(2);
                v += ((y[j] - z[j]) - (1.0 - t) * uj).max(0.0).powi(2);
            }
        }
        COUPLING_MU * v
    }

    /// Penalty value; accumulates d/dy, d/dz, returns `(value, d/dt)`.
    fn coupling_vg(&self, y: &[f64], z: &[f64], t: f64, gy: &mut [f64], gz: &mut [f64]) -> (f64, f64) {
        let mu = COUPLING_MU;
        let mut v = 0.0;
        let mut gt = 0.0;
        for &j in &self.boxed {
            let (lj, uj) = (self.base.lower[j], self.base.upper[j]);
            if lj.is_finite() {
                let a = (t * lj - z[j]).max(0.0);
                if a > 0.0 {
                    v += a * a;
                    gz[j] -= 2.0 * mu * a;
                    gt += 2.0 * mu * a * lj;
                }
                let b = ((1.0 - t) * lj - (y[j] - z[j])).max(0.0);
                if b > 0.0 {
                    v += b * b;
                    gy[j] -= 2.0 * mu * b;
                    gz[j] += 2.0 * mu * b;
                    gt -= 2.0 * mu * b * lj;
                }
            }
            if uj.is_finite() {
                let a = (z[j] - t * uj).max(0.0);
                if a > 0.0 {
                    v += a * a;
                    gz[j] += 2.0 * mu * a;
                    gt -= 2.0 * mu * a * uj;
                }
                let b = ((y[j] - z[j]) - (1.0 - t) * uj).max(0.0);
                if b > 0.0 {
                    v += b * b;
                    gy[j] += 2.0 * mu * b;
                    gz[j] -= 2.0 * mu * b;
                    gt += 2.0 * mu * b * uj;
                }
            }
        }
        (mu * v, gt)
    }

    /// `t w loss((a^T z)/t + b)` value only.
    fn atom_value(&self, z: &[f64], t: f64) -> f64 {
        let u = self.term_sparse.dot(z) / t + self.term.expr.b;
        t * self.term.weight * self.term.loss.value(u)
    }

    /// Atom perspective value; accumulates d/dz into `gz` and returns
    /// `(value, d/dt)`.
    fn atom_vg(&self, z: &[f64], t: f64, gz: &mut [f64]) -> (f64, f64) {
        let w = self.term.weight;
        let b = self.term.expr.b;
        let u = self.term_sparse.dot(z) / t + b;
        let lv = self.term.loss.value(u);
        let lg = self.term.loss.grad(u);
        self.term_sparse.accumulate(w * lg, gz);
        (t * w * lv, w * (lv - lg * (u - b)))
    }

    /// Smooth part of the base perspective `Q(v, s)` (box excluded), value
    /// only.
    fn base_value(&self, v: &[f64], s: f64) -> f64 {
        let mut value = 0.0;
        for (q, e) in self.base.quad_terms.iter().zip(&self.quad_sparse) {
            let ev = e.dot(v) + e.b * s;
            value += q.c * ev * ev / s;
        }
        if self.r_eff > 0.0 {
            value += self.r_eff * v.iter().map(|a| a * a).sum::<f64>() / s;
        }
        value
    }

    /// Base perspective; accumulates d/dv into `gv`, returns `(value, d/ds)`.
    fn base_vg(&self, v: &[f64], s: f64, gv: &mut [f64]) -> (f64, f64) {
        let mut value = 0.0;
        let mut gs = 0.0;
        for (q, e) in self.base.quad_terms.iter().zip(&self.quad_sparse) {
            let ev = e.dot(v) + e.b * s;
            value += q.c * ev * ev / s;
            e.accumulate(2.0 * q.c * ev / s, gv);
            gs += 2.0 * q.c * ev * e.b / s - q.c * ev * ev / (s * s);
        }
        if self.r_eff > 0.0 {
            let nsq: f64 = v.iter().map(|a| a * a).sum();
            value += self.r_eff * nsq / s;
            for (gj, &vj) in gv.iter_mut().zip(v) {
                *gj += 2.0 * self.r_eff * vj / s;
            }
            gs -= self.r_eff * nsq / (s * s);
        }
        (value, gs)
    }

    /// Full smooth block value
    /// `f_i^p(z, t) + (1 - t) alpha + (1/m)(Q(z, t) + Q(y - z, 1 - t))`
    /// plus the box-coupling penalty.
    pub fn value(&self, y: &[f64], z: &[f64], t: f64, diff: &mut [f64]) -> f64 {
        for j in 0..y.len() {
            diff[j] = y[j] - z[j];
        }
        self.atom_value(z, t)
            + (1.0 - t) * self.term.alpha
            + self.inv_m * (self.base_value(z, t) + self.base_value(diff, 1.0 - t))
            + self.coupling_value(y, z, t)
    }

    /// Full smooth block value and gradient. `gy`/`gz` are accumulated;
    /// returns `(value, d/dt)`.
    pub fn value_grad(
        &self,
        y: &[f64],
        z: &[f64],
        t: f64,
        gy: &mut [f64],
        gz: &mut [f64],
        diff: &mut [f64],
        gdiff: &mut [f64],
    ) -> (f64, f64) {
        let n = y.len();
        let (atom_v, atom_gt) = self.atom_vg(z, t, gz);
        let mut value = atom_v + (1.0 - t) * self.term.alpha;
        let mut gt = atom_gt - self.term.alpha;

        let (bz_v, bz_gs) = self.base_vg_scaled(z, t, gz);
        value += bz_v;
        gt += bz_gs;

        for j in 0..n {
            diff[j] = y[j] - z[j];
        }
        gdiff.fill(0.0);
        let (bd_v, bd_gs) = self.base_vg(diff, 1.0 - t, gdiff);
        value += self.inv_m * bd_v;
        gt -= self.inv_m * bd_gs;
        for j in 0..n {
            let g = self.inv_m * gdiff[j];
            gy[j] += g;
            gz[j] -= g;
        }
        let (pen, pen_gt) = self.coupling_vg(y, z, t, gy, gz);
        value += pen;
        gt += pen_gt;
        (value, gt)
    }

    fn base_vg_scaled(&self, v: &[f64], s: f64, gv: &mut [f64]) -> (f64, f64) {
        // like base_vg but scaled by inv_m, accumulating into gv
        let mut scratch = vec![0.0; v.len()];
        let (val, gs) = self.base_vg(v, s, &mut scratch);
        for (gj, sj) in gv.iter_mut().zip(&scratch) {
            *gj += self.inv_m * sj;
        }
        (self.inv_m * val, self.inv_m * gs)
    }

    /// Rough curvature bound used to seed the line search.
    pub fn lipschitz_seed(&self) -> f64 {
        let quad: f64 = self
            .base
            .quad_terms
            .iter()
            .map(|q| 2.0 * q.c * q.expr.norm_sq())
            .sum();
        let term = self.term.weight
            * self.term.loss.curvature_bound()
            * self.term.expr.norm_sq();
        let coupling = if self.boxed.is_empty() {
            0.0
        } else {
            8.0 * COUPLING_MU
        };
        2.0 * (quad + 2.0 * self.r_eff) + 2.0 * term + coupling + 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AffineExpr, LossAtom};

    fn sq_term(a: Vec<f64>, b: f64, alpha: f64) -> ClippedTerm {
        ClippedTerm {
            loss: LossAtom::Square,
            expr: AffineExpr::new(a, b),
            weight: 1.0,
            alpha,
        }
    }

    #[test]
    fn perspective_of_square() {
        // f(x) = x^2: f^p(1, 0.5) = 0.5 * (1/0.5)^2 = 2
        let t = sq_term(vec![1.0], 0.0, 1.0);
        assert!((perspective_term_eval(&t, &[1.0], 0.5).unwrap() - 2.0).abs() < 1e-12);
        // t = 1 recovers f
        assert!((perspective_term_eval(&t, &[3.0], 1.0).unwrap() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn superlinear_limit_at_zero() {
        let t = sq_term(vec![1.0], 0.0, 1.0);
        assert_eq!(perspective_term_eval(&t, &[1.0], 0.0).unwrap(), f64::INFINITY);
        assert_eq!(perspective_term_eval(&t, &[0.0], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn logistic_recession_at_zero() {
        let t = ClippedTerm {
            loss: LossAtom::Logistic { label: 1.0 },
            expr: AffineExpr::new(vec![1.0], 0.0),
            weight: 2.0,
            alpha: 1.0,
        };
        // w * max(-label * a^T z, 0)
        assert!((perspective_term_eval(&t, &[-3.0], 0.0).unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(perspective_term_eval(&t, &[3.0], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_t_is_domain_error() {
        let t = sq_term(vec![1.0], 0.0, 1.0);
        assert!(perspective_term_eval(&t, &[1.0], -0.1).is_err());
    }

    #[test]
    fn positive_homogeneity() {
        let term = ClippedTerm {
            loss: LossAtom::Huber { delta: 0.6 },
            expr: AffineExpr::new(vec![1.2, -0.4], 0.3),
            weight: 0.8,
            alpha: 1.0,
        };
        let mut state = 99u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
        };
        for _ in 0..100 {
            let z = vec![next(), next()];
            let t = next().abs() + 0.05;
            let s = next().abs() + 0.1;
            let f1 = perspective_term_eval(&term, &z, t).unwrap();
            let z2: Vec<f64> = z.iter().map(|v| s * v).collect();
            let f2 = perspective_term_eval(&term, &z2, s * t).unwrap();
            assert!(
                (f2 - s * f1).abs() <= 1e-9 * (1.0 + f1.abs() * s),
                "homogeneity violated: {f2} vs {}",
                s * f1
            );
        }
    }

    fn small_problem() -> Problem {
        Problem::new(
            1,
            BaseObjective {
                quad_terms: vec![],
                ridge: 0.5,
                lower: vec![f64::NEG_INFINITY],
                upper: vec![f64::INFINITY],
            },
            vec![sq_term(vec![1.0], -1.0, 0.8), sq_term(vec![1.0], 1.0, 0.8)],
        )
        .unwrap()
    }

    #[test]
    fn relaxation_objective_reduces_at_binary_t() {
        let p = small_problem();
        let x = vec![0.4];
        // all t = 1, z_i = x: value = f0(x) + sum f_i(x)
        let vars = PerspectiveVars {
            x: x.clone(),
            z: vec![x.clone(), x.clone()],
            t: vec![1.0, 1.0],
        };
        let got = relaxation_objective(&p, &vars, 0.0).unwrap();
        let expect = p.base.smooth_value(&x)
            + p.terms.iter().map(|t| t.raw(&x)).sum::<f64>();
        assert!((got - expect).abs() < 1e-12);

        // all t = 0, z_i = 0: value = sum alpha_i + f0(x)
        let vars = PerspectiveVars {
            x: x.clone(),
            z: vec![vec![0.0], vec![0.0]],
            t: vec![0.0, 0.0],
        };
        let got = relaxation_objective(&p, &vars, 0.0).unwrap();
        let expect = 1.6 + p.base.smooth_value(&x);
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn relaxation_objective_is_convex_along_segments() {
        let p = small_problem();
        let va = PerspectiveVars {
            x: vec![0.7],
            z: vec![vec![0.2], vec![0.3]],
            t: vec![0.4, 0.6],
        };
        let vb = PerspectiveVars {
            x: vec![-0.5],
            z: vec![vec![-0.1], vec![-0.2]],
            t: vec![0.8, 0.3],
        };
        let mid = PerspectiveVars {
            x: vec![0.5 * (va.x[0] + vb.x[0])],
            z: vec![
                vec![0.5 * (va.z[0][0] + vb.z[0][0])],
                vec![0.5 * (va.z[1][0] + vb.z[1][0])],
            ],
            t: vec![0.5 * (va.t[0] + vb.t[0]), 0.5 * (va.t[1] + vb.t[1])],
        };
        let fa = relaxation_objective(&p, &va, 0.0).unwrap();
        let fb = relaxation_objective(&p, &vb, 0.0).unwrap();
        let fm = relaxation_objective(&p, &mid, 0.0).unwrap();
        assert!(fm <= 0.5 * (fa + fb) + 1e-12);
    }

    #[test]
    fn base_perspective_box_constraints() {
        let base = BaseObjective {
            quad_terms: vec![],
            ridge: 0.0,
            lower: vec![0.0],
            upper: vec![1.0],
        };
        // v must lie in [s*l, s*u]
        assert_eq!(
            perspective_base_eval(&base, 0.0, &[0.8], 0.5).unwrap(),
            f64::INFINITY
        );
        assert_eq!(perspective_base_eval(&base, 0.0, &[0.4], 0.5).unwrap(), 0.0);
    }
}

#[cfg(test)]
mod grad_tests {
    use super::*;
    use crate::model::{AffineExpr, LossAtom, QuadTerm};

    #[test]
    fn fd_check_block_grad() {
        let p = Problem::new(
            2,
            BaseObjective {
                quad_terms: vec![QuadTerm { c: 0.7, expr: AffineExpr::new(vec![1.0, -0.5], 0.2) }],
                ridge: 1e-3,
                lower: vec![f64::NEG_INFINITY; 2],
                upper: vec![f64::INFINITY; 2],
            },
            vec![
                ClippedTerm { loss: LossAtom::Huber { delta: 0.8 }, expr: AffineExpr::new(vec![0.9, 0.4], -0.3), weight: 1.3, alpha: 0.6 },
                ClippedTerm { loss: LossAtom::Square, expr: AffineExpr::new(vec![-0.2, 1.1], 0.1), weight: 0.5, alpha: 2.0 },
            ],
        ).unwrap();
        let block = BlockEval::new(&p, 0, 0.0);
        let y = vec![0.3, -0.8];
        let z = vec![0.1, -0.2];
        let t = 0.37;
        let n = 2;
        let mut gy = vec![0.0; n];
        let mut gz = vec![0.0; n];
        let mut diff = vec![0.0; n];
        let mut gdiff = vec![0.0; n];
        let (v0, gt) = block.value_grad(&y, &z, t, &mut gy, &mut gz, &mut diff, &mut gdiff);
        let vchk = block.value(&y, &z, t, &mut diff);
        assert!((v0 - vchk).abs() < 1e-12, "value mismatch {v0} vs {vchk}");
        let h = 1e-6;
        for j in 0..n {
            let mut y2 = y.clone();
            y2[j] += h;
            let fd = (block.value(&y2, &z, t, &mut diff) - v0) / h;
            assert!((fd - gy[j]).abs() < 1e-4, "gy[{j}] fd {fd} vs {}", gy[j]);
            let mut z2 = z.clone();
            z2[j] += h;
            let fd = (block.value(&y, &z2, t, &mut diff) - v0) / h;
            assert!((fd - gz[j]).abs() < 1e-4, "gz[{j}] fd {fd} vs {}", gz[j]);
        }
        let fd = (block.value(&y, &z, t + h, &mut diff) - v0) / h;
        assert!((fd - gt).abs() < 1e-4, "gt fd {fd} vs {gt}");
    }
}
