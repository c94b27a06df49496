//! Consensus ADMM for the relaxed perspective formulation.
//!
//! Each clipped term owns a block `(y_i, z_i, t_i)` with a local copy `y_i`
//! of the shared variable; consensus `y_i = x` is enforced through scaled
//! duals `u_i`. The block subproblems are independent, so they run in
//! parallel, which is the point of this solver on many-term problems.
//!
//! As in the direct solver, a free selector is kept inside
//! `[t_floor, 1 - t_floor]` to keep the block well conditioned; when it
//! reaches the margin, the block is additionally solved with `t` pinned to
//! the nearby binary value (an unconstrained convex problem in `y` alone)
//! and the cheaper of the two minimizers wins.

use crate::error::Result;
use crate::model::Problem;
use crate::parallel;
use crate::perspective::{
    penalized_objective, required_auto_ridge, BlockEval, BoundCertificate, PerspectiveVars,
    RelaxStatus,
};
use crate::solver::engine::{minimize_projected, EngineResult, SmoothObjective};
use crate::solver::{project_box_in_place, InnerConfig};

#[derive(Debug, Clone)]
pub struct AdmmConfig {
    /// Augmented-Lagrangian penalty.
    pub rho: f64,
    pub max_iters: usize,
    /// RMS primal-residual tolerance on `y_i - x`.
    pub primal_tol: f64,
    /// RMS dual-residual tolerance on `rho (x - x_prev)`.
    pub dual_tol: f64,
    /// Interior margin for free selectors.
    pub t_floor: f64,
    pub auto_ridge: f64,
    /// Inner solver settings for the block subproblems.
    pub block_inner: InnerConfig,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            rho: 1.0,
            max_iters: 2000,
            primal_tol: 1e-5,
            dual_tol: 1e-5,
            t_floor: 1e-4,
            auto_ridge: 1e-6,
            block_inner: InnerConfig {
                grad_tol: 1e-7,
                max_iters: 500,
                ..InnerConfig::default()
            },
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum BlockMode {
    /// Variable `[y | z | t]` with `t` in the interior margin.
    Free,
    /// `t = 1`, `z = y`: the term contributes `f_i(y)`.
    On,
    /// `t = 0`, `z = 0`: the term contributes `alpha_i`.
    Off,
}

/// One block subproblem: minimize the block objective plus the consensus
/// proximal term `(rho/2) ||y - c||^2` with `c = x - u_i`.
struct BlockProx<'a> {
    block: &'a BlockEval<'a>,
    n: usize,
    mode: BlockMode,
    rho: f64,
    center: Vec<f64>,
}

impl BlockProx<'_> {
    fn prox_value(&self, y: &[f64]) -> f64 {
        0.5 * self.rho
            * y.iter()
                .zip(&self.center)
                .map(|(a, c)| (a - c) * (a - c))
                .sum::<f64>()
    }

    /// Smooth part of `(1/m) f0` at `y`, value only.
    fn base_smooth(&self, y: &[f64]) -> f64 {
        let mut v = 0.0;
        for (q, e) in self.block.base.quad_terms.iter().zip(&self.block.quad_sparse) {
            let ev = e.dot(y) + e.b;
            v += q.c * ev * ev;
        }
        v += self.block.r_eff * y.iter().map(|a| a * a).sum::<f64>();
        self.block.inv_m * v
    }

    /// Smooth part of `(1/m) f0`: value, gradient accumulated into `g`.
    fn base_smooth_grad(&self, y: &[f64], g: &mut [f64]) -> f64 {
        let scale = self.block.inv_m;
        let mut v = 0.0;
        for (q, e) in self.block.base.quad_terms.iter().zip(&self.block.quad_sparse) {
            let ev = e.dot(y) + e.b;
            v += q.c * ev * ev;
            e.accumulate(scale * 2.0 * q.c * ev, g);
        }
        if self.block.r_eff > 0.0 {
            v += self.block.r_eff * y.iter().map(|a| a * a).sum::<f64>();
            for (gj, &yj) in g.iter_mut().zip(y) {
                *gj += scale * 2.0 * self.block.r_eff * yj;
            }
        }
        scale * v
    }
}

impl SmoothObjective for BlockProx<'_> {
    fn value(&self, v: &[f64]) -> f64 {
        let n = self.n;
        let y = &v[..n];
        let prox = self.prox_value(y);
        match self.mode {
            BlockMode::Free => {
                let mut diff = vec![0.0; n];
                self.block.value(y, &v[n..2 * n], v[2 * n], &mut diff) + prox
            }
            BlockMode::On => self.block.term.raw(y) + self.base_smooth(y) + prox,
            BlockMode::Off => self.block.term.alpha + self.base_smooth(y) + prox,
        }
    }

    fn value_grad(&self, v: &[f64], g: &mut [f64]) -> f64 {
        let n = self.n;
        let y = &v[..n];
        g.fill(0.0);
        let mut value = match self.mode {
            BlockMode::Free => {
                let (gy, rest) = g.split_at_mut(n);
                let (gz, gt) = rest.split_at_mut(n);
                let mut diff = vec![0.0; n];
                let mut gdiff = vec![0.0; n];
                let (val, dt) = self.block.value_grad(
                    y,
                    &v[n..2 * n],
                    v[2 * n],
                    gy,
                    gz,
                    &mut diff,
                    &mut gdiff,
                );
                gt[0] = dt;
                val
            }
            BlockMode::On => {
                let val = self.block.term.raw(y);
                let scale = self.block.term.raw_grad_scale(y);
                for (gj, &aj) in g.iter_mut().zip(&self.block.term.expr.a) {
                    *gj += scale * aj;
                }
                val + self.base_smooth_grad(y, g)
            }
            BlockMode::Off => self.block.term.alpha + self.base_smooth_grad(y, g),
        };
        for j in 0..n {
            let d = v[j] - self.center[j];
            value += 0.5 * self.rho * d * d;
            g[j] += self.rho * d;
        }
        value
    }
}

struct BlockState {
    /// `[y | z | t]`, warm-started across sweeps.
    v: Vec<f64>,
    u: Vec<f64>,
    /// Binary pin chosen in the last sweep, if any.
    mode: Option<bool>,
    /// `alpha = +inf` terms stay pinned on forever.
    forced_on: bool,
}

fn solve_variant(
    block: &BlockEval,
    mode: BlockMode,
    n: usize,
    rho: f64,
    center: Vec<f64>,
    v0: Vec<f64>,
    lower: &[f64],
    upper: &[f64],
    t_floor: f64,
    inner: &InnerConfig,
) -> Result<EngineResult> {
    let obj = BlockProx {
        block,
        n,
        mode,
        rho,
        center,
    };
    // y in the box, t in the margin, z free (coupling is penalized).
    let free = mode == BlockMode::Free;
    let project = move |v: &mut [f64]| {
        let (y, rest) = v.split_at_mut(n);
        project_box_in_place(y, lower, upper);
        if free {
            let (_z, t) = rest.split_at_mut(n);
            t[0] = t[0].clamp(t_floor, 1.0 - t_floor);
        }
    };
    minimize_projected(&obj, &project, v0, block.lipschitz_seed() + rho, inner)
}

/// Solve the relaxed perspective formulation by consensus ADMM and return a
/// lower-bound certificate. Agrees with [`solve_relaxation`] up to solver
/// tolerance but splits the work over independent per-term blocks.
///
/// [`solve_relaxation`]: super::solve_relaxation
pub fn solve_relaxation_admm(problem: &Problem, cfg: &AdmmConfig) -> Result<BoundCertificate> {
    problem.validate()?;
    let n = problem.n;
    let m = problem.m();
    if m == 0 {
        return super::relax::convex_fallback(problem, &cfg.block_inner);
    }
    let extra_ridge = required_auto_ridge(problem, cfg.auto_ridge);
    let blocks: Vec<BlockEval> =
        (0..m).map(|i| BlockEval::new(problem, i, extra_ridge)).collect();

    let mut x = vec![0.0; n];
    project_box_in_place(&mut x, &problem.base.lower, &problem.base.upper);

    let mut states: Vec<BlockState> = (0..m)
        .map(|i| {
            let forced_on = problem.terms[i].alpha == f64::INFINITY;
            let mut v = vec![0.0; 2 * n + 1];
            v[..n].copy_from_slice(&x);
            v[2 * n] = 0.5;
            for j in 0..n {
                v[n + j] = 0.5 * x[j];
            }
            BlockState {
                v,
                u: vec![0.0; n],
                mode: if forced_on { Some(true) } else { None },
                forced_on,
            }
        })
        .collect();

    let lower = &problem.base.lower;
    let upper = &problem.base.upper;
    let t_floor = cfg.t_floor;
    let rho = cfg.rho;
    let mut status = RelaxStatus::MaxIters;
    let mut iters = 0;
    let mut last_primal = f64::NAN;

    for sweep in 0..cfg.max_iters {
        iters = sweep + 1;
        let x_ref = &x;
        let blocks_ref = &blocks;
        let inner = &cfg.block_inner;
        let states_ref = &states;
        // Block updates in parallel; each returns the winning (v, mode).
        let updated = parallel::map_indexed(m, |i| {
            let state = &states_ref[i];
            let block = &blocks_ref[i];
            let center: Vec<f64> = x_ref
                .iter()
                .zip(&state.u)
                .map(|(xj, uj)| xj - uj)
                .collect();

            if state.forced_on {
                let r = solve_variant(
                    block,
                    BlockMode::On,
                    n,
                    rho,
                    center,
                    state.v[..n].to_vec(),
                    lower,
                    upper,
                    t_floor,
                    inner,
                )?;
                let mut v = state.v.clone();
                v[..n].copy_from_slice(&r.x);
                for j in 0..n {
                    v[n + j] = r.x[j];
                }
                v[2 * n] = 1.0 - t_floor;
                return Ok::<_, crate::error::Error>((v, Some(true)));
            }

            let free = solve_variant(
                block,
                BlockMode::Free,
                n,
                rho,
                center.clone(),
                state.v.clone(),
                lower,
                upper,
                t_floor,
                inner,
            )?;
            let t = free.x[2 * n];
            let mut best_v = free.x.clone();
            let best_val = free.value;
            let mut best_mode = None;
            if t >= 1.0 - 2.0 * t_floor {
                let r = solve_variant(
                    block,
                    BlockMode::On,
                    n,
                    rho,
                    center.clone(),
                    free.x[..n].to_vec(),
                    lower,
                    upper,
                    t_floor,
                    inner,
                )?;
                if r.value < best_val {
                    best_mode = Some(true);
                    best_v = free.x.clone();
                    best_v[..n].copy_from_slice(&r.x);
                    for j in 0..n {
                        best_v[n + j] = r.x[j];
                    }
                    best_v[2 * n] = 1.0 - t_floor;
                }
            } else if t <= 2.0 * t_floor {
                let r = solve_variant(
                    block,
                    BlockMode::Off,
                    n,
                    rho,
                    center,
                    free.x[..n].to_vec(),
                    lower,
                    upper,
                    t_floor,
                    inner,
                )?;
                if r.value < best_val {
                    best_mode = Some(false);
                    best_v = free.x.clone();
                    best_v[..n].copy_from_slice(&r.x);
                    for j in 0..n {
                        best_v[n + j] = 0.0;
                    }
                    best_v[2 * n] = t_floor;
                }
            }
            Ok((best_v, best_mode))
        });

        for (state, r) in states.iter_mut().zip(updated) {
            let (v, mode) = r?;
            state.v = v;
            if !state.forced_on {
                state.mode = mode;
            }
        }

        // x-update: consensus average of y_i + u_i.
        let x_prev = x.clone();
        for xj in x.iter_mut() {
            *xj = 0.0;
        }
        for state in &states {
            for j in 0..n {
                x[j] += state.v[j] + state.u[j];
            }
        }
        let inv_m = 1.0 / m as f64;
        for xj in x.iter_mut() {
            *xj *= inv_m;
        }
        project_box_in_place(&mut x, lower, upper);

        // Dual update and residuals.
        let mut primal_sq = 0.0;
        for state in states.iter_mut() {
            for j in 0..n {
                let r = state.v[j] - x[j];
                state.u[j] += r;
                primal_sq += r * r;
            }
        }
        let primal_rms = (primal_sq / (m * n) as f64).sqrt();
        last_primal = primal_rms;
        let dual_rms = rho
            * (x.iter()
                .zip(&x_prev)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / n as f64)
                .sqrt();
        if primal_rms <= cfg.primal_tol && dual_rms <= cfg.dual_tol {
            status = RelaxStatus::Converged;
            break;
        }
    }

    // Assemble a feasible point of the relaxation at the consensus x and
    // evaluate the exact objective there.
    let mut z = Vec::with_capacity(m);
    let mut t = Vec::with_capacity(m);
    for state in states.iter() {
        match state.mode {
            Some(true) => {
                z.push(x.clone());
                t.push(1.0);
            }
            Some(false) => {
                z.push(vec![0.0; n]);
                t.push(0.0);
            }
            None => {
                z.push(state.v[n..2 * n].to_vec());
                t.push(state.v[2 * n]);
            }
        }
    }
    let vars = PerspectiveVars { x, z, t };
    let lower_bound = penalized_objective(problem, &vars, extra_ridge)?;
    if !lower_bound.is_finite() {
        status = RelaxStatus::Infeasible;
    }
    Ok(BoundCertificate {
        lower_bound,
        solution: vars,
        status,
        iters,
        auto_ridge: extra_ridge,
        primal_residual: Some(last_primal),
    })
}
