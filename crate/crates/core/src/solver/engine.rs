//! Generic projected first-order engine.
//!
//! Accelerated projected gradient (FISTA-style momentum with function-value
//! restart) plus Armijo backtracking. The same engine drives the weighted
//! subproblems, the CCP majorizer solves, and the perspective relaxation.

use crate::error::{Error, Result};
use crate::solver::InnerConfig;

/// Smooth part of an objective; the constraint set is handled by the
/// projection operator passed to [`minimize_projected`].
pub(crate) trait SmoothObjective {
    fn value(&self, x: &[f64]) -> f64;
    /// Returns the value and writes the gradient into `g`.
    fn value_grad(&self, x: &[f64], g: &mut [f64]) -> f64;
}

#[derive(Debug, Clone)]
pub(crate) struct EngineResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub iters: usize,
    /// Norm of the unit-step projected gradient at the returned point.
    #[allow(dead_code)]
    pub pg_norm: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit-step projected gradient norm `|| x - P(x - g) ||`; zero iff `x` is
/// first-order stationary for the smooth-plus-constraint objective.
fn pg_norm<P: Fn(&mut [f64])>(x: &[f64], g: &[f64], project: &P) -> f64 {
    let mut trial: Vec<f64> = x.iter().zip(g).map(|(xi, gi)| xi - gi).collect();
    project(&mut trial);
    x.iter()
        .zip(&trial)
        .map(|(xi, ti)| (xi - ti) * (xi - ti))
        .sum::<f64>()
        .sqrt()
}

/// Minimize a smooth convex objective over a set given by its projection.
///
/// `lip0` seeds the step size (`1 / lip0`); backtracking adapts it from
/// there, so an upper bound on the curvature is sufficient.
pub(crate) fn minimize_projected<O, P>(
    obj: &O,
    project: &P,
    x0: Vec<f64>,
    lip0: f64,
    cfg: &InnerConfig,
) -> Result<EngineResult>
where
    O: SmoothObjective,
    P: Fn(&mut [f64]),
{
    let n = x0.len();
    let mut x = x0;
    project(&mut x);

    let mut g = vec![0.0; n];
    let mut fx = obj.value_grad(&x, &mut g);
    if !fx.is_finite() {
        return Err(Error::NonFinite("objective at initial point".into()));
    }

    let mut step = if lip0 > 0.0 { 1.0 / lip0 } else { 1.0 };
    let mut y = x.clone();
    let mut gy = g.clone();
    let mut fy = fx;
    let mut theta = 1.0f64;
    let mut x_new = vec![0.0; n];
    let mut restarted = true; // y == x holds initially

    let mut iters = 0;
    while iters < cfg.max_iters {
        iters += 1;

        // Backtracking line search from y along the projected gradient path.
        step *= 1.25;
        let mut f_new;
        loop {
            for j in 0..n {
                x_new[j] = y[j] - step * gy[j];
            }
            project(&mut x_new);
            let d_sq: f64 = y
                .iter()
                .zip(&x_new)
                .map(|(yi, xi)| (yi - xi) * (yi - xi))
                .sum();
            if d_sq == 0.0 {
                // Projection pins y in place: stationary for this step size.
                f_new = fy;
                break;
            }
            f_new = obj.value(&x_new);
            // Quadratic upper-bound test (keeps the step at ~1/L, which the
            // momentum sequence needs).
            let gd = dot(&gy, &x_new) - dot(&gy, &y);
            let bound = fy + gd + 0.5 * d_sq / step + 1e-14 * (1.0 + fy.abs());
            if f_new.is_finite() && f_new <= bound {
                break;
            }
            step *= cfg.backtrack;
            if step < 1e-20 {
                f_new = fy.min(f_new);
                x_new.copy_from_slice(&y);
                break;
            }
        }

        // Stationarity proxy at y, confirmed with an exact check at x_new.
        let move_norm: f64 = y
            .iter()
            .zip(&x_new)
            .map(|(yi, xi)| (yi - xi) * (yi - xi))
            .sum::<f64>()
            .sqrt();
        if move_norm / step <= cfg.grad_tol || step < 1e-20 {
            let f_chk = obj.value_grad(&x_new, &mut g);
            let res = pg_norm(&x_new, &g, project);
            if res <= cfg.grad_tol || step < 1e-20 {
                let (xr, fr) = if f_chk <= fx {
                    (x_new, f_chk)
                } else {
                    (x, fx)
                };
                return Ok(EngineResult {
                    x: xr,
                    value: fr,
                    converged: res <= cfg.grad_tol,
                    iters,
                    pg_norm: res,
                });
            }
            // Not actually stationary: restart momentum from x_new.
            if f_chk <= fx {
                x.copy_from_slice(&x_new);
                fx = f_chk;
            }
            y.copy_from_slice(&x);
            fy = fx;
            let _ = obj.value_grad(&y, &mut gy);
            theta = 1.0;
            restarted = true;
            continue;
        }

        if f_new > fx && !restarted {
            // Momentum overshoot: drop extrapolation and redo from x.
            y.copy_from_slice(&x);
            let f_rs = obj.value_grad(&y, &mut gy);
            fy = f_rs;
            theta = 1.0;
            restarted = true;
            continue;
        }
        restarted = false;

        // Nesterov extrapolation.
        let theta_new = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let coef = (theta - 1.0) / theta_new;
        for j in 0..n {
            let xn = x_new[j];
            y[j] = xn + coef * (xn - x[j]);
        }
        x.copy_from_slice(&x_new);
        fx = f_new;
        theta = theta_new;
        fy = obj.value_grad(&y, &mut gy);
        if !fy.is_finite() {
            // Extrapolated point left the reliable region; fall back to x.
            y.copy_from_slice(&x);
            fy = obj.value_grad(&y, &mut gy);
            theta = 1.0;
            restarted = true;
        }
    }

    let f_final = obj.value_grad(&x, &mut g);
    let res = pg_norm(&x, &g, project);
    Ok(EngineResult {
        x,
        value: f_final.min(fx),
        converged: res <= cfg.grad_tol,
        iters,
        pg_norm: res,
    })
}
