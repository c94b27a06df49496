//! Global solvers.
//!
//! With binary weights, the bi-convex surrogate `L(x, lambda)` matches the
//! clipped objective after minimizing over `lambda`, so enumerating all
//! `2^m` on/off patterns and solving a convex problem for each finds the
//! global optimum. Branch and bound does the same search implicitly, using
//! the perspective relaxation for node bounds so most patterns are pruned.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::heuristics::{solve_altmin, AltMinConfig, AltMinMode};
use crate::model::Problem;
use crate::parallel;
use crate::perspective::{solve_relaxation, PerspectiveVars, RelaxConfig};
use crate::solver::{weighted_subproblem, InnerConfig, WeightVector};

/// Outcome of a global solve.
#[derive(Debug, Clone)]
pub struct GlobalResult {
    pub x_star: Vec<f64>,
    /// True clipped objective at `x_star`.
    pub value: f64,
    /// Best lower bound established by the search.
    pub lower_bound: f64,
    /// `value - lower_bound`; at most the gap tolerance when `proven`.
    pub bound_gap: f64,
    /// Whether optimality was certified (up to the gap tolerance).
    pub proven: bool,
    /// Convex subproblems solved (exhaustive) or nodes expanded (BnB).
    pub explored: usize,
}

#[derive(Debug, Clone)]
pub struct ExhaustiveConfig {
    /// Refuse problems with more than this many clipped terms (the cost is
    /// `2^m` convex solves).
    pub max_terms: usize,
    pub inner: InnerConfig,
}

impl Default for ExhaustiveConfig {
    fn default() -> Self {
        ExhaustiveConfig {
            max_terms: 16,
            inner: InnerConfig::default(),
        }
    }
}

/// Solve to global optimality by enumerating every binary weight pattern.
pub fn solve_exhaustive(problem: &Problem, cfg: &ExhaustiveConfig) -> Result<GlobalResult> {
    problem.validate()?;
    let m = problem.m();
    if m > cfg.max_terms {
        return Err(Error::TooManyTerms {
            m,
            limit: cfg.max_terms,
        });
    }
    let count = 1u64 << m;
    let x0 = vec![0.0; problem.n];
    let results = parallel::map_indexed(count as usize, |mask| {
        let lambda = WeightVector::from_mask(mask as u64, m);
        let sub = weighted_subproblem(problem, &lambda, &x0, &cfg.inner)?;
        // The surrogate value upper-bounds the true objective at sub.x;
        // score by the true objective so ties resolve consistently.
        let value = problem.eval_objective(&sub.x)?;
        Ok::<_, Error>((value, sub.x))
    });

    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in results {
        let (value, x) = r?;
        let better = match &best {
            None => true,
            Some((bv, _)) => value < *bv,
        };
        if better {
            best = Some((value, x));
        }
    }
    let (value, x_star) = best.expect("at least one mask");
    Ok(GlobalResult {
        x_star,
        value,
        lower_bound: value,
        bound_gap: 0.0,
        proven: true,
        explored: count as usize,
    })
}

#[derive(Debug, Clone)]
pub struct BnbConfig {
    /// Stop once `incumbent - lower_bound` is below this.
    pub gap_tol: f64,
    pub node_limit: usize,
    /// Settings for the per-node relaxation solves.
    pub relax: RelaxConfig,
    /// Settings for the incumbent heuristic runs.
    pub altmin: AltMinConfig,
}

impl Default for BnbConfig {
    fn default() -> Self {
        BnbConfig {
            gap_tol: 1e-4,
            node_limit: 100_000,
            relax: RelaxConfig::default(),
            altmin: AltMinConfig {
                mode: AltMinMode::Exact,
                ..AltMinConfig::default()
            },
        }
    }
}

struct Node {
    bound: f64,
    seq: usize,
    fixed: Vec<Option<bool>>,
    warm: PerspectiveVars,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.seq == other.seq
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap; invert so the smallest bound pops first,
    // FIFO on ties.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Best-first branch and bound on the binary selectors, bounding each node
/// with the perspective relaxation restricted to that node's fixings.
pub fn solve_bnb(problem: &Problem, cfg: &BnbConfig) -> Result<GlobalResult> {
    problem.validate()?;
    let m = problem.m();

    let root = solve_relaxation(problem, None, &cfg.relax)?;
    let mut global_lower = root.lower_bound;

    // Incumbent: alternating minimization from the default start and from
    // the rounded root relaxation.
    let mut incumbent = f64::INFINITY;
    let mut x_star = root.solution.x.clone();
    let consider = |value: f64, x: &[f64], incumbent: &mut f64, x_star: &mut Vec<f64>| {
        if value < *incumbent {
            *incumbent = value;
            *x_star = x.to_vec();
        }
    };
    {
        let run = solve_altmin(problem, &cfg.altmin)?;
        consider(run.objective_value, &run.x_best, &mut incumbent, &mut x_star);
        let rounded = WeightVector::new(
            root.solution
                .t
                .iter()
                .map(|&t| if t >= 0.5 { 1.0 } else { 0.0 })
                .collect(),
        )?;
        let warm_cfg = AltMinConfig {
            lambda0: Some(rounded),
            x0: Some(root.solution.x.clone()),
            ..cfg.altmin.clone()
        };
        let run = solve_altmin(problem, &warm_cfg)?;
        consider(run.objective_value, &run.x_best, &mut incumbent, &mut x_star);
    }
    let root_obj = problem.eval_objective(&root.solution.x)?;
    consider(root_obj, &root.solution.x, &mut incumbent, &mut x_star);

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node {
        bound: root.lower_bound,
        seq,
        fixed: vec![None; m],
        warm: root.solution,
    });
    let mut explored = 0usize;
    let mut proven = false;

    while let Some(node) = heap.pop() {
        global_lower = node.bound;
        if incumbent - global_lower <= cfg.gap_tol {
            proven = true;
            break;
        }
        if explored >= cfg.node_limit {
            break;
        }
        explored += 1;

        // Branch on the most fractional free selector (ties: lowest index).
        let mut branch = None;
        let mut best_frac = -1.0;
        for i in 0..m {
            if node.fixed[i].is_none() && problem.terms[i].alpha.is_finite() {
                let frac = 0.5 - (node.warm.t[i] - 0.5).abs();
                if frac > best_frac {
                    best_frac = frac;
                    branch = Some(i);
                }
            }
        }
        let Some(i) = branch else {
            // Fully fixed: the node bound is the exact value of this
            // pattern; it already fed the incumbent when created.
            continue;
        };

        let child = |value: bool| -> Result<(f64, Vec<Option<bool>>, PerspectiveVars, f64)> {
            let mut fixed = node.fixed.clone();
            fixed[i] = Some(value);
            let mut relax_cfg = cfg.relax.clone();
            relax_cfg.warm = Some(node.warm.clone());
            let cert = solve_relaxation(problem, Some(&fixed), &relax_cfg)?;
            let obj = problem.eval_objective(&cert.solution.x)?;
            // Bounds are monotone along the tree; enforce against solver noise.
            let bound = cert.lower_bound.max(node.bound);
            Ok((bound, fixed, cert.solution, obj))
        };
        let (lo, hi) = parallel::join(|| child(false), || child(true));
        for res in [lo?, hi?] {
            let (bound, fixed, warm, obj) = res;
            consider(obj, &warm.x, &mut incumbent, &mut x_star);
            if bound < incumbent - cfg.gap_tol {
                seq += 1;
                heap.push(Node {
                    bound,
                    seq,
                    fixed,
                    warm,
                });
            }
        }
    }
    if heap.is_empty() && !proven {
        // Everything pruned against the incumbent.
        global_lower = incumbent - cfg.gap_tol;
        proven = true;
    }

    Ok(GlobalResult {
        x_star,
        value: incumbent,
        lower_bound: global_lower.min(incumbent),
        bound_gap: (incumbent - global_lower).max(0.0),
        proven,
        explored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AffineExpr, BaseObjective, ClippedTerm, LossAtom};

    fn sq_term(a: Vec<f64>, b: f64, alpha: f64) -> ClippedTerm {
        ClippedTerm {
            loss: LossAtom::Square,
            expr: AffineExpr::new(a, b),
            weight: 1.0,
            alpha,
        }
    }

    /// Two incompatible wells with small ridge; global optimum clips one
    /// well: value = 0.5 + ridge-adjusted residual near x = 1 or -1.
    fn two_well() -> Problem {
        Problem::new(
            1,
            BaseObjective {
                quad_terms: vec![],
                ridge: 0.01,
                lower: vec![f64::NEG_INFINITY],
                upper: vec![f64::INFINITY],
            },
            vec![sq_term(vec![1.0], -1.0, 0.5), sq_term(vec![1.0], 1.0, 0.5)],
        )
        .unwrap()
    }

    /// Independent oracle for the two-well instance: scan x on a fine grid.
    fn grid_optimum(p: &Problem) -> f64 {
        let mut best = f64::INFINITY;
        let mut x = -3.0;
        while x <= 3.0 {
            best = best.min(p.eval_objective(&[x]).unwrap());
            x += 1e-4;
        }
        best
    }

    #[test]
    fn exhaustive_matches_grid_oracle() {
        let p = two_well();
        let res = solve_exhaustive(&p, &ExhaustiveConfig::default()).unwrap();
        let oracle = grid_optimum(&p);
        assert!(res.proven);
        assert_eq!(res.explored, 4);
        assert!(
            (res.value - oracle).abs() < 1e-6,
            "{} vs {oracle}",
            res.value
        );
    }

    #[test]
    fn exhaustive_rejects_large_m() {
        let terms: Vec<_> = (0..20).map(|_| sq_term(vec![1.0], 0.0, 1.0)).collect();
        let p = Problem::new(1, BaseObjective::free(1), terms).unwrap();
        let cfg = ExhaustiveConfig {
            max_terms: 10,
            ..Default::default()
        };
        assert!(matches!(
            solve_exhaustive(&p, &cfg),
            Err(Error::TooManyTerms { m: 20, limit: 10 })
        ));
    }

    #[test]
    fn bnb_matches_exhaustive() {
        let p = two_well();
        let ex = solve_exhaustive(&p, &ExhaustiveConfig::default()).unwrap();
        let bb = solve_bnb(&p, &BnbConfig::default()).unwrap();
        assert!(bb.proven);
        assert!(
            (bb.value - ex.value).abs() < 1e-4,
            "bnb {} vs exhaustive {}",
            bb.value,
            ex.value
        );
        assert!(bb.lower_bound <= bb.value + 1e-9);
    }

    #[test]
    fn bnb_three_terms() {
        // three wells at -1, 0, 2; only some can be small simultaneously
        let p = Problem::new(
            1,
            BaseObjective {
                quad_terms: vec![],
                ridge: 0.02,
                lower: vec![f64::NEG_INFINITY],
                upper: vec![f64::INFINITY],
            },
            vec![
                sq_term(vec![1.0], 1.0, 0.4),
                sq_term(vec![1.0], 0.0, 0.4),
                sq_term(vec![1.0], -2.0, 0.4),
            ],
        )
        .unwrap();
        let ex = solve_exhaustive(&p, &ExhaustiveConfig::default()).unwrap();
        let bb = solve_bnb(&p, &BnbConfig::default()).unwrap();
        assert!(bb.proven);
        assert!((bb.value - ex.value).abs() < 1e-4);
    }

    #[test]
    fn unclipped_terms_are_not_branched() {
        let p = Problem::new(
            1,
            BaseObjective::free(1),
            vec![
                sq_term(vec![1.0], 0.0, f64::INFINITY),
                sq_term(vec![1.0], -2.0, 0.3),
            ],
        )
        .unwrap();
        let bb = solve_bnb(&p, &BnbConfig::default()).unwrap();
        assert!(bb.proven);
        // oracle: min over lambda2 in {0,1} of convex solves
        // lambda2=1: min x^2 + (x-2)^2 = 2 at x=1; lambda2=0: 0.3 at x=0
        assert!((bb.value - 0.3).abs() < 1e-4, "{}", bb.value);
    }
}
