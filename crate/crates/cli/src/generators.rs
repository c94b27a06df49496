//! Deterministic instance generators for the example problems and for
//! randomized solver testing.
//!
//! All generators draw from a `ChaCha8Rng` seeded with the caller's seed, so
//! the same seed always yields the byte-identical problem. The stream layout
//! (order of draws) is part of each generator's contract and is fixed.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use clipped_convex::{
    AffineExpr, BaseObjective, ClippedTerm, LossAtom, Problem, QuadTerm,
};

/// Clipped-regression instance: a 1-D dataset with sign-flipped outliers.
pub struct RegressionInstance {
    pub problem: Problem,
    /// Sampled abscissas `x_i`.
    pub xs: Vec<f64>,
    /// Responses `y_i` after outlier flips.
    pub ys: Vec<f64>,
    /// Indices whose responses were flipped.
    pub flipped: Vec<usize>,
}

/// Generate the clipped-regression dataset: `points` samples with
/// `x_i ~ N(0,1)`, `y_i = x_i + 0.1 z_i`, and the responses of `outliers`
/// random points sign-flipped. The problem minimizes
/// `sum_i min{(x_i theta - y_i)^2, alpha} + 0.2 theta^2` over scalar `theta`.
pub fn gen_regression(
    seed: u64,
    points: usize,
    outliers: usize,
    alpha: f64,
) -> RegressionInstance {
    assert!(outliers <= points, "more outliers than points");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..points).map(|_| rng.sample(StandardNormal)).collect();
    let mut ys: Vec<f64> = xs
        .iter()
        .map(|&x| x + 0.1 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut idx: Vec<usize> = (0..points).collect();
    idx.shuffle(&mut rng);
    let mut flipped: Vec<usize> = idx[..outliers].to_vec();
    flipped.sort_unstable();
    for &i in &flipped {
        ys[i] = -ys[i];
    }

    let terms = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| ClippedTerm {
            loss: LossAtom::Square,
            expr: AffineExpr::new(vec![x], -y),
            weight: 1.0,
            alpha,
        })
        .collect();
    let problem = Problem::new(
        1,
        BaseObjective {
            quad_terms: vec![],
            ridge: 0.2,
            lower: vec![f64::NEG_INFINITY],
            upper: vec![f64::INFINITY],
        },
        terms,
    )
    .expect("regression instance must validate");
    RegressionInstance {
        problem,
        xs,
        ys,
        flipped,
    }
}

/// Clipped logistic-regression instance over `(theta, b) in R^6`.
pub struct LogisticInstance {
    pub problem: Problem,
    /// Training features (rows of length 5) and labels after outlier flips.
    pub train_x: Vec<Vec<f64>>,
    pub train_y: Vec<f64>,
    /// Held-out test features and (clean) labels.
    pub test_x: Vec<Vec<f64>>,
    pub test_y: Vec<f64>,
    /// Training indices whose labels were flipped.
    pub flipped: Vec<usize>,
}

impl LogisticInstance {
    /// Classification accuracy of `(theta, b) = (x[0..5], x[5])` on the
    /// held-out test set.
    pub fn test_accuracy(&self, x: &[f64]) -> f64 {
        let correct = self
            .test_x
            .iter()
            .zip(&self.test_y)
            .filter(|(feat, &label)| {
                let score: f64 =
                    feat.iter().zip(&x[..5]).map(|(f, t)| f * t).sum::<f64>() + x[5];
                score * label > 0.0
            })
            .count();
        correct as f64 / self.test_y.len() as f64
    }

    /// Fraction of training terms whose raw loss reaches the clip level at
    /// `x`, i.e. the points the model writes off as outliers.
    pub fn outlier_fraction(&self, x: &[f64]) -> f64 {
        let m = self.problem.m();
        let flagged = (0..m)
            .filter(|&i| {
                let (raw, _) = self.problem.eval_term(i, x).unwrap();
                raw >= self.problem.terms[i].alpha
            })
            .count();
        flagged as f64 / m as f64
    }
}

/// Generate the clipped logistic-regression dataset: `total` points from a
/// two-Gaussian mixture in `R^5`, `train` of them used for fitting with
/// `outliers` labels flipped, the rest held out for accuracy evaluation.
///
/// Each training point contributes
/// `weight * min{log(1 + exp(-y_i (x_i^T theta + b))), alpha / weight ... }`;
/// concretely the term is `min{weight * loss, weight * alpha}` so the clip
/// applies to the unweighted loss at level `alpha`. The ridge `0.1 ||theta||^2`
/// is encoded as quadratic base terms on the `theta` coordinates only, leaving
/// the intercept unregularized. `alpha = +inf` gives plain logistic
/// regression.
pub fn gen_logistic(
    seed: u64,
    total: usize,
    train: usize,
    outliers: usize,
    alpha: f64,
    weight: f64,
) -> LogisticInstance {
    assert!(train <= total && outliers <= train);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Class means +/- mu with ||2 mu|| = 2.4: linearly separable in
    // expectation but with meaningful class overlap.
    let mu = 1.2 / (5.0f64).sqrt();
    let mut features = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for _ in 0..total {
        let label = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let x: Vec<f64> = (0..5)
            .map(|_| label * mu + rng.sample::<f64, _>(StandardNormal))
            .collect();
        features.push(x);
        labels.push(label);
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng);
    let train_idx = &order[..train];
    let test_idx = &order[train..];

    let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| features[i].clone()).collect();
    let clean_y: Vec<f64> = train_idx.iter().map(|&i| labels[i]).collect();
    let mut flip_order: Vec<usize> = (0..train).collect();
    flip_order.shuffle(&mut rng);
    let mut flipped: Vec<usize> = flip_order[..outliers].to_vec();
    flipped.sort_unstable();
    let mut train_y = clean_y;
    for &i in &flipped {
        train_y[i] = -train_y[i];
    }

    let terms = train_x
        .iter()
        .zip(&train_y)
        .map(|(feat, &label)| {
            let mut a = feat.clone();
            a.push(1.0); // intercept coordinate
            ClippedTerm {
                loss: LossAtom::Logistic { label },
                expr: AffineExpr::new(a, 0.0),
                weight,
                // The clip applies to the unweighted loss at level alpha.
                alpha: if alpha == f64::INFINITY {
                    f64::INFINITY
                } else {
                    weight * alpha
                },
            }
        })
        .collect();
    let quad_terms = (0..5)
        .map(|j| {
            let mut a = vec![0.0; 6];
            a[j] = 1.0;
            QuadTerm {
                c: 0.1,
                expr: AffineExpr::new(a, 0.0),
            }
        })
        .collect();
    let problem = Problem::new(
        6,
        BaseObjective {
            quad_terms,
            ridge: 0.0,
            lower: vec![f64::NEG_INFINITY; 6],
            upper: vec![f64::INFINITY; 6],
        },
        terms,
    )
    .expect("logistic instance must validate");

    LogisticInstance {
        problem,
        train_x,
        train_y,
        test_x: test_idx.iter().map(|&i| features[i].clone()).collect(),
        test_y: test_idx.iter().map(|&i| labels[i]).collect(),
        flipped,
    }
}

/// An obstacle blocks a lateral interval over a window of time steps,
/// tightening the box bounds there.
#[derive(Debug, Clone, Copy)]
pub struct Obstacle {
    pub t_from: usize,
    pub t_to: usize,
    /// Lateral bounds imposed while inside the window.
    pub lower: f64,
    pub upper: f64,
}

/// The default three-obstacle scenario: two blockers in the right lane and
/// one in the left lane, forcing two full lane changes.
pub fn default_obstacles() -> Vec<Obstacle> {
    vec![
        Obstacle {
            t_from: 15,
            t_to: 35,
            lower: -2.0,
            upper: 0.0,
        },
        Obstacle {
            t_from: 45,
            t_to: 60,
            lower: 0.0,
            upper: 2.0,
        },
        Obstacle {
            t_from: 75,
            t_to: 92,
            lower: -2.0,
            upper: 0.0,
        },
    ]
}

/// Lane-change trajectory problem over lateral positions `x_0..x_T`.
///
/// Lane cost: `sum_t min{(x_t - 1)^2, 1} + min{(x_t + 1)^2, 1}` (lanes
/// centered at +/-1). Comfort cost: `rho1 ||D x||^2 + rho2 ||D^2 x||^2 +
/// rho3 ||D^3 x||^2` with `D` the forward-difference operator. Endpoints are
/// pinned to `x_start`/`x_end` through the box; obstacles tighten the box on
/// their time windows.
#[allow(clippy::too_many_arguments)]
pub fn gen_lane_change(
    horizon: usize,
    rho: (f64, f64, f64),
    x_start: f64,
    x_end: f64,
    obstacles: &[Obstacle],
) -> Result<Problem, String> {
    let n = horizon + 1;
    let road = 2.0f64;
    let mut lower = vec![-road; n];
    let mut upper = vec![road; n];
    for ob in obstacles {
        if ob.t_to >= n {
            return Err(format!(
                "obstacle window [{}, {}] exceeds horizon {horizon}",
                ob.t_from, ob.t_to
            ));
        }
        for t in ob.t_from..=ob.t_to {
            lower[t] = lower[t].max(ob.lower);
            upper[t] = upper[t].min(ob.upper);
        }
    }
    lower[0] = x_start;
    upper[0] = x_start;
    lower[n - 1] = x_end;
    upper[n - 1] = x_end;
    for t in 0..n {
        if lower[t] > upper[t] {
            return Err(format!(
                "infeasible bounds at t = {t}: lower {} > upper {}",
                lower[t], upper[t]
            ));
        }
    }

    let mut quad_terms = Vec::new();
    // Forward-difference rows of D, D^2, D^3 with weights rho1..rho3.
    let stencils: [(&[f64], f64); 3] = [
        (&[-1.0, 1.0], rho.0),
        (&[1.0, -2.0, 1.0], rho.1),
        (&[-1.0, 3.0, -3.0, 1.0], rho.2),
    ];
    for (stencil, c) in stencils {
        if c <= 0.0 {
            return Err("comfort weights must be positive".into());
        }
        for start in 0..=(n - stencil.len()) {
            let mut a = vec![0.0; n];
            for (k, &s) in stencil.iter().enumerate() {
                a[start + k] = s;
            }
            quad_terms.push(QuadTerm {
                c,
                expr: AffineExpr::new(a, 0.0),
            });
        }
    }

    let mut terms = Vec::with_capacity(2 * n);
    for t in 0..n {
        for center in [1.0, -1.0] {
            let mut a = vec![0.0; n];
            a[t] = 1.0;
            terms.push(ClippedTerm {
                loss: LossAtom::Square,
                expr: AffineExpr::new(a, -center),
                weight: 1.0,
                alpha: 1.0,
            });
        }
    }

    Problem::new(
        n,
        BaseObjective {
            quad_terms,
            ridge: 0.0,
            lower,
            upper,
        },
        terms,
    )
    .map_err(|e| e.to_string())
}

/// Subset-sum gadget and its reporting offset.
pub struct SubsetSumInstance {
    pub problem: Problem,
    /// Constant to add to the model objective to obtain the gadget value
    /// (`-n/4`); the gadget value is 0 iff a zero-sum nonempty subset exists.
    pub offset: f64,
}

/// Encode subset-sum for the integer list `a`: minimize
/// `(a^T x)^2 - n/4 + sum_i min{x_i^2, 1/4} + min{(x_i - 1)^2, 1/4}` subject
/// to `1^T x >= 1`. The optimal value is 0 exactly when some nonempty subset
/// of `a` sums to zero (its indicator is an optimal `x`).
///
/// The halfspace `1^T x >= 1` is not a box, so it is enforced through an
/// auxiliary coordinate `w` with box `w >= 1` and the quadratic penalty
/// `mu (1^T x - w)^2`, `mu = 1e4`. Minimizing over `w` reproduces the
/// one-sided penalty `mu max(1 - 1^T x, 0)^2` exactly, which is exact at the
/// gadget's binary solutions; reports should check post-hoc that
/// `1^T x >= 1 - 1e-6` holds at the returned point.
pub fn gen_subset_sum(a: &[i64]) -> SubsetSumInstance {
    assert!(!a.is_empty(), "subset-sum list must be nonempty");
    let n = a.len();
    let mu = 1e4;

    let mut quad_terms = Vec::with_capacity(2);
    let mut row = a.iter().map(|&v| v as f64).collect::<Vec<f64>>();
    row.push(0.0); // w does not enter (a^T x)^2
    quad_terms.push(QuadTerm {
        c: 1.0,
        expr: AffineExpr::new(row, 0.0),
    });
    let mut ones = vec![1.0; n];
    ones.push(-1.0); // 1^T x - w
    quad_terms.push(QuadTerm {
        c: mu,
        expr: AffineExpr::new(ones, 0.0),
    });

    let mut terms = Vec::with_capacity(2 * n);
    for i in 0..n {
        for center in [0.0, 1.0] {
            let mut coeff = vec![0.0; n + 1];
            coeff[i] = 1.0;
            terms.push(ClippedTerm {
                loss: LossAtom::Square,
                expr: AffineExpr::new(coeff, -center),
                weight: 1.0,
                alpha: 0.25,
            });
        }
    }

    let mut lower = vec![f64::NEG_INFINITY; n + 1];
    let mut upper = vec![f64::INFINITY; n + 1];
    lower[n] = 1.0; // the slack coordinate w >= 1
    upper[n] = f64::INFINITY;
    let problem = Problem::new(
        n + 1,
        BaseObjective {
            quad_terms,
            ridge: 0.0,
            lower,
            upper,
        },
        terms,
    )
    .expect("subset-sum gadget must validate");
    SubsetSumInstance {
        problem,
        offset: -(n as f64) / 4.0,
    }
}

/// Random mixed-atom instance for oracle cross-checks: `n` in 1..=3 and `m`
/// in 2..=10 derived from the seed, square/Huber/logistic atoms, ridge 0.1,
/// no box.
pub fn random_instance(seed: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=3usize);
    let m = rng.gen_range(2..=10usize);
    random_instance_sized(&mut rng, n, m)
}

/// Random mixed-atom instance with explicit dimensions.
pub fn random_instance_with(seed: u64, n: usize, m: usize) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_instance_sized(&mut rng, n, m)
}

fn random_instance_sized(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Problem {
    let mut terms = Vec::with_capacity(m);
    for _ in 0..m {
        let loss = match rng.gen_range(0..3) {
            0 => LossAtom::Square,
            1 => LossAtom::Huber {
                delta: rng.gen_range(0.2..1.5),
            },
            _ => LossAtom::Logistic {
                label: if rng.gen::<bool>() { 1.0 } else { -1.0 },
            },
        };
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
        terms.push(ClippedTerm {
            loss,
            expr: AffineExpr::new(a, rng.gen_range(-2.0..2.0)),
            weight: rng.gen_range(0.3..1.5),
            alpha: rng.gen_range(0.1..1.5),
        });
    }
    Problem::new(
        n,
        BaseObjective {
            quad_terms: vec![],
            ridge: 0.1,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        },
        terms,
    )
    .expect("random instance must validate")
}
