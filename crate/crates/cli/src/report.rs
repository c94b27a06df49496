//! Plain-text reports and CSV traces.
//!
//! Reports are UTF-8 text; traces are plain CSV with a header row and one
//! row per outer iteration. Identical runs produce identical files except
//! for the wall-time line.

use std::fmt::Write as _;

use clipped_convex::{BoundCertificate, GlobalResult, Problem, RelaxStatus, SolveReport, Termination};

fn fmt_vec(x: &[f64]) -> String {
    let body: Vec<String> = x.iter().map(|v| format!("{v:.10}")).collect();
    format!("[{}]", body.join(", "))
}

fn termination_str(t: Termination) -> &'static str {
    match t {
        Termination::ToleranceMet => "tolerance met",
        Termination::MaxIters => "iteration limit",
        Termination::NodeLimit => "node limit",
        Termination::ProvenOptimal => "proven optimal",
    }
}

/// Report for a heuristic solve. `offset` is a reporting constant added to
/// every objective value (e.g. the subset-sum gadget's `-n/4`).
pub fn solve_report(
    method: &str,
    problem: &Problem,
    r: &SolveReport,
    offset: f64,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "solver: {method}");
    let _ = writeln!(s, "dimensions: n = {}, m = {}", problem.n, problem.m());
    let _ = writeln!(s, "objective: {:.10}", r.objective_value + offset);
    if offset != 0.0 {
        let _ = writeln!(s, "reporting offset: {offset}");
    }
    if let Some(lb) = r.lower_bound {
        let _ = writeln!(s, "lower bound: {:.10}", lb + offset);
        let _ = writeln!(s, "gap: {:.10}", r.objective_value - lb);
    }
    let _ = writeln!(s, "iterations: {}", r.iterations);
    let _ = writeln!(s, "termination: {}", termination_str(r.termination));
    let _ = writeln!(s, "x: {}", fmt_vec(&r.x_best));
    let _ = writeln!(s, "wall time: {:.3} s", r.wall_time.as_secs_f64());
    s
}

/// Report for a lower-bound computation.
pub fn bound_report(solver: &str, problem: &Problem, cert: &BoundCertificate, offset: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "bound solver: {solver}");
    let _ = writeln!(s, "dimensions: n = {}, m = {}", problem.n, problem.m());
    let _ = writeln!(s, "lower bound: {:.10}", cert.lower_bound + offset);
    if offset != 0.0 {
        let _ = writeln!(s, "reporting offset: {offset}");
    }
    let _ = writeln!(
        s,
        "status: {}",
        match cert.status {
            RelaxStatus::Converged => "converged",
            RelaxStatus::MaxIters => "iteration limit",
            RelaxStatus::Infeasible => "infeasible",
        }
    );
    let _ = writeln!(s, "iterations: {}", cert.iters);
    if cert.auto_ridge > 0.0 {
        let _ = writeln!(s, "auto ridge: {:e}", cert.auto_ridge);
    }
    if let Some(res) = cert.primal_residual {
        let _ = writeln!(s, "primal residual: {res:.3e}");
    }
    let _ = writeln!(s, "x: {}", fmt_vec(&cert.solution.x));
    s
}

/// Report for an exact solve.
pub fn exact_report(mode: &str, problem: &Problem, r: &GlobalResult, offset: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "exact solver: {mode}");
    let _ = writeln!(s, "dimensions: n = {}, m = {}", problem.n, problem.m());
    let _ = writeln!(s, "objective: {:.10}", r.value + offset);
    if offset != 0.0 {
        let _ = writeln!(s, "reporting offset: {offset}");
    }
    let _ = writeln!(s, "lower bound: {:.10}", r.lower_bound + offset);
    let _ = writeln!(s, "gap: {:.10}", r.bound_gap);
    let _ = writeln!(s, "proven optimal: {}", r.proven);
    let _ = writeln!(s, "explored: {}", r.explored);
    let _ = writeln!(s, "x: {}", fmt_vec(&r.x_star));
    s
}

/// One row per outer iteration: `iter,objective`.
pub fn objective_trace_csv(r: &SolveReport, offset: f64) -> String {
    let mut s = String::from("iter,objective\n");
    for (k, v) in r.objective_trace.iter().enumerate() {
        let _ = writeln!(s, "{k},{}", v + offset);
    }
    s
}

/// One row per outer iteration: `iter,lambda_0,...,lambda_{m-1}`. Empty
/// string when the method has no weight trace.
pub fn lambda_trace_csv(r: &SolveReport) -> String {
    let Some(first) = r.lambda_trace.first() else {
        return String::new();
    };
    let mut s = String::from("iter");
    for i in 0..first.len() {
        let _ = write!(s, ",lambda_{i}");
    }
    s.push('\n');
    for (k, row) in r.lambda_trace.iter().enumerate() {
        let _ = write!(s, "{k}");
        for v in row {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

/// Trajectory CSV for trajectory-style problems: `t,x`.
pub fn trajectory_csv(x: &[f64]) -> String {
    let mut s = String::from("t,x\n");
    for (t, v) in x.iter().enumerate() {
        let _ = writeln!(s, "{t},{v}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use clipped_convex::{
        solve_altmin, AffineExpr, AltMinConfig, BaseObjective, ClippedTerm, LossAtom, Problem,
    };

    fn tiny_problem() -> Problem {
        Problem::new(
            1,
            BaseObjective::free(1),
            vec![ClippedTerm {
                loss: LossAtom::Square,
                expr: AffineExpr::new(vec![1.0], -1.0),
                weight: 1.0,
                alpha: 10.0,
            }],
        )
        .unwrap()
    }

    #[test]
    fn solve_report_is_deterministic_modulo_timing() {
        let p = tiny_problem();
        let a = solve_altmin(&p, &AltMinConfig::default()).unwrap();
        let b = solve_altmin(&p, &AltMinConfig::default()).unwrap();
        let strip = |s: String| -> String {
            s.lines()
                .filter(|l| !l.starts_with("wall time"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(
            strip(solve_report("altmin", &p, &a, 0.0)),
            strip(solve_report("altmin", &p, &b, 0.0))
        );
    }

    #[test]
    fn lambda_csv_rows_in_unit_interval() {
        let p = tiny_problem();
        let r = solve_altmin(&p, &AltMinConfig::default()).unwrap();
        let csv = lambda_trace_csv(&r);
        let mut rows = 0;
        for line in csv.lines().skip(1) {
            rows += 1;
            for field in line.split(',').skip(1) {
                let v: f64 = field.parse().unwrap();
                assert!((0.0..=1.0).contains(&v), "{v}");
            }
        }
        assert_eq!(rows, r.lambda_trace.len());
    }

    #[test]
    fn objective_csv_one_row_per_iteration() {
        let p = tiny_problem();
        let r = solve_altmin(&p, &AltMinConfig::default()).unwrap();
        let csv = objective_trace_csv(&r, 0.0);
        assert_eq!(csv.lines().count(), r.objective_trace.len() + 1);
        assert!(csv.starts_with("iter,objective\n"));
    }
}
