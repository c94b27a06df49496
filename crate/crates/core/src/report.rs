use std::time::Duration;

/// Why a solve loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ToleranceMet,
    MaxIters,
    NodeLimit,
    ProvenOptimal,
}

/// Outcome of an outer solve (heuristics and exact methods alike).
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Iterate with the smallest true clipped objective seen during the run
    /// (this can differ from the final iterate).
    pub x_best: Vec<f64>,
    /// True clipped objective at `x_best`.
    pub objective_value: f64,
    /// Per-iteration surrogate objective (`L(x^k, lambda^k)` for the
    /// alternating methods, true objective for CCP).
    pub objective_trace: Vec<f64>,
    /// Per-iteration weight vectors; empty for methods without lambda.
    pub lambda_trace: Vec<Vec<f64>>,
    pub iterations: usize,
    pub termination: Termination,
    pub wall_time: Duration,
    /// Lower bound on the global optimum, when one was computed.
    pub lower_bound: Option<f64>,
}
