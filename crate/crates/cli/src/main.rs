//! `clipcx`: solve, bound, and exactly minimize sums of clipped convex
//! functions, and generate the example problem instances.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use clipped_convex::{
    parse_problem, serialize_problem, solve_altmin, solve_bnb, solve_ccp, solve_exhaustive,
    solve_relaxation, solve_relaxation_admm, AdmmConfig, AltMinConfig, AltMinMode, BnbConfig,
    CcpConfig, Error, ExhaustiveConfig, Problem, RelaxConfig, WeightVector,
};
use clipped_convex_cli::generators;
use clipped_convex_cli::report;

const EXIT_USAGE_IO: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_SOLVER: u8 = 4;

#[derive(Parser)]
#[command(
    name = "clipcx",
    about = "Solvers for sums of clipped convex functions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a heuristic solver on a problem file.
    Solve(SolveArgs),
    /// Compute a lower bound from the perspective relaxation.
    Bound(BoundArgs),
    /// Solve to global optimality.
    Exact(ExactArgs),
    /// Generate an example problem instance.
    Example(ExampleArgs),
}

#[derive(Args)]
struct CommonIo {
    /// Path to a problem JSON file.
    #[arg(long)]
    problem: PathBuf,
    /// Directory for the report and CSV traces.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Constant added to reported objective values (e.g. the subset-sum
    /// gadget's -n/4); solver internals are unaffected.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    offset: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Altmin,
    AltminExact,
    Ccp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Lambda0 {
    /// Start all weights at 1/2.
    Half,
    /// Start from the relaxation's selector variables.
    Relaxation,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    io: CommonIo,
    #[arg(long, value_enum, default_value_t = Method::Altmin)]
    method: Method,
    /// Weight step size (inexact alternating minimization).
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    /// Stop when the L1 change of the weights drops to this value.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Maximum outer iterations.
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Initial weights.
    #[arg(long, value_enum, default_value_t = Lambda0::Half)]
    lambda0: Lambda0,
    /// Also write the solution as a t,x trajectory CSV.
    #[arg(long)]
    trajectory: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundSolver {
    Direct,
    Admm,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    io: CommonIo,
    #[arg(long, value_enum, default_value_t = BoundSolver::Direct)]
    solver: BoundSolver,
    /// ADMM penalty parameter.
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExactMode {
    Exhaustive,
    Bnb,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    io: CommonIo,
    #[arg(long, value_enum, default_value_t = ExactMode::Exhaustive)]
    mode: ExactMode,
    /// Refuse exhaustive enumeration beyond this many clipped terms.
    #[arg(long, default_value_t = 12)]
    m_limit: usize,
    /// Absolute optimality gap for branch and bound.
    #[arg(long, default_value_t = 1e-4)]
    gap: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleKind {
    Regression,
    Logistic,
    Lane,
    SubsetSum,
}

#[derive(Args)]
struct ExampleArgs {
    kind: ExampleKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Clip level; "inf" disables clipping (regression, logistic).
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of data points (regression).
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// Number of sign-flipped outliers (regression: of the points;
    /// logistic: of the training set).
    #[arg(long)]
    outliers: Option<usize>,
    /// Total sampled points (logistic).
    #[arg(long, default_value_t = 1000)]
    total: usize,
    /// Training subset size (logistic).
    #[arg(long, default_value_t = 100)]
    train: usize,
    /// Per-term weight (logistic); the example's objective normalizes by the
    /// full dataset size (1/1000). Pass 0.01 to normalize by the training
    /// set instead.
    #[arg(long, default_value_t = 1e-3)]
    weight: f64,
    /// Time horizon (lane).
    #[arg(long, default_value_t = 100)]
    horizon: usize,
    /// Comfort weights (lane).
    #[arg(long, default_value_t = 10.0)]
    rho1: f64,
    #[arg(long, default_value_t = 1.0)]
    rho2: f64,
    #[arg(long, default_value_t = 0.1)]
    rho3: f64,
    /// Start and end lateral positions (lane).
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    start: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    end: f64,
    /// Comma-separated integer list (subset-sum), e.g. "2,3,-5".
    #[arg(long, allow_hyphen_values = true)]
    list: Option<String>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE_IO,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_USAGE_IO,
            message: format!("i/o error: {e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Malformed(_)
            | Error::UnknownLossKind { .. }
            | Error::Validation(_)
            | Error::DimensionMismatch { .. }
            | Error::BoxInverted { .. } => EXIT_PARSE,
            _ => EXIT_SOLVER,
        };
        Failure {
            code,
            message: format!("error: {e}"),
        }
    }
}

fn load_problem(path: &Path) -> Result<Problem, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_problem(&text)?)
}

fn write_out(dir: &Path, name: &str, content: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, content)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run_solve(args: &SolveArgs) -> Result<(), Failure> {
    let problem = load_problem(&args.io.problem)?;
    let lambda0 = match args.lambda0 {
        Lambda0::Half => None,
        Lambda0::Relaxation => {
            let cert = solve_relaxation(&problem, None, &RelaxConfig::default())?;
            let t: Vec<f64> = cert
                .solution
                .t
                .iter()
                .map(|&v| v.clamp(0.0, 1.0))
                .collect();
            Some(WeightVector::new(t)?)
        }
    };
    let (method_name, result) = match args.method {
        Method::Altmin | Method::AltminExact => {
            let mode = if matches!(args.method, Method::AltminExact) {
                AltMinMode::Exact
            } else {
                AltMinMode::Inexact
            };
            let cfg = AltMinConfig {
                lambda0,
                beta: args.beta,
                eps: args.eps,
                n_iter: args.max_iters,
                mode,
                ..AltMinConfig::default()
            };
            let name = match mode {
                AltMinMode::Exact => "altmin-exact",
                AltMinMode::Inexact => "altmin",
            };
            (name, solve_altmin(&problem, &cfg)?)
        }
        Method::Ccp => {
            let cfg = CcpConfig {
                max_iters: args.max_iters,
                ..CcpConfig::default()
            };
            ("ccp", solve_ccp(&problem, &cfg)?)
        }
    };

    let out = &args.io.out;
    write_out(
        out,
        "report.txt",
        &report::solve_report(method_name, &problem, &result, args.io.offset),
    )?;
    write_out(
        out,
        "objective_trace.csv",
        &report::objective_trace_csv(&result, args.io.offset),
    )?;
    let lambda_csv = report::lambda_trace_csv(&result);
    if !lambda_csv.is_empty() {
        write_out(out, "lambda_trace.csv", &lambda_csv)?;
    }
    if args.trajectory {
        write_out(out, "trajectory.csv", &report::trajectory_csv(&result.x_best))?;
    }
    println!(
        "objective: {:.10}",
        result.objective_value + args.io.offset
    );
    Ok(())
}

fn run_bound(args: &BoundArgs) -> Result<(), Failure> {
    let problem = load_problem(&args.io.problem)?;
    let (name, cert) = match args.solver {
        BoundSolver::Direct => (
            "direct",
            solve_relaxation(&problem, None, &RelaxConfig::default())?,
        ),
        BoundSolver::Admm => {
            let cfg = AdmmConfig {
                rho: args.rho,
                ..AdmmConfig::default()
            };
            ("admm", solve_relaxation_admm(&problem, &cfg)?)
        }
    };
    write_out(
        &args.io.out,
        "bound.txt",
        &report::bound_report(name, &problem, &cert, args.io.offset),
    )?;
    println!("lower bound: {:.10}", cert.lower_bound + args.io.offset);
    Ok(())
}

fn run_exact(args: &ExactArgs) -> Result<(), Failure> {
    let problem = load_problem(&args.io.problem)?;
    let (name, result) = match args.mode {
        ExactMode::Exhaustive => {
            let cfg = ExhaustiveConfig {
                max_terms: args.m_limit,
                ..ExhaustiveConfig::default()
            };
            ("exhaustive", solve_exhaustive(&problem, &cfg)?)
        }
        ExactMode::Bnb => {
            let cfg = BnbConfig {
                gap_tol: args.gap,
                ..BnbConfig::default()
            };
            ("bnb", solve_bnb(&problem, &cfg)?)
        }
    };
    write_out(
        &args.io.out,
        "exact.txt",
        &report::exact_report(name, &problem, &result, args.io.offset),
    )?;
    println!("objective: {:.10}", result.value + args.io.offset);
    Ok(())
}

fn run_example(args: &ExampleArgs) -> Result<(), Failure> {
    let (problem, extra) = match args.kind {
        ExampleKind::Regression => {
            let outliers = args.outliers.unwrap_or(5);
            let alpha = args.alpha.unwrap_or(0.5);
            let inst = generators::gen_regression(args.seed, args.points, outliers, alpha);
            (inst.problem, None)
        }
        ExampleKind::Logistic => {
            let outliers = args.outliers.unwrap_or(20);
            let alpha = args.alpha.unwrap_or(1.0);
            let inst = generators::gen_logistic(
                args.seed,
                args.total,
                args.train,
                outliers,
                alpha,
                args.weight,
            );
            let mut csv = String::from("x1,x2,x3,x4,x5,y\n");
            for (feat, label) in inst.test_x.iter().zip(&inst.test_y) {
                let row: Vec<String> = feat.iter().map(|v| v.to_string()).collect();
                csv.push_str(&format!("{},{label}\n", row.join(",")));
            }
            (inst.problem, Some(("test_set.csv", csv)))
        }
        ExampleKind::Lane => {
            let problem = generators::gen_lane_change(
                args.horizon,
                (args.rho1, args.rho2, args.rho3),
                args.start,
                args.end,
                &generators::default_obstacles(),
            )
            .map_err(Failure::usage)?;
            (problem, None)
        }
        ExampleKind::SubsetSum => {
            let list = args
                .list
                .as_deref()
                .ok_or_else(|| Failure::usage("subset-sum requires --list, e.g. --list 2,3,-5"))?;
            let values: Result<Vec<i64>, _> =
                list.split(',').map(|s| s.trim().parse::<i64>()).collect();
            let values =
                values.map_err(|e| Failure::usage(format!("bad --list entry: {e}")))?;
            if values.is_empty() {
                return Err(Failure::usage("subset-sum list must be nonempty"));
            }
            let inst = generators::gen_subset_sum(&values);
            println!("reporting offset: {}", inst.offset);
            println!(
                "pass --offset {} to solve/exact/bound for gadget values",
                inst.offset
            );
            (inst.problem, None)
        }
    };

    write_out(&args.out, "problem.json", &serialize_problem(&problem))?;
    if let Some((name, content)) = extra {
        write_out(&args.out, name, &content)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Bound(a) => run_bound(a),
        Command::Exact(a) => run_exact(a),
        Command::Example(a) => run_example(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
