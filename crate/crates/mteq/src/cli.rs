//! `mteq solve|gen|verify|bench`.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 iteration cap,
//! 3 infeasible start, rhs check failure, line-search failure or no certificate.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mteq_core::initializer::{find_certificate, DEFAULT_MAX_JACOBI};
use mteq_core::problems::{generate, with_rhs, zero_out_rhs, ProblemError, ProblemKind};
use mteq_core::problems::{DEFAULT_C0, DEFAULT_C1};
use mteq_core::tensor::{nqz_spectral_radius, NQZ_DEFAULT_MAX_ITER, NQZ_DEFAULT_TOL};
use mteq_core::{MTeqProblem, SolverConfig, Step3Mode, StopRule, Tensor};

use crate::bench::{self, BenchOptions, Cell, Zeroing};
use crate::dense_cap;
use crate::io::{self, Manifest, ManifestParams};
use crate::run::{self, exit_code, Method, RunError};

#[derive(Debug, Parser)]
#[command(
    name = "mteq",
    version,
    about = "Newton solvers for M-tensor equations A x^(m-1) = b"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve A x^(m-1) = b from .mt and .vec files
    Solve(SolveArgs),
    /// Generate a benchmark problem
    Gen(GenArgs),
    /// Check whether a tensor is a strong M-tensor
    Verify(VerifyArgs),
    /// Run seeded benchmark cells and print a table
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Plain,
    Step3prime,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Md,
    Csv,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Feasibility fraction on rows with b_i > 0
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Threshold fraction on rows with b_i = 0
    #[arg(long, default_value_t = 0.05)]
    eps2: f64,
    /// Sufficient-decrease constant
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Backtracking factor
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Residual tolerance
    #[arg(long, default_value_t = 1e-10)]
    eta: f64,
    /// Constant in the step3prime trial step 1 - c ||f||
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 300)]
    max_iter: usize,
    #[arg(long, default_value_t = 60)]
    max_backtracks: usize,
    /// Trial-step rule of the extended method (used when b has zeros)
    #[arg(long, value_enum, default_value_t = Mode::Step3prime)]
    mode: Mode,
}

impl SolverArgs {
    fn config(&self, stop: StopRule) -> SolverConfig {
        SolverConfig {
            eps: self.eps,
            eps2: self.eps2,
            sigma: self.sigma,
            rho: self.rho,
            eta: self.eta,
            c: self.c,
            max_iter: self.max_iter,
            max_backtracks: self.max_backtracks,
            stop,
            keep_iterates: false,
        }
    }

    fn step3(&self) -> Step3Mode {
        match self.mode {
            Mode::Plain => Step3Mode::Plain,
            Mode::Step3prime => Step3Mode::Step3Prime { c: self.c },
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Tensor file (.mt)
    tensor: PathBuf,
    /// Right-hand side (.vec)
    rhs: PathBuf,
    /// Starting point (.vec); the initializer is used when absent
    #[arg(long)]
    x0: Option<PathBuf>,
    /// Write the solution here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the iteration trace (CSV) here
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Stop on ||A x^(m-1) - b|| <= eta ||b|| and skip scaling
    #[arg(long)]
    relative: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Problem number
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    problem: u8,
    /// Order (problem 3 is always 4)
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Problem 3 boundary value at 0
    #[arg(long, default_value_t = DEFAULT_C0)]
    c0: f64,
    /// Problem 3 boundary value at 1
    #[arg(long, default_value_t = DEFAULT_C1)]
    c1: f64,
    /// Zero this fraction of b
    #[arg(long)]
    zero_frac: Option<f64>,
    /// 1-based entries of b kept positive when zeroing
    #[arg(long, value_delimiter = ',', default_value = "1")]
    keep: Vec<usize>,
    /// Seed of the zeroing draw (defaults to --seed)
    #[arg(long)]
    zero_seed: Option<u64>,
    /// Output directory for A.mt, b.vec and manifest.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Tensor file (.mt)
    tensor: PathBuf,
    /// Right-hand side (.vec) for the zero-row check
    #[arg(long)]
    rhs: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    problem: u8,
    /// Comma-separated cells such as 3x50,4x20
    #[arg(long, value_delimiter = ',', required = true)]
    cells: Vec<Cell>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Trial t uses seed + t
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_C0)]
    c0: f64,
    #[arg(long, default_value_t = DEFAULT_C1)]
    c1: f64,
    /// Zero this fraction of b in every trial (extended method)
    #[arg(long)]
    zero_frac: Option<f64>,
    /// 1-based entries of b kept positive when zeroing
    #[arg(long, value_delimiter = ',', default_value = "1")]
    keep: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Format::Md)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave time columns empty so the table is reproducible
    #[arg(long)]
    no_timing: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

/// A failed command: exit code plus message for stderr.
struct Failure(i32, String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(1, e.to_string())
    }
}

fn kind_of(problem: u8, c0: f64, c1: f64) -> ProblemKind {
    match problem {
        1 => ProblemKind::Symmetric,
        2 => ProblemKind::Sine,
        3 => ProblemKind::Gravity { c0, c1 },
        4 => ProblemKind::Nonsymmetric,
        _ => ProblemKind::LowerTriangular,
    }
}

fn kind_name(kind: ProblemKind) -> &'static str {
    match kind {
        ProblemKind::Symmetric => "symmetric",
        ProblemKind::Sine => "sine",
        ProblemKind::Gravity { .. } => "gravity",
        ProblemKind::Nonsymmetric => "nonsymmetric",
        ProblemKind::LowerTriangular => "lower-triangular",
    }
}

fn zero_based(keep: &[usize], n: usize) -> Result<Vec<usize>, Failure> {
    keep.iter()
        .map(|&k| {
            if (1..=n).contains(&k) {
                Ok(k - 1)
            } else {
                Err(Failure(1, format!("--keep {k} is outside 1..={n}")))
            }
        })
        .collect()
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Gen(a) => cmd_gen(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let cap = dense_cap()?;
    let tensor = io::read_tensor(&a.tensor, cap)?;
    let rhs = io::read_vector(&a.rhs)?;
    let x0 = a.x0.as_deref().map(io::read_vector).transpose()?;
    let p = if a.relative {
        MTeqProblem::new(tensor, rhs)
    } else {
        MTeqProblem::scaled(tensor, rhs)
    }
    .map_err(|e| {
        Failure(
            1,
            format!("{} / {}: {e}", a.tensor.display(), a.rhs.display()),
        )
    })?;
    let stop = if a.relative {
        StopRule::Relative
    } else {
        StopRule::Absolute
    };
    let cfg = a.solver.config(stop);
    let run = match run::solve(&p, &cfg, x0.as_deref(), a.solver.step3()) {
        Ok(run) => run,
        Err(RunError::Init(e)) => return Err(Failure(3, format!("initializer failed: {e}"))),
        Err(e @ RunError::Config(_)) => return Err(Failure(1, e.to_string())),
    };
    let r = &run.report;
    writeln!(out, "status: {}", r.status)?;
    writeln!(out, "method: {}", run.method.label())?;
    if let Method::Nonnegative(mode) = run.method {
        writeln!(out, "mode: {}", mode.as_str())?;
    }
    writeln!(out, "omega: {}", p.omega())?;
    if let Some(ip) = &run.init {
        writeln!(out, "init_iterations: {}", ip.init_iterations)?;
        writeln!(out, "t: {}", ip.t)?;
    }
    writeln!(out, "iterations: {}", r.iterations())?;
    writeln!(out, "residual: {:e}", r.final_residual)?;
    writeln!(out, "init_ms: {:.3}", run.init_ms)?;
    writeln!(out, "time_ms: {:.3}", run.solve_ms)?;
    if let Some(detail) = &r.detail {
        writeln!(out, "detail: {detail}")?;
    }
    if let Some(path) = &a.out {
        io::write_vector(path, &r.x)?;
    }
    if let Some(path) = &a.trace {
        let mode = match run.method {
            Method::Positive => None,
            Method::Nonnegative(m) => Some(m.as_str()),
        };
        io::write_trace_file(path, &r.trace, mode)?;
    }
    Ok(exit_code(r.status))
}

fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let cap = dense_cap()?;
    let kind = kind_of(a.problem, a.c0, a.c1);
    let m = match (kind, a.m) {
        (ProblemKind::Gravity { .. }, Some(m)) if m != 4 => {
            return Err(Failure(1, format!("problem 3 has order 4, not {m}")))
        }
        (ProblemKind::Gravity { .. }, _) => 4,
        (_, m) => m.unwrap_or(3),
    };
    let mut p = generate(kind, m, a.n, a.seed, cap).map_err(|e| match e {
        ProblemError::BadParameter { .. } => Failure(1, format!("usage: {e}")),
        e => Failure(1, e.to_string()),
    })?;
    let mut params = ManifestParams::default();
    if let ProblemKind::Gravity { c0, c1 } = kind {
        params.c0 = Some(c0);
        params.c1 = Some(c1);
    }
    if let Some(frac) = a.zero_frac {
        let keep = zero_based(&a.keep, a.n)?;
        let zero_seed = a.zero_seed.unwrap_or(a.seed);
        let rhs = zero_out_rhs(p.rhs(), zero_seed, &keep, frac)?;
        p = with_rhs(&p, rhs)?;
        params.zero_frac = Some(frac);
        params.keep = a.keep.clone();
        params.zero_seed = Some(zero_seed);
    }
    fs::create_dir_all(&a.out).map_err(|e| format!("{}: {e}", a.out.display()))?;
    let manifest = Manifest {
        problem: a.problem,
        problem_kind: kind_name(kind).into(),
        m,
        n: a.n,
        seed: a.seed,
        omega: p.omega(),
        params,
    };
    io::write_tensor(&a.out.join("A.mt"), p.tensor())?;
    io::write_vector(&a.out.join("b.vec"), p.rhs())?;
    io::write_manifest(&a.out.join("manifest.json"), &manifest)?;
    writeln!(out, "wrote {}", a.out.display())?;
    Ok(0)
}

/// Entrywise check that `t` equals its semi-symmetrization.
fn semi_symmetric(t: &Tensor) -> bool {
    let s = t.semi_symmetrize();
    let tol = 1e-13 * t.max_abs();
    let within = |x: &Tensor, y: &Tensor| x.nonzeros().all(|idx, v| (v - y.get(idx)).abs() <= tol);
    within(t, &s) && within(&s, t)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let cap = dense_cap()?;
    let t = io::read_tensor(&a.tensor, cap)?;
    let rhs = a.rhs.as_deref().map(io::read_vector).transpose()?;
    let layout = if t.is_dense() { "dense" } else { "coo" };
    writeln!(
        out,
        "tensor: order {} dim {} {layout} ({} stored)",
        t.order(),
        t.dim(),
        t.stored_len()
    )?;
    let z = t.is_z_tensor();
    writeln!(out, "z-tensor: {}", yes_no(z))?;
    writeln!(out, "diagonally dominant: {}", yes_no(t.is_diag_dominant()))?;
    writeln!(out, "semi-symmetric: {}", yes_no(semi_symmetric(&t)))?;
    let s = t.diagonal().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if z {
        let b = Tensor::scaled_identity_minus(s, &t);
        match nqz_spectral_radius(&b, NQZ_DEFAULT_TOL, NQZ_DEFAULT_MAX_ITER) {
            Ok(br) => {
                let verdict = if s > br.upper {
                    "s > rho(B)"
                } else if s < br.lower {
                    "s < rho(B)"
                } else {
                    "inconclusive"
                };
                writeln!(
                    out,
                    "nqz: s = {s:e}, rho(B) in [{:e}, {:e}] after {} iterations{}: {verdict}",
                    br.lower,
                    br.upper,
                    br.iterations,
                    if br.perturbed { " (perturbed)" } else { "" }
                )?;
            }
            Err(e) => writeln!(out, "nqz: {e}")?,
        }
    } else {
        writeln!(out, "nqz: skipped, B = s I - A is not nonnegative")?;
    }
    let certificate = if z {
        match find_certificate(&t, DEFAULT_MAX_JACOBI) {
            Ok((_, 0)) => {
                writeln!(out, "certificate: u = e")?;
                true
            }
            Ok((u, it)) => {
                let au = t.apply(&u).map_err(|e| e.to_string())?;
                let min = au.iter().copied().fold(f64::INFINITY, f64::min);
                writeln!(
                    out,
                    "certificate: found after {it} Jacobi iterations, min (A u^(m-1))_i = {min:e}"
                )?;
                true
            }
            Err(e) => {
                writeln!(out, "certificate: none ({e})")?;
                false
            }
        }
    } else {
        writeln!(out, "certificate: none (not a Z-tensor)")?;
        false
    };
    if let Some(rhs) = rhs {
        let p = MTeqProblem::new(t, rhs).map_err(|e| e.to_string())?;
        let report = p.check_assumption_b();
        if report.rows.is_empty() {
            writeln!(out, "rhs: b > 0, zero-row check not needed")?;
        } else {
            let failing: Vec<usize> = report.failing_rows().map(|i| i + 1).collect();
            if failing.is_empty() {
                writeln!(
                    out,
                    "rhs: {} zero rows, all reachable from I+",
                    report.rows.len()
                )?;
            } else {
                writeln!(out, "rhs: zero rows {failing:?} (1-based) have no entry with trailing indices in I+")?;
            }
        }
    }
    writeln!(out, "strong M-tensor: {}", yes_no(certificate))?;
    Ok(if certificate { 0 } else { 3 })
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let cap = dense_cap()?;
    let kind = kind_of(a.problem, a.c0, a.c1);
    // problem 3 is unscaled and uses the relative stop
    let stop = match kind {
        ProblemKind::Gravity { .. } => StopRule::Relative,
        _ => StopRule::Absolute,
    };
    let cfg = a.solver.config(stop);
    cfg.validate()?;
    if a.keep.contains(&0) {
        return Err(Failure(1, "--keep indices are 1-based".into()));
    }
    let keep: Vec<usize> = a.keep.iter().map(|k| k - 1).collect();
    let opts = BenchOptions {
        trials: a.trials,
        seed: a.seed,
        zeroing: a.zero_frac.map(|frac| Zeroing { frac, keep }),
        mode: a.solver.step3(),
        cfg,
    };
    let gen = |c: Cell, seed: u64| generate(kind, c.m, c.n, seed, cap).map_err(|e| e.to_string());
    let cells: Vec<_> = a
        .cells
        .iter()
        .map(|&c| bench::run_cell(c, &opts, &gen))
        .collect();
    let text = match a.format {
        Format::Md => bench::to_markdown(&cells, !a.no_timing),
        Format::Csv => bench::to_csv(&cells, !a.no_timing)?,
    };
    match &a.out {
        Some(path) => write_file(path, &text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(0)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure(1, format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("mteq").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn help_and_usage_codes() {
        assert_eq!(run_args(&["--help"]).0, 0);
        assert_eq!(run_args(&["--version"]).0, 0);
        let (code, _, err) = run_args(&["frobnicate"]);
        assert_eq!(code, 1);
        assert!(!err.is_empty());
        assert_eq!(
            run_args(&["gen", "--problem", "6", "--n", "3", "--out", "x"]).0,
            1
        );
    }

    #[test]
    fn missing_files_are_io_errors() {
        let (code, _, err) = run_args(&["solve", "/nonexistent/A.mt", "/nonexistent/b.vec"]);
        assert_eq!(code, 1);
        assert!(err.contains("/nonexistent/A.mt"), "{err}");
    }

    #[test]
    fn semi_symmetry_check() {
        let id = Tensor::identity(3, 3).unwrap();
        assert!(semi_symmetric(&id));
        let t = Tensor::coo_from_entries(3, 2, vec![(vec![0, 0, 1], 1.0)]).unwrap();
        assert!(!semi_symmetric(&t));
        assert!(semi_symmetric(&t.semi_symmetrize()));
    }
}
