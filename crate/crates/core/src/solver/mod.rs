//! Feasibility-preserving damped Newton methods in y-space.
//!
//! Both methods solve `f'(y_k) d_k = -f(y_k)` and then search over a sequence
//! of trial steps for the first `alpha` such that `y_k + alpha d_k` stays
//! positive, stays in the feasibility set, and satisfies
//! `||f(y_k + alpha d_k)||^2 <= (1 - 2 sigma alpha) ||f(y_k)||^2`.
//! They differ only in the feasibility set and the trial-step sequence.

mod basic;
mod extended;

use alloc::vec::Vec;

pub use basic::{line_search_basic, solve_positive, solve_positive_with_clock};
pub use extended::{
    line_search_extended, solve_nonnegative, solve_nonnegative_with_clock, trial_steps, Step3Mode,
};

use crate::linalg::{lu_solve, LinalgError, Matrix};
use crate::model::{euclidean_norm, MTeqProblem, ModelError, SolverConfig};

/// Source of wall-clock time for trace records.
pub trait Clock {
    /// Milliseconds since some fixed origin.
    fn elapsed_ms(&self) -> f64;
}

/// Reports zero elapsed time.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_ms(&self) -> f64 {
        0.0
    }
}

impl<F: Fn() -> f64> Clock for F {
    fn elapsed_ms(&self) -> f64 {
        self()
    }
}

/// One row of a solve trace.
///
/// Record `k = 0` describes the starting point and carries `alpha = 0`;
/// record `k >= 1` describes `y_k = y_{k-1} + alpha d_{k-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub alpha: f64,
    /// `||f(y_k)||_2`
    pub residual_norm: f64,
    pub backtracks: usize,
    pub feasible: bool,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterationCap,
    LineSearchFailure,
    BadInitialPoint,
    AssumptionViolated,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::IterationCap => "iteration-cap",
            SolveStatus::LineSearchFailure => "line-search-failure",
            SolveStatus::BadInitialPoint => "bad-initial-point",
            SolveStatus::AssumptionViolated => "assumption-violated",
        }
    }
}

impl core::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub trace: Vec<IterationRecord>,
    pub final_residual: f64,
    /// Accepted iterates `y_0, y_1, ..` when `keep_iterates` is set.
    pub iterates: Vec<Vec<f64>>,
    /// Human-readable reason for a non-converged status.
    pub detail: Option<alloc::string::String>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// Number of Newton steps taken.
    pub fn iterations(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }

    pub(crate) fn failure(
        status: SolveStatus,
        y: Vec<f64>,
        x: Vec<f64>,
        detail: alloc::string::String,
    ) -> Self {
        Self {
            status,
            x,
            y,
            trace: Vec::new(),
            final_residual: f64::NAN,
            iterates: Vec::new(),
            detail: Some(detail),
        }
    }
}

/// Newton direction `d` solving `f'(y) d = -f(y)`.
pub fn newton_direction(p: &MTeqProblem, y: &[f64]) -> Result<Vec<f64>, ModelError> {
    let f = p.f_eval(y)?;
    let fp = p.fprime_eval(y)?;
    direction_from(&fp, &f).map_err(ModelError::SingularBlock)
}

pub(crate) fn direction_from(fp: &Matrix, f: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let neg: Vec<f64> = f.iter().map(|v| -v).collect();
    lu_solve(fp, &neg)
}

/// An accepted line-search step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub alpha: f64,
    pub y: Vec<f64>,
    pub f: Vec<f64>,
    pub backtracks: usize,
}

/// Every trial step was rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchFailure {
    pub trials: usize,
}

/// Evaluates one trial point; `None` when it leaves the positive orthant.
fn trial_point(p: &MTeqProblem, y: &[f64], d: &[f64], alpha: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let trial: Vec<f64> = y.iter().zip(d).map(|(yi, di)| yi + alpha * di).collect();
    if !trial.iter().all(|&v| v > 0.0 && v.is_finite()) {
        return None;
    }
    let f = p.f_eval(&trial).ok()?;
    Some((trial, f))
}

/// Generic backtracking over `alphas`, with a feasibility predicate.
fn search(
    p: &MTeqProblem,
    y: &[f64],
    d: &[f64],
    f_norm_sq: f64,
    sigma: f64,
    alphas: impl Iterator<Item = f64>,
    feasible: impl Fn(&[f64], &[f64]) -> bool,
) -> Result<Step, LineSearchFailure> {
    let mut trials = 0;
    for alpha in alphas {
        trials += 1;
        let Some((trial, f)) = trial_point(p, y, d, alpha) else {
            continue;
        };
        let new_sq: f64 = f.iter().map(|v| v * v).sum();
        if new_sq <= (1.0 - 2.0 * sigma * alpha) * f_norm_sq && feasible(&trial, &f) {
            return Ok(Step {
                alpha,
                y: trial,
                f,
                backtracks: trials - 1,
            });
        }
    }
    Err(LineSearchFailure { trials })
}

/// Shared Newton loop; `line_search` receives `(y, f(y), f'(y), d)`.
fn newton_loop<C: Clock>(
    p: &MTeqProblem,
    y0: Vec<f64>,
    cfg: &SolverConfig,
    clock: &C,
    mut line_search: impl FnMut(&[f64], &[f64], &[f64]) -> Result<Step, LineSearchFailure>,
) -> SolveReport {
    let threshold = p.stop_threshold(cfg);
    let mut y = y0;
    let mut f = match p.f_eval(&y) {
        Ok(f) => f,
        Err(e) => {
            let x = y.clone();
            return SolveReport::failure(SolveStatus::BadInitialPoint, y, x, alloc::format!("{e}"));
        }
    };
    let mut residual = euclidean_norm(&f);
    let mut trace = alloc::vec![IterationRecord {
        k: 0,
        alpha: 0.0,
        residual_norm: residual,
        backtracks: 0,
        feasible: true,
        elapsed_ms: clock.elapsed_ms(),
    }];
    let mut iterates = Vec::new();
    if cfg.keep_iterates {
        iterates.push(y.clone());
    }
    let mut status = SolveStatus::IterationCap;
    let mut detail = None;
    let mut k = 0;
    loop {
        if residual <= threshold {
            status = SolveStatus::Converged;
            break;
        }
        if k >= cfg.max_iter {
            detail = Some(alloc::format!(
                "no convergence within {} iterations",
                cfg.max_iter
            ));
            break;
        }
        let fp = p.fprime_eval(&y).expect("accepted iterates are positive");
        let d = match direction_from(&fp, &f) {
            Ok(d) => d,
            Err(e) => {
                status = SolveStatus::LineSearchFailure;
                detail = Some(alloc::format!("Newton system at iteration {k}: {e}"));
                break;
            }
        };
        let step = match line_search(&y, &f, &d) {
            Ok(step) => step,
            Err(LineSearchFailure { trials }) => {
                status = SolveStatus::LineSearchFailure;
                detail = Some(alloc::format!(
                    "no acceptable step after {trials} trials at iteration {k}"
                ));
                break;
            }
        };
        k += 1;
        y = step.y;
        f = step.f;
        residual = euclidean_norm(&f);
        trace.push(IterationRecord {
            k,
            alpha: step.alpha,
            residual_norm: residual,
            backtracks: step.backtracks,
            feasible: true,
            elapsed_ms: clock.elapsed_ms(),
        });
        if cfg.keep_iterates {
            iterates.push(y.clone());
        }
    }
    let x = p.x_of_y(&y).expect("accepted iterates are positive");
    SolveReport {
        status,
        x,
        y,
        trace,
        final_residual: residual,
        iterates,
        detail,
    }
}
