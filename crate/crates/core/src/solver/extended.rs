//! Extended Newton method for `b >= 0`.
//!
//! Rows with `b_i = 0` (the set `I0`) cannot use the `A x^(m-1) >= eps b`
//! condition, which would be vacuous there. Instead a trial point must keep
//! `(A x^(m-1))_{I0}` above `eps2 f'(y)_{I0,I+} f'(y)_{I+,I+}^{-1} b_{I+}`, a
//! nonpositive threshold that keeps `f'(y)` a nonsingular M-matrix.

use alloc::format;
use alloc::vec::Vec;

use super::basic::check_start;
use super::{
    newton_loop, search, Clock, LineSearchFailure, NoClock, SolveReport, SolveStatus, Step,
};
use crate::model::{ConfigError, MTeqProblem, SolverConfig};

/// Trial-step rule of the extended method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step3Mode {
    /// Trial steps `rho^i`, `i = 0, 1, ..`.
    Plain,
    /// Try `1`; otherwise `beta rho^i` with `beta = 1 - c ||f(y)||`, reset to
    /// `1` when `beta <= 0`.
    Step3Prime { c: f64 },
}

impl Step3Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Step3Mode::Plain => "plain",
            Step3Mode::Step3Prime { .. } => "step3prime",
        }
    }
}

/// The sequence of trial steps tried by [`line_search_extended`].
///
/// Plain mode yields `max_backtracks + 1` steps. Step3Prime yields `1` followed
/// by `max_backtracks + 1` steps `beta rho^i` (starting at `i = 1` when `beta = 1`,
/// which would only repeat the unit step).
pub fn trial_steps(
    mode: Step3Mode,
    residual_norm: f64,
    rho: f64,
    max_backtracks: usize,
) -> impl Iterator<Item = f64> {
    let geometric = move |scale: f64, first: usize| {
        (first..first + max_backtracks + 1).map(move |i| scale * libm::pow(rho, i as f64))
    };
    let (head, tail): (Option<f64>, _) = match mode {
        Step3Mode::Plain => (None, geometric(1.0, 0)),
        Step3Mode::Step3Prime { c } => {
            let beta = 1.0 - c * residual_norm;
            if beta <= 0.0 || beta >= 1.0 {
                (Some(1.0), geometric(1.0, 1))
            } else {
                (Some(1.0), geometric(beta, 0))
            }
        }
    };
    head.into_iter().chain(tail)
}

/// Backtracking line search keeping `y + alpha d` in the extended feasibility set.
pub fn line_search_extended(
    p: &MTeqProblem,
    y: &[f64],
    d: &[f64],
    cfg: &SolverConfig,
    mode: Step3Mode,
) -> Result<Step, LineSearchFailure> {
    let f = p.f_eval(y).map_err(|_| LineSearchFailure { trials: 0 })?;
    search_extended(p, y, &f, d, cfg, mode)
}

fn search_extended(
    p: &MTeqProblem,
    y: &[f64],
    f: &[f64],
    d: &[f64],
    cfg: &SolverConfig,
    mode: Step3Mode,
) -> Result<Step, LineSearchFailure> {
    let f_norm_sq: f64 = f.iter().map(|v| v * v).sum();
    let alphas = trial_steps(mode, libm::sqrt(f_norm_sq), cfg.rho, cfg.max_backtracks);
    let has_zeros = p.partition().has_zeros();
    search(p, y, d, f_norm_sq, cfg.sigma, alphas, |trial, f_trial| {
        if !has_zeros {
            return p.f_in_eps(f_trial, cfg.eps);
        }
        match p.fprime_eval(trial) {
            Ok(fp) => p.f_in_bar(f_trial, &fp, cfg.eps, cfg.eps2),
            Err(_) => false,
        }
    })
}

/// Solves `A x^(m-1) = b` for `b >= 0` from `y0` in the extended feasibility set.
///
/// Refuses with [`SolveStatus::AssumptionViolated`] when some row with
/// `b_i = 0` has no nonzero entry whose trailing indices all lie in `I+`.
pub fn solve_nonnegative(
    p: &MTeqProblem,
    y0: &[f64],
    cfg: &SolverConfig,
    mode: Step3Mode,
) -> Result<SolveReport, ConfigError> {
    solve_nonnegative_with_clock(p, y0, cfg, mode, &NoClock)
}

pub fn solve_nonnegative_with_clock<C: Clock>(
    p: &MTeqProblem,
    y0: &[f64],
    cfg: &SolverConfig,
    mode: Step3Mode,
    clock: &C,
) -> Result<SolveReport, ConfigError> {
    cfg.validate()?;
    if let Step3Mode::Step3Prime { c } = mode {
        if !(c > 0.0) {
            return Err(ConfigError("Step3Prime constant c must be positive"));
        }
    }
    let x0: Vec<f64> = p.x_of_y(y0).unwrap_or_else(|_| y0.to_vec());
    let report = p.check_assumption_b();
    if !report.passed() {
        let rows: Vec<usize> = report.failing_rows().map(|i| i + 1).collect();
        return Ok(SolveReport::failure(
            SolveStatus::AssumptionViolated,
            y0.to_vec(),
            x0,
            format!(
                "rows {rows:?} (1-based) have b_i = 0 and no nonzero entry with trailing indices in I+"
            ),
        ));
    }
    if let Some(r) = check_start(p, &x0, y0, |y| {
        p.in_f_bar(y, cfg.eps, cfg.eps2).unwrap_or(false)
    }) {
        return Ok(r);
    }
    Ok(newton_loop(p, y0.to_vec(), cfg, clock, |y, f, d| {
        search_extended(p, y, f, d, cfg, mode)
    }))
}
