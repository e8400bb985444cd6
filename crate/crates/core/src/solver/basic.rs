//! Newton's method for `b > 0` on the set `F_eps = { y > 0 : A x^(m-1) >= eps b }`.

use alloc::format;

use super::{
    newton_loop, search, Clock, LineSearchFailure, NoClock, SolveReport, SolveStatus, Step,
};
use crate::model::{check_positive, ConfigError, MTeqProblem, SolverConfig};

/// Backtracks over `rho^i`, `i = 0..=max_backtracks`, keeping `y + alpha d` in `F_eps`.
pub fn line_search_basic(
    p: &MTeqProblem,
    y: &[f64],
    d: &[f64],
    cfg: &SolverConfig,
) -> Result<Step, LineSearchFailure> {
    let f = p.f_eval(y).map_err(|_| LineSearchFailure { trials: 0 })?;
    search_basic(p, y, &f, d, cfg)
}

pub(super) fn search_basic(
    p: &MTeqProblem,
    y: &[f64],
    f: &[f64],
    d: &[f64],
    cfg: &SolverConfig,
) -> Result<Step, LineSearchFailure> {
    let f_norm_sq: f64 = f.iter().map(|v| v * v).sum();
    let alphas = (0..=cfg.max_backtracks).map(|i| libm::pow(cfg.rho, i as f64));
    search(p, y, d, f_norm_sq, cfg.sigma, alphas, |_, f_trial| {
        p.f_in_eps(f_trial, cfg.eps)
    })
}

/// Solves `A x^(m-1) = b` for `b > 0` from a starting point `x0` with `x0^[m-1]` in `F_eps`.
pub fn solve_positive(
    p: &MTeqProblem,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport, ConfigError> {
    solve_positive_with_clock(p, x0, cfg, &NoClock)
}

pub fn solve_positive_with_clock<C: Clock>(
    p: &MTeqProblem,
    x0: &[f64],
    cfg: &SolverConfig,
    clock: &C,
) -> Result<SolveReport, ConfigError> {
    cfg.validate()?;
    let y0 = p.y_of_x(x0);
    if p.partition().has_zeros() {
        return Ok(SolveReport::failure(
            SolveStatus::AssumptionViolated,
            y0,
            x0.to_vec(),
            format!(
                "b has {} zero entries; the positive-rhs method needs b > 0",
                p.partition().zero.len()
            ),
        ));
    }
    if let Some(report) = check_start(p, x0, &y0, |y| p.in_f_eps(y, cfg.eps).unwrap_or(false)) {
        return Ok(report);
    }
    Ok(newton_loop(p, y0, cfg, clock, |y, f, d| {
        search_basic(p, y, f, d, cfg)
    }))
}

/// Shape, positivity and feasibility of a starting point.
pub(super) fn check_start(
    p: &MTeqProblem,
    x0: &[f64],
    y0: &[f64],
    feasible: impl Fn(&[f64]) -> bool,
) -> Option<SolveReport> {
    let fail = |detail: alloc::string::String| {
        Some(SolveReport::failure(
            SolveStatus::BadInitialPoint,
            y0.to_vec(),
            x0.to_vec(),
            detail,
        ))
    };
    if x0.len() != p.dim() {
        return fail(format!(
            "initial point has length {}, expected {}",
            x0.len(),
            p.dim()
        ));
    }
    if let Err(e) = check_positive(x0).and_then(|_| check_positive(y0)) {
        return fail(format!("{e}"));
    }
    if !feasible(y0) {
        return fail("initial point is outside the feasibility set".into());
    }
    None
}
