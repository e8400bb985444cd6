//! Initializer plus solver selection, shared by `solve`, `bench` and the tests.

use std::time::Instant;

use mteq_core::initializer::{initial_point, InitError, InitialPoint};
use mteq_core::model::ConfigError;
use mteq_core::solver::{solve_nonnegative_with_clock, solve_positive_with_clock};
use mteq_core::{MTeqProblem, SolveReport, SolveStatus, SolverConfig, Step3Mode};
use thiserror::Error;

/// Which Newton method a run used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// `b > 0`
    Positive,
    /// `b >= 0` with some zeros
    Nonnegative(Step3Mode),
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Positive => "positive",
            Method::Nonnegative(_) => "nonnegative",
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("initializer failed: {0}")]
    Init(#[from] InitError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone)]
pub struct Run {
    pub method: Method,
    /// `None` when the caller supplied `x0`, or the rhs check failed first.
    pub init: Option<InitialPoint>,
    pub report: SolveReport,
    pub init_ms: f64,
    pub solve_ms: f64,
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Solves `p` from `x0`, or from the initializer's start when `x0` is `None`.
///
/// Picks the positive-rhs method when `b > 0`, otherwise the extended method
/// with `mode`. With zeros in `b` the structural rhs check runs before the
/// initializer, so a violation is reported as a solve status.
pub fn solve(
    p: &MTeqProblem,
    cfg: &SolverConfig,
    x0: Option<&[f64]>,
    mode: Step3Mode,
) -> Result<Run, RunError> {
    cfg.validate()?;
    let method = if p.partition().has_zeros() {
        Method::Nonnegative(mode)
    } else {
        Method::Positive
    };
    let start = Instant::now();
    if let Method::Nonnegative(mode) = method {
        if !p.check_assumption_b().passed() {
            let y0 = vec![1.0; p.dim()];
            let report = solve_nonnegative_with_clock(p, &y0, cfg, mode, &|| ms_since(start))?;
            return Ok(Run {
                method,
                init: None,
                report,
                init_ms: 0.0,
                solve_ms: ms_since(start),
            });
        }
    }
    let (init, x0) = match x0 {
        Some(x0) => (None, x0.to_vec()),
        None => {
            let ip = initial_point(p, cfg)?;
            let x0 = ip.x0.clone();
            (Some(ip), x0)
        }
    };
    let init_ms = ms_since(start);
    let clock = || ms_since(start);
    let report = match method {
        Method::Positive => solve_positive_with_clock(p, &x0, cfg, &clock)?,
        Method::Nonnegative(mode) => {
            let y0 = p.y_of_x(&x0);
            solve_nonnegative_with_clock(p, &y0, cfg, mode, &clock)?
        }
    };
    Ok(Run {
        method,
        init,
        report,
        init_ms,
        solve_ms: ms_since(start),
    })
}

/// Process exit code for a solve status.
pub fn exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => 0,
        SolveStatus::IterationCap => 2,
        SolveStatus::LineSearchFailure
        | SolveStatus::BadInitialPoint
        | SolveStatus::AssumptionViolated => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mteq_core::Tensor;

    #[test]
    fn picks_method_from_rhs() {
        let id = Tensor::identity(4, 2).unwrap();
        let p = MTeqProblem::new(id.clone(), vec![8.0, 27.0]).unwrap();
        let run = solve(&p, &SolverConfig::default(), None, Step3Mode::Plain).unwrap();
        assert_eq!(run.method, Method::Positive);
        assert!(run.report.converged());
        assert!((run.report.x[0] - 2.0).abs() < 1e-12 && (run.report.x[1] - 3.0).abs() < 1e-12);
        assert_eq!(run.init.unwrap().init_iterations, 0);

        let q = MTeqProblem::new(id, vec![1.0, 0.0]).unwrap();
        let run = solve(&q, &SolverConfig::default(), None, Step3Mode::Plain).unwrap();
        assert!(matches!(run.method, Method::Nonnegative(_)));
        assert_eq!(run.report.status, SolveStatus::AssumptionViolated);
        assert_eq!(exit_code(run.report.status), 3);
    }

    #[test]
    fn bad_config_is_an_error() {
        let p = MTeqProblem::new(Tensor::identity(3, 2).unwrap(), vec![1.0, 1.0]).unwrap();
        let cfg = SolverConfig {
            sigma: 0.7,
            ..SolverConfig::default()
        };
        assert!(matches!(
            solve(&p, &cfg, None, Step3Mode::Plain),
            Err(RunError::Config(_))
        ));
    }
}
