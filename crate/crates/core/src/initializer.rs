//! Feasible starting points.
//!
//! A strong M-tensor admits `u > 0` with `A u^(m-1) > 0`. For diagonally
//! dominant tensors `u = e` works; otherwise `u` is taken from a Jacobi
//! splitting iteration on `A x^(m-1) = e`, stopped as soon as `A x^(m-1) > 0`.
//! The start is then `x0 = t u` with `t` just large enough that
//! `t^(m-1) A u^(m-1) >= eps b`.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::model::{MTeqProblem, SolverConfig};
use crate::tensor::{pow, Tensor, TensorError};

pub const DEFAULT_MAX_JACOBI: usize = 100_000;

/// Safety factor applied to the scaling constant `t`.
pub const T_SAFETY: f64 = 1.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InitError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("diagonal entry {index} is {value}; the Jacobi splitting needs a positive diagonal")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("no positive certificate after {0} Jacobi iterations; A may not be a strong M-tensor")]
    Exhausted(usize),
    #[error("Jacobi iterate lost positivity at component {0}")]
    LostPositivity(usize),
    #[error("scaled start is not feasible")]
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialPoint {
    /// Certificate vector with `A u^(m-1) > 0`.
    pub u: Vec<f64>,
    pub t: f64,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    /// Jacobi iterations spent finding `u` (0 for diagonally dominant tensors).
    pub init_iterations: usize,
}

/// One Jacobi sweep for `A x^(m-1) = e`:
/// `x+_i = ((1 + (B x^(m-1))_i) / a_{i..i})^(1/(m-1))` with `B = diag(A) I - A`.
pub fn jacobi_iterate(a: &Tensor, x: &[f64]) -> Result<Vec<f64>, InitError> {
    let diag = a.diagonal();
    jacobi_with_diagonal(a, &diag, x)
}

fn jacobi_with_diagonal(a: &Tensor, diag: &[f64], x: &[f64]) -> Result<Vec<f64>, InitError> {
    if let Some((index, &value)) = diag.iter().enumerate().find(|(_, &d)| !(d > 0.0)) {
        return Err(InitError::NonPositiveDiagonal { index, value });
    }
    let deg = (a.order() - 1) as f64;
    let ax = a.apply(x)?;
    x.iter()
        .zip(&ax)
        .zip(diag)
        .enumerate()
        .map(|(i, ((&xi, &axi), &d))| {
            // (B x^(m-1))_i = a_ii x_i^(m-1) - (A x^(m-1))_i, nonnegative for Z-tensors
            let bx = (d * pow(xi, deg) - axi).max(0.0);
            let next = pow((1.0 + bx) / d, 1.0 / deg);
            if next > 0.0 && next.is_finite() {
                Ok(next)
            } else {
                Err(InitError::LostPositivity(i))
            }
        })
        .collect()
}

/// Finds `u > 0` with `A u^(m-1) > 0`, returning it with the iteration count.
pub fn find_certificate(a: &Tensor, max_iter: usize) -> Result<(Vec<f64>, usize), InitError> {
    let e = vec![1.0; a.dim()];
    if a.is_diag_dominant() {
        return Ok((e, 0));
    }
    let diag = a.diagonal();
    let mut x = e;
    for it in 1..=max_iter {
        x = jacobi_with_diagonal(a, &diag, &x)?;
        if a.is_certificate(&x) {
            return Ok((x, it));
        }
    }
    Err(InitError::Exhausted(max_iter))
}

/// Scaling constant `t = max(1, max_i (eps b_i / (A u^(m-1))_i)^(1/(m-1))) * 1.01`,
/// the smallest `t >= 1` with `t^(m-1) A u^(m-1) >= eps b` row by row, plus a safety margin.
pub fn scaling_constant(au: &[f64], b: &[f64], eps: f64, order: usize) -> f64 {
    let deg = (order - 1) as f64;
    let need = b
        .iter()
        .zip(au)
        .map(|(&bi, &ai)| pow(eps * bi / ai, 1.0 / deg))
        .fold(1.0, f64::max);
    need * T_SAFETY
}

/// A feasible start for either Newton method, using the default Jacobi cap.
pub fn initial_point(p: &MTeqProblem, cfg: &SolverConfig) -> Result<InitialPoint, InitError> {
    initial_point_with_cap(p, cfg, DEFAULT_MAX_JACOBI)
}

pub fn initial_point_with_cap(
    p: &MTeqProblem,
    cfg: &SolverConfig,
    max_jacobi: usize,
) -> Result<InitialPoint, InitError> {
    let a = p.tensor();
    let (u, init_iterations) = find_certificate(a, max_jacobi)?;
    let au = a.apply(&u)?;
    let t = scaling_constant(&au, p.rhs(), cfg.eps, p.order());
    let x0: Vec<f64> = u.iter().map(|v| t * v).collect();
    let y0 = p.y_of_x(&x0);
    let feasible = if p.partition().has_zeros() {
        p.in_f_bar(&y0, cfg.eps, cfg.eps2)
    } else {
        p.in_f_eps(&y0, cfg.eps)
    };
    if !feasible.unwrap_or(false) {
        return Err(InitError::Infeasible);
    }
    Ok(InitialPoint {
        u,
        t,
        x0,
        y0,
        init_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::DEFAULT_DENSE_CAP;

    #[test]
    fn identity_fixed_point() {
        let id = Tensor::identity(3, 3).unwrap();
        assert_eq!(jacobi_iterate(&id, &[1.0, 1.0, 1.0]).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn diagonal_tensor_sweep() {
        let a = Tensor::identity(3, 2).unwrap().scaled(4.0);
        for x in [[1.0, 1.0], [3.0, 0.2]] {
            let next = jacobi_iterate(&a, &x).unwrap();
            assert!(next.iter().all(|v| (v - 0.5).abs() < 1e-15));
        }
    }

    #[test]
    fn refuses_nonpositive_diagonal() {
        let ones = Tensor::ones(3, 2, DEFAULT_DENSE_CAP).unwrap();
        let a = Tensor::scaled_identity_minus(1.0, &ones);
        assert!(matches!(
            jacobi_iterate(&a, &[1.0, 1.0]),
            Err(InitError::NonPositiveDiagonal { index: 0, .. })
        ));
        let p = MTeqProblem::new(a, vec![1.0, 1.0]).unwrap();
        assert!(initial_point(&p, &SolverConfig::default()).is_err());
    }

    #[test]
    fn identity_start_matches_formula() {
        let p = MTeqProblem::new(Tensor::identity(3, 2).unwrap(), vec![8.0, 27.0]).unwrap();
        let ip = initial_point(&p, &SolverConfig::default()).unwrap();
        assert_eq!(ip.u, vec![1.0, 1.0]);
        assert_eq!(ip.init_iterations, 0);
        let t = libm::sqrt(2.7) * 1.01;
        assert!((ip.t - t).abs() < 1e-15);
        assert!((ip.t - 1.6596).abs() < 1e-3);
        assert!(p.in_f_eps(&ip.y0, 0.1).unwrap());
    }

    #[test]
    fn t_is_at_least_safety_factor() {
        assert_eq!(scaling_constant(&[5.0, 5.0], &[0.1, 0.2], 0.1, 3), 1.01);
        assert_eq!(scaling_constant(&[1.0], &[0.0], 0.1, 4), 1.01);
        // each row is checked against its own A u^(m-1)
        let t = scaling_constant(&[1e-4, 1.0], &[1.0, 1e3], 0.1, 3);
        assert!((t - libm::sqrt(1000.0) * 1.01).abs() < 1e-12);
    }

    #[test]
    fn non_dominant_chain_gets_certificate() {
        // A = 2 I - B where B couples row 1 to x_0 strongly: row 1 of A e^2 is negative.
        let entries = vec![
            (vec![0, 0, 0], 1.0),
            (vec![1, 1, 1], 2.0),
            (vec![1, 0, 0], -3.0),
        ];
        let a = Tensor::coo_from_entries(3, 2, entries).unwrap();
        assert!(!a.is_diag_dominant());
        let (u, its) = find_certificate(&a, 100).unwrap();
        assert!(its >= 1);
        assert!(a.apply(&u).unwrap().iter().all(|&v| v > 0.0));
    }
}
