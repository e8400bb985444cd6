//! The y-space formulation of `A x^(m-1) = b`.
//!
//! With `y = x^[m-1]` the equation becomes `f(y) = A (y^[1/(m-1)])^(m-1) - b = 0`.
//! Its Jacobian `f'(y)` is a Z-matrix for Z-tensors `A`, and on the feasibility
//! sets defined here it is a nonsingular M-matrix, which keeps Newton's method
//! well defined.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::linalg::{lu_solve, LinalgError, Matrix};
use crate::tensor::{hadamard_power, pow, Tensor, TensorError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("right-hand side has length {got}, tensor dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coefficient tensor is not a Z-tensor")]
    NotZTensor,
    #[error("right-hand side entry {index} is {value}; it must be finite and nonnegative")]
    NegativeRhs { index: usize, value: f64 },
    #[error("cannot scale an all-zero problem")]
    ZeroProblem,
    #[error("component {index} of y is {value}; y must be strictly positive")]
    NonPositive { index: usize, value: f64 },
    #[error("certificate fails: (A u^(m-1))_{index} = {value} is not positive")]
    BadCertificate { index: usize, value: f64 },
    #[error("the I+ block of the Jacobian is singular: {0}")]
    SingularBlock(LinalgError),
}

/// Indices where `b` is positive (`plus`) and exactly zero (`zero`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPartition {
    pub plus: Vec<usize>,
    pub zero: Vec<usize>,
}

impl IndexPartition {
    pub fn has_zeros(&self) -> bool {
        !self.zero.is_empty()
    }
}

/// Splits indices by the exact test `b_i == 0`.
pub fn partition_indices(b: &[f64]) -> Result<IndexPartition, ModelError> {
    let mut plus = Vec::new();
    let mut zero = Vec::new();
    for (index, &value) in b.iter().enumerate() {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(ModelError::NegativeRhs { index, value });
        }
        if value == 0.0 {
            zero.push(index);
        } else {
            plus.push(index);
        }
    }
    Ok(IndexPartition { plus, zero })
}

/// When to stop the Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// `||f(y)|| <= eta`
    Absolute,
    /// `||f(y)|| <= eta * ||b||`
    Relative,
}

/// Tunables shared by both Newton methods.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Feasibility fraction for `A x^(m-1) >= eps * b` on `I+`.
    pub eps: f64,
    /// Threshold fraction on `I0`; must satisfy `0 < eps2 < eps`.
    pub eps2: f64,
    /// Sufficient-decrease constant in `(0, 1/2)`.
    pub sigma: f64,
    /// Backtracking factor in `(0, 1)`.
    pub rho: f64,
    /// Residual tolerance.
    pub eta: f64,
    /// Constant of the `beta = 1 - c ||f||` trial step.
    pub c: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
    pub stop: StopRule,
    /// Keep every accepted iterate in the report.
    pub keep_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps: 0.1,
            eps2: 0.05,
            sigma: 0.1,
            rho: 0.5,
            eta: 1e-10,
            c: 1.0,
            max_iter: 300,
            max_backtracks: 60,
            stop: StopRule::Absolute,
            keep_iterates: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid solver configuration: {0}")]
pub struct ConfigError(pub &'static str);

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0 < self.eps && self.eps < 1.0) {
            return Err(ConfigError("eps must lie in (0, 1)"));
        }
        if !(0.0 < self.eps2 && self.eps2 < self.eps) {
            return Err(ConfigError("eps2 must lie in (0, eps)"));
        }
        if !(0.0 < self.sigma && self.sigma < 0.5) {
            return Err(ConfigError("sigma must lie in (0, 1/2)"));
        }
        if !(0.0 < self.rho && self.rho < 1.0) {
            return Err(ConfigError("rho must lie in (0, 1)"));
        }
        if !(self.eta >= 0.0) {
            return Err(ConfigError("eta must be nonnegative"));
        }
        if !(self.c > 0.0) {
            return Err(ConfigError("c must be positive"));
        }
        Ok(())
    }
}

/// Result of the structural check that every `i` in `I0` has a nonzero
/// `a_{i i2 .. im}` with all trailing indices in `I+`.
///
/// This is only the explicit per-row condition; irreducibility with respect
/// to `I0` is not decided.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssumptionReport {
    /// `(i, witnessed)` for every `i` in `I0`.
    pub rows: Vec<(usize, bool)>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|&(_, ok)| ok)
    }

    pub fn failing_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().filter(|(_, ok)| !ok).map(|&(i, _)| i)
    }
}

pub fn euclidean_norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// A validated pair `(A, b)` with `A` a Z-tensor and `b >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MTeqProblem {
    tensor: Tensor,
    rhs: Vec<f64>,
    omega: f64,
    partition: IndexPartition,
    certificate: Option<Vec<f64>>,
    slack: f64,
}

impl MTeqProblem {
    /// Wraps `(A, b)` without scaling (`omega = 1`).
    pub fn new(tensor: Tensor, rhs: Vec<f64>) -> Result<Self, ModelError> {
        if rhs.len() != tensor.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: tensor.dim(),
                got: rhs.len(),
            });
        }
        let partition = partition_indices(&rhs)?;
        if !tensor.is_z_tensor() {
            return Err(ModelError::NotZTensor);
        }
        let slack = 1e-14 * (1.0 + max_norm(&rhs));
        Ok(Self {
            tensor,
            rhs,
            omega: 1.0,
            partition,
            certificate: None,
            slack,
        })
    }

    /// Divides `A` and `b` by `omega`, the largest absolute entry among both.
    ///
    /// Scaling an already scaled problem gives `omega = 1` and leaves it bit-identical.
    pub fn scaled(tensor: Tensor, rhs: Vec<f64>) -> Result<Self, ModelError> {
        let omega = tensor.max_abs().max(max_norm(&rhs));
        if !(omega > 0.0) {
            // validate shapes first so a mismatch is reported as such
            Self::new(tensor, rhs)?;
            return Err(ModelError::ZeroProblem);
        }
        let scaled_rhs = rhs.iter().map(|v| v / omega).collect();
        let mut p = Self::new(tensor.divided(omega), scaled_rhs)?;
        p.omega = omega;
        Ok(p)
    }

    pub fn tensor(&self) -> &Tensor {
        &self.tensor
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn order(&self) -> usize {
        self.tensor.order()
    }

    pub fn dim(&self) -> usize {
        self.tensor.dim()
    }

    pub fn partition(&self) -> &IndexPartition {
        &self.partition
    }

    /// Additive slack used by feasibility comparisons.
    pub fn slack(&self) -> f64 {
        self.slack
    }

    pub fn certificate(&self) -> Option<&[f64]> {
        self.certificate.as_deref()
    }

    /// Stores `u > 0` after checking `A u^(m-1) > 0`.
    pub fn certify(&mut self, u: Vec<f64>) -> Result<(), ModelError> {
        check_positive(&u)?;
        let au = self.tensor.apply(&u)?;
        if !self.tensor.is_certificate(&u) {
            let (index, &value) = au
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("dimension is at least 1");
            return Err(ModelError::BadCertificate { index, value });
        }
        self.certificate = Some(u);
        Ok(())
    }

    fn exponent(&self) -> f64 {
        1.0 / (self.order() - 1) as f64
    }

    /// `x = y^[1/(m-1)]` for positive `y`.
    pub fn x_of_y(&self, y: &[f64]) -> Result<Vec<f64>, ModelError> {
        check_positive(y)?;
        if y.len() != self.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        Ok(hadamard_power(y, self.exponent())?)
    }

    /// `y = x^[m-1]`.
    pub fn y_of_x(&self, x: &[f64]) -> Vec<f64> {
        let deg = (self.order() - 1) as f64;
        x.iter().map(|&v| pow(v, deg)).collect()
    }

    /// `f(y) = A (y^[1/(m-1)])^(m-1) - b`.
    pub fn f_eval(&self, y: &[f64]) -> Result<Vec<f64>, ModelError> {
        let x = self.x_of_y(y)?;
        let mut v = self.tensor.apply(&x)?;
        v.iter_mut().zip(&self.rhs).for_each(|(vi, bi)| *vi -= bi);
        Ok(v)
    }

    /// `f'(y) = J(x) diag(y^[1/(m-1) - 1] / (m-1))` with `J` the Jacobian of `x -> A x^(m-1)`.
    pub fn fprime_eval(&self, y: &[f64]) -> Result<Matrix, ModelError> {
        let x = self.x_of_y(y)?;
        let jac = self.tensor.jacobian(&x)?;
        let k = self.exponent();
        let chain: Vec<f64> = y.iter().zip(&x).map(|(&yi, &xi)| k * xi / yi).collect();
        Ok(jac
            .scale_columns(&chain)
            .expect("chain factors have length n"))
    }

    /// Residual norm for the configured stop rule's comparison.
    pub fn stop_threshold(&self, cfg: &SolverConfig) -> f64 {
        match cfg.stop {
            StopRule::Absolute => cfg.eta,
            StopRule::Relative => cfg.eta * euclidean_norm(&self.rhs),
        }
    }

    /// `A x^(m-1) >= eps * b` given a precomputed `f(y)`.
    pub fn f_in_eps(&self, f: &[f64], eps: f64) -> bool {
        self.f_in_eps_on(f, eps, None)
    }

    fn f_in_eps_on(&self, f: &[f64], eps: f64, only: Option<&[usize]>) -> bool {
        let ok = |i: usize| f[i] + self.rhs[i] >= eps * self.rhs[i] - self.slack;
        match only {
            Some(set) => set.iter().all(|&i| ok(i)),
            None => (0..f.len()).all(ok),
        }
    }

    /// Membership in `F_eps = { y > 0 : A x^(m-1) >= eps b }`.
    pub fn in_f_eps(&self, y: &[f64], eps: f64) -> Result<bool, ModelError> {
        let f = self.f_eval(y)?;
        Ok(self.f_in_eps(&f, eps))
    }

    /// `eps2 * f'(y)_{I0,I+} f'(y)_{I+,I+}^{-1} b_{I+}`, indexed by `I0`.
    pub fn extended_threshold(&self, y: &[f64], eps2: f64) -> Result<Vec<f64>, ModelError> {
        let fp = self.fprime_eval(y)?;
        self.threshold_from_jacobian(&fp, eps2)
    }

    pub fn threshold_from_jacobian(&self, fp: &Matrix, eps2: f64) -> Result<Vec<f64>, ModelError> {
        let IndexPartition { plus, zero } = &self.partition;
        if zero.is_empty() {
            return Ok(Vec::new());
        }
        if plus.is_empty() {
            return Ok(vec![0.0; zero.len()]);
        }
        let block_pp = fp.submatrix(plus, plus).expect("partition within range");
        let block_0p = fp.submatrix(zero, plus).expect("partition within range");
        let b_plus: Vec<f64> = plus.iter().map(|&i| self.rhs[i]).collect();
        let w = lu_solve(&block_pp, &b_plus).map_err(ModelError::SingularBlock)?;
        let mut r = block_0p.mul_vec(&w).expect("block width is |I+|");
        r.iter_mut().for_each(|v| *v *= eps2);
        Ok(r)
    }

    /// Membership in the extended feasibility set given `f(y)` and `f'(y)`.
    ///
    /// A singular `I+` block makes the point infeasible.
    pub fn f_in_bar(&self, f: &[f64], fp: &Matrix, eps: f64, eps2: f64) -> bool {
        if !self.f_in_eps_on(f, eps, Some(&self.partition.plus)) {
            return false;
        }
        let Ok(threshold) = self.threshold_from_jacobian(fp, eps2) else {
            return false;
        };
        self.partition
            .zero
            .iter()
            .zip(&threshold)
            .all(|(&i, &r)| f[i] + self.rhs[i] >= r - self.slack)
    }

    /// Membership in the extended feasibility set at `y`.
    pub fn in_f_bar(&self, y: &[f64], eps: f64, eps2: f64) -> Result<bool, ModelError> {
        let f = self.f_eval(y)?;
        if !self.partition.has_zeros() {
            return Ok(self.f_in_eps(&f, eps));
        }
        let fp = self.fprime_eval(y)?;
        Ok(self.f_in_bar(&f, &fp, eps, eps2))
    }

    /// Per-row structural check for rows with `b_i = 0`.
    pub fn check_assumption_b(&self) -> AssumptionReport {
        let n = self.dim();
        let mut in_plus = vec![false; n];
        self.partition.plus.iter().for_each(|&i| in_plus[i] = true);
        let mut witnessed = vec![false; n];
        let mut nz = self.tensor.nonzeros();
        while let Some((idx, _)) = nz.next() {
            if !in_plus[idx[0]] && idx[1..].iter().all(|&j| in_plus[j]) {
                witnessed[idx[0]] = true;
            }
        }
        AssumptionReport {
            rows: self
                .partition
                .zero
                .iter()
                .map(|&i| (i, witnessed[i]))
                .collect(),
        }
    }
}

pub(crate) fn check_positive(y: &[f64]) -> Result<(), ModelError> {
    match y.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        Some((index, &value)) => Err(ModelError::NonPositive { index, value }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::is_nonsingular_m_matrix;
    use crate::tensor::DEFAULT_DENSE_CAP;

    fn four_ones() -> Tensor {
        let ones = Tensor::ones(3, 2, DEFAULT_DENSE_CAP).unwrap();
        Tensor::scaled_identity_minus(4.04, &ones)
    }

    #[test]
    fn scaling_uses_largest_entry() {
        let a = Tensor::identity(3, 2).unwrap().scaled(5.0);
        let p = MTeqProblem::scaled(a, vec![2.0, 1.0]).unwrap();
        assert_eq!(p.omega(), 5.0);
        assert_eq!(p.rhs(), &[0.4, 0.2]);
        let q = MTeqProblem::scaled(Tensor::identity(3, 2).unwrap(), vec![0.5, 1.0]).unwrap();
        assert_eq!(q.omega(), 1.0);
        assert_eq!(q.rhs(), &[0.5, 1.0]);
    }

    #[test]
    fn scaling_rejects_all_zero() {
        let z = Tensor::zeros_dense(3, 2, 100).unwrap();
        assert_eq!(
            MTeqProblem::scaled(z, vec![0.0, 0.0]),
            Err(ModelError::ZeroProblem)
        );
    }

    #[test]
    fn construction_validates() {
        let ones = Tensor::ones(3, 2, 100).unwrap();
        assert_eq!(
            MTeqProblem::new(ones, vec![1.0, 1.0]),
            Err(ModelError::NotZTensor)
        );
        let id = Tensor::identity(3, 2).unwrap();
        assert!(matches!(
            MTeqProblem::new(id.clone(), vec![1.0, -1.0]),
            Err(ModelError::NegativeRhs { index: 1, .. })
        ));
        assert!(matches!(
            MTeqProblem::new(id, vec![1.0]),
            Err(ModelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn f_at_identity_solution_vanishes() {
        let p = MTeqProblem::new(Tensor::identity(3, 2).unwrap(), vec![8.0, 27.0]).unwrap();
        assert!(p
            .f_eval(&[8.0, 27.0])
            .unwrap()
            .iter()
            .all(|v| v.abs() < 1e-13));
        assert_eq!(p.f_eval(&[4.0, 9.0]).unwrap(), vec![-4.0, -18.0]);
        let p0 = MTeqProblem::new(Tensor::identity(3, 2).unwrap(), vec![0.0, 0.0]).unwrap();
        assert_eq!(p0.f_eval(&[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        assert!(matches!(
            p.f_eval(&[1.0, 0.0]),
            Err(ModelError::NonPositive { index: 1, .. })
        ));
    }

    #[test]
    fn f_at_symmetric_solution() {
        let p = MTeqProblem::new(four_ones(), vec![1.0, 1.0]).unwrap();
        let f = p.f_eval(&[25.0, 25.0]).unwrap();
        assert!(f.iter().all(|v| v.abs() < 1e-12), "{f:?}");
    }

    #[test]
    fn fprime_of_identity_is_identity() {
        for m in 2..=5 {
            let p = MTeqProblem::new(Tensor::identity(m, 2).unwrap(), vec![1.0, 1.0]).unwrap();
            let j = p.fprime_eval(&[4.0, 9.0]).unwrap();
            for (got, want) in j.as_slice().iter().zip([1.0, 0.0, 0.0, 1.0]) {
                assert!((got - want).abs() < 1e-14, "m={m}: {j:?}");
            }
        }
    }

    #[test]
    fn f_eps_membership() {
        let id = Tensor::identity(3, 2).unwrap();
        let p = MTeqProblem::new(id.clone(), vec![1.0, 1.0]).unwrap();
        assert!(p.in_f_eps(&[1.0, 1.0], 1.0).unwrap());
        // y = 0.25 e gives A x^2 = 0.25 e < 0.5 e
        assert!(!p.in_f_eps(&[0.25, 0.25], 0.5).unwrap());
        let p0 = MTeqProblem::new(id, vec![0.0, 0.0]).unwrap();
        assert!(p0.in_f_eps(&[1e-6, 3.0], 0.9).unwrap());
    }

    #[test]
    fn partition_examples() {
        let p = partition_indices(&[1.0, 0.0]).unwrap();
        assert_eq!((p.plus, p.zero), (vec![0], vec![1]));
        assert!(partition_indices(&[1.0, 2.0]).unwrap().zero.is_empty());
        assert!(partition_indices(&[0.0, 0.0]).unwrap().plus.is_empty());
        assert!(partition_indices(&[1.0, -0.5]).is_err());
        assert!(partition_indices(&[f64::NAN]).is_err());
    }

    #[test]
    fn threshold_is_negative_for_coupled_rows() {
        let p = MTeqProblem::new(four_ones(), vec![1.0, 0.0]).unwrap();
        // f'(e) = J(e)/2; J(e)_{ij} = 2*4.04*[i=j] - 2*(x1+x2) = [[4.08, -4], [-4, 4.08]]
        let fp = p.fprime_eval(&[1.0, 1.0]).unwrap();
        let expected = [2.04, -2.0, -2.0, 2.04];
        for (got, want) in fp.as_slice().iter().zip(expected) {
            assert!((got - want).abs() < 1e-13);
        }
        // r = eps2 * (-2) * (1 / 2.04)
        let r = p.extended_threshold(&[1.0, 1.0], 0.05).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.05 * -2.0 / 2.04).abs() < 1e-15);
        assert!(r[0] < 0.0);
    }

    #[test]
    fn threshold_vanishes_for_decoupled_rows() {
        let p = MTeqProblem::new(Tensor::identity(3, 2).unwrap(), vec![1.0, 0.0]).unwrap();
        assert_eq!(p.extended_threshold(&[2.0, 3.0], 0.05).unwrap(), vec![0.0]);
        let q = MTeqProblem::new(Tensor::identity(3, 2).unwrap(), vec![1.0, 1.0]).unwrap();
        assert!(q.extended_threshold(&[2.0, 3.0], 0.05).unwrap().is_empty());
    }

    #[test]
    fn f_bar_membership() {
        let p = MTeqProblem::new(four_ones(), vec![1.0, 0.0]).unwrap();
        // A e^2 = 0.04 e > 0, so the I0 row passes; the I+ row needs 0.04 >= 0.1
        assert!(!p.in_f_bar(&[1.0, 1.0], 0.1, 0.05).unwrap());
        assert!(p.in_f_bar(&[9.0, 9.0], 0.1, 0.05).unwrap());
        // I0 empty reduces to F_eps
        let q = MTeqProblem::new(four_ones(), vec![1.0, 1.0]).unwrap();
        for y in [[1.0, 1.0], [9.0, 9.0], [30.0, 2.0]] {
            assert_eq!(
                q.in_f_bar(&y, 0.1, 0.05).unwrap(),
                q.in_f_eps(&y, 0.1).unwrap()
            );
        }
        assert!(is_nonsingular_m_matrix(
            &p.fprime_eval(&[9.0, 9.0]).unwrap()
        ));
    }

    #[test]
    fn assumption_check() {
        let p = MTeqProblem::new(four_ones(), vec![1.0, 0.0]).unwrap();
        let rep = p.check_assumption_b();
        assert_eq!(rep.rows, vec![(1, true)]);
        assert!(rep.passed());
        let q = MTeqProblem::new(Tensor::identity(3, 2).unwrap(), vec![1.0, 0.0]).unwrap();
        assert!(!q.check_assumption_b().passed());
        assert_eq!(
            q.check_assumption_b().failing_rows().collect::<Vec<_>>(),
            vec![1]
        );
        let r = MTeqProblem::new(Tensor::identity(3, 2).unwrap(), vec![1.0, 1.0]).unwrap();
        assert!(r.check_assumption_b().passed());
    }

    #[test]
    fn certificate_is_checked() {
        let mut p = MTeqProblem::new(four_ones(), vec![1.0, 1.0]).unwrap();
        assert!(p.certify(vec![1.0, 1.0]).is_ok());
        assert_eq!(p.certificate(), Some(&[1.0, 1.0][..]));
        let ones = Tensor::ones(3, 2, 100).unwrap();
        let mut q =
            MTeqProblem::new(Tensor::scaled_identity_minus(1.0, &ones), vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            q.certify(vec![1.0, 1.0]),
            Err(ModelError::BadCertificate { .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            eps2: 0.2,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            sigma: 0.5,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
