//! Dense row-major matrices, LU with partial pivoting, and M-matrix tests.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use thiserror::Error;

/// Relative pivot threshold below which a matrix is treated as singular.
pub const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} out of range for size {size}")]
    OutOfRange { index: usize, size: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Scales column `j` by `d[j]`, i.e. returns `self * diag(d)`.
    pub fn scale_columns(mut self, d: &[f64]) -> Result<Self, LinalgError> {
        if d.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: d.len(),
            });
        }
        for row in self.data.chunks_exact_mut(self.cols.max(1)) {
            row.iter_mut().zip(d).for_each(|(v, s)| *v *= s);
        }
        Ok(self)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// The block selected by `rows` x `cols`, in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<Matrix, LinalgError> {
        if let Some(&index) = rows.iter().find(|&&r| r >= self.rows) {
            return Err(LinalgError::OutOfRange {
                index,
                size: self.rows,
            });
        }
        if let Some(&index) = cols.iter().find(|&&c| c >= self.cols) {
            return Err(LinalgError::OutOfRange {
                index,
                size: self.cols,
            });
        }
        let data = rows
            .iter()
            .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
            .map(|(r, c)| self[(r, c)])
            .collect();
        Ok(Matrix {
            rows: rows.len(),
            cols: cols.len(),
            data,
        })
    }

    /// Off-diagonal entries are `<= tol`.
    pub fn is_z_matrix(&self, tol: f64) -> bool {
        (0..self.rows).all(|i| {
            self.row(i)
                .iter()
                .enumerate()
                .all(|(j, &v)| i == j || v <= tol)
        })
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// LU factors `P M = L U` stored in place.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(m: &Matrix) -> Result<Lu, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::NotSquare {
                rows: m.rows,
                cols: m.cols,
            });
        }
        let n = m.rows;
        let tol = PIVOT_TOL * m.norm_inf();
        let mut lu = m.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|r| (r, lu[r * n + k]))
                    .fold((k, 0.0f64), |best, (r, v)| {
                        if v.abs() > best.1.abs() {
                            (r, v)
                        } else {
                            best
                        }
                    });
            if !(pivot.abs() > tol) {
                return Err(LinalgError::Singular { column: k, pivot });
            }
            if p != k {
                for c in 0..n {
                    lu.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let (upper, lower) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n..];
            for row in lower.chunks_exact_mut(n) {
                let factor = row[k] / pivot;
                row[k] = factor;
                if factor != 0.0 {
                    for c in k + 1..n {
                        row[c] -= factor * pivot_row[c];
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.n;
        if rhs.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        let mut z: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * z[j]).sum();
            z[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * z[j]).sum();
            z[i] = (z[i] - s) / self.lu[i * n + i];
        }
        Ok(z)
    }
}

/// Solves `M z = rhs` by LU with partial pivoting.
pub fn lu_solve(m: &Matrix, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if rhs.len() != m.rows {
        return Err(LinalgError::DimensionMismatch {
            expected: m.rows,
            got: rhs.len(),
        });
    }
    Lu::factor(m)?.solve(rhs)
}

/// Positive-vector certificate for nonsingular M-matrices.
///
/// A Z-matrix `M` is a nonsingular M-matrix iff some `z > 0` has `M z > 0`.
/// The candidate is `z = M^{-1} e`, accepted when it is (numerically)
/// nonnegative and `M z > 0` holds when recomputed.
pub fn is_nonsingular_m_matrix(m: &Matrix) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.rows;
    if n == 0 {
        return true;
    }
    if !m.is_z_matrix(PIVOT_TOL * m.norm_inf()) {
        return false;
    }
    let Ok(z) = lu_solve(m, &vec![1.0; n]) else {
        return false;
    };
    if !z.iter().all(|&zi| zi > -1e-12) {
        return false;
    }
    m.mul_vec(&z)
        .map(|mz| mz.iter().all(|&v| v > 0.0))
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> Matrix {
        Matrix::from_row_major(2, 2, vec![a, b, c, d]).unwrap()
    }

    #[test]
    fn diagonal_solve() {
        let z = lu_solve(&Matrix::from_diagonal(&[2.0, 3.0]), &[4.0, 9.0]).unwrap();
        assert_eq!(z, vec![2.0, 3.0]);
    }

    #[test]
    fn tridiagonal_solve() {
        let z = lu_solve(&m2(2.0, -1.0, -1.0, 2.0), &[1.0, 1.0]).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-15 && (z[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let z = lu_solve(&m2(0.0, 1.0, 1.0, 0.0), &[3.0, 5.0]).unwrap();
        assert_eq!(z, vec![5.0, 3.0]);
    }

    #[test]
    fn zero_matrix_is_singular() {
        assert!(matches!(
            lu_solve(&Matrix::zeros(2, 2), &[1.0, 1.0]),
            Err(LinalgError::Singular { column: 0, .. })
        ));
        assert!(matches!(
            lu_solve(&m2(1.0, 2.0, 2.0, 4.0), &[1.0, 1.0]),
            Err(LinalgError::Singular { column: 1, .. })
        ));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            lu_solve(&Matrix::zeros(2, 3), &[1.0, 1.0]),
            Err(LinalgError::NotSquare { .. })
        ));
        assert!(lu_solve(&Matrix::identity(2), &[1.0]).is_err());
    }

    #[test]
    fn submatrix_blocks() {
        let m = m2(1.0, 2.0, 3.0, 4.0);
        assert_eq!(m.submatrix(&[0, 1], &[0, 1]).unwrap(), m);
        assert_eq!(m.submatrix(&[0], &[1]).unwrap().as_slice(), &[2.0]);
        let empty = m.submatrix(&[], &[0, 1]).unwrap();
        assert_eq!((empty.rows(), empty.cols()), (0, 2));
        assert!(matches!(
            m.submatrix(&[2], &[0]),
            Err(LinalgError::OutOfRange { index: 2, size: 2 })
        ));
    }

    #[test]
    fn m_matrix_certificate() {
        assert!(is_nonsingular_m_matrix(&m2(2.0, -1.0, -1.0, 2.0)));
        assert!(!is_nonsingular_m_matrix(&m2(1.0, -2.0, -2.0, 1.0)));
        assert!(is_nonsingular_m_matrix(&Matrix::identity(3)));
        // not a Z-matrix
        assert!(!is_nonsingular_m_matrix(&m2(2.0, 1.0, 1.0, 2.0)));
        assert!(!is_nonsingular_m_matrix(&Matrix::zeros(2, 2)));
    }

    #[test]
    fn scale_columns_is_right_diagonal_product() {
        let m = m2(1.0, 2.0, 3.0, 4.0)
            .scale_columns(&[10.0, 100.0])
            .unwrap();
        assert_eq!(m.as_slice(), &[10.0, 200.0, 30.0, 400.0]);
    }
}
