//! Deterministic generators for the five benchmark problems.
//!
//! Randomness comes from SplitMix64 seeded with the given `u64` (the seed is
//! the initial state). A uniform draw in the open interval `(0, 1)` is
//! `((next_u64() >> 11) + 0.5) * 2^-53`. Random tensors draw their entries
//! first, in lexicographic index order, then the right-hand side draws its `n`
//! entries from the same stream.

use alloc::vec;
use alloc::vec::Vec;

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use thiserror::Error;

use crate::model::{MTeqProblem, ModelError};
use crate::tensor::{check_dense_cap, next_index, Storage, Tensor, TensorError};

/// Gravitational constant used by problem 3.
pub const GRAVITY: f64 = 6.67e-11;
/// Mass of the earth used by problem 3.
pub const EARTH_MASS: f64 = 5.98e24;
pub const DEFAULT_C0: f64 = 1e7;
pub const DEFAULT_C1: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("problem {problem} needs {what}")]
    BadParameter { problem: u8, what: &'static str },
    #[error("cannot zero entries: {0}")]
    BadZeroing(&'static str),
}

/// Seeded stream of uniform `(0, 1)` draws.
#[derive(Debug, Clone)]
pub struct UniformStream(SplitMix64);

impl UniformStream {
    pub fn new(seed: u64) -> Self {
        Self(SplitMix64::seed_from_u64(seed))
    }

    pub fn next_open01(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..len` (`len > 0`).
    pub fn next_index(&mut self, len: usize) -> usize {
        ((self.next_open01() * len as f64) as usize).min(len - 1)
    }

    fn fill(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.next_open01()).collect()
    }
}

/// Which generator produced a problem, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemKind {
    /// Symmetric random `B`, `s = 1.01 max (B e^(m-1))_i`.
    Symmetric,
    /// `b_{i1..im} = |sin(i1 + .. + im)|` (1-based), `s = n^(m-1)`.
    Sine,
    /// Discretized `x'' = -GM / x^2` with `x(0) = c0`, `x(1) = c1`.
    Gravity { c0: f64, c1: f64 },
    /// Nonsymmetric random `B`, `s = 1.01 max (B e^(m-1))_i`.
    Nonsymmetric,
    /// Strictly lower triangular random `B`, `s = 0.5 max (B e^(m-1))_i`.
    LowerTriangular,
}

impl ProblemKind {
    pub fn id(&self) -> u8 {
        match self {
            ProblemKind::Symmetric => 1,
            ProblemKind::Sine => 2,
            ProblemKind::Gravity { .. } => 3,
            ProblemKind::Nonsymmetric => 4,
            ProblemKind::LowerTriangular => 5,
        }
    }
}

/// Builds problem `kind` of order `m`, dimension `n`; problem 3 ignores `m` (always 4).
pub fn generate(
    kind: ProblemKind,
    m: usize,
    n: usize,
    seed: u64,
    dense_cap: usize,
) -> Result<MTeqProblem, ProblemError> {
    match kind {
        ProblemKind::Symmetric => gen_problem1(m, n, seed, dense_cap),
        ProblemKind::Sine => gen_problem2(m, n, seed, dense_cap),
        ProblemKind::Gravity { c0, c1 } => gen_problem3(n, c0, c1),
        ProblemKind::Nonsymmetric => gen_problem4(m, n, seed, dense_cap),
        ProblemKind::LowerTriangular => gen_problem5(m, n, seed, dense_cap),
    }
}

fn row_sum_max(b: &Tensor) -> f64 {
    let e = vec![1.0; b.dim()];
    b.apply(&e)
        .expect("e has the tensor dimension")
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

fn finish(b_tensor: Tensor, s: f64, rng: &mut UniformStream) -> Result<MTeqProblem, ProblemError> {
    let a = Tensor::scaled_identity_minus(s, &b_tensor);
    let rhs = rng.fill(a.dim());
    let mut p = MTeqProblem::scaled(a, rhs)?;
    // the all-ones certificate is recorded whenever it holds
    if p.tensor().is_diag_dominant() {
        p.certify(vec![1.0; p.dim()])?;
    }
    Ok(p)
}

/// Problem 1: `A = s I - B` with `B` the full symmetrization of a uniform tensor.
pub fn gen_problem1(
    m: usize,
    n: usize,
    seed: u64,
    cap: usize,
) -> Result<MTeqProblem, ProblemError> {
    let len = check_dense_cap(m, n, cap)?;
    let mut rng = UniformStream::new(seed);
    let raw = Tensor::dense(m, n, rng.fill(len))?;
    let b = raw.symmetrize();
    let s = 1.01 * row_sum_max(&b);
    finish(b, s, &mut rng)
}

/// Problem 2: `A = n^(m-1) I - B` with `B` of `|sin(i1 + .. + im)|`; `seed` drives only `b`.
pub fn gen_problem2(
    m: usize,
    n: usize,
    seed: u64,
    cap: usize,
) -> Result<MTeqProblem, ProblemError> {
    let len = check_dense_cap(m, n, cap)?;
    let mut values = Vec::with_capacity(len);
    let mut idx = vec![0usize; m];
    loop {
        let total: usize = idx.iter().map(|i| i + 1).sum();
        values.push(libm::fabs(libm::sin(total as f64)));
        if !next_index(&mut idx, n) {
            break;
        }
    }
    let b = Tensor::dense(m, n, values)?.with_semi_symmetric_flag(true);
    let s = libm::pow(n as f64, (m - 1) as f64);
    finish(b, s, &mut UniformStream::new(seed))
}

/// Problem 3: order-4 COO stencil of the gravity boundary value problem (unscaled).
pub fn gen_problem3(n: usize, c0: f64, c1: f64) -> Result<MTeqProblem, ProblemError> {
    if n < 3 {
        return Err(ProblemError::BadParameter {
            problem: 3,
            what: "n >= 3",
        });
    }
    if !(c0 > 0.0 && c1 > 0.0) {
        return Err(ProblemError::BadParameter {
            problem: 3,
            what: "positive boundary values c0, c1",
        });
    }
    let third = -1.0 / 3.0;
    let mut entries = vec![(vec![0, 0, 0, 0], 1.0), (vec![n - 1; 4], 1.0)];
    for i in 1..n - 1 {
        entries.push((vec![i; 4], 2.0));
        for j in [i - 1, i + 1] {
            entries.push((vec![i, j, i, i], third));
            entries.push((vec![i, i, j, i], third));
            entries.push((vec![i, i, i, j], third));
        }
    }
    let a = Tensor::coo_from_entries(4, n, entries)?.with_semi_symmetric_flag(true);
    let h2 = ((n - 1) * (n - 1)) as f64;
    let mut rhs = vec![GRAVITY * EARTH_MASS / h2; n];
    rhs[0] = c0 * c0 * c0;
    rhs[n - 1] = c1 * c1 * c1;
    Ok(MTeqProblem::new(a, rhs)?)
}

/// Problem 4: `A = s I - B` with `B` an unsymmetrized uniform tensor.
pub fn gen_problem4(
    m: usize,
    n: usize,
    seed: u64,
    cap: usize,
) -> Result<MTeqProblem, ProblemError> {
    let len = check_dense_cap(m, n, cap)?;
    let mut rng = UniformStream::new(seed);
    let b = Tensor::dense(m, n, rng.fill(len))?;
    let s = 1.01 * row_sum_max(&b);
    finish(b, s, &mut rng)
}

/// Problem 5: `A = s I - B`, `B` nonzero only where every trailing index is below the first.
pub fn gen_problem5(
    m: usize,
    n: usize,
    seed: u64,
    cap: usize,
) -> Result<MTeqProblem, ProblemError> {
    let len = check_dense_cap(m, n, cap)?;
    let mut rng = UniformStream::new(seed);
    let mut values = vec![0.0; len];
    let mut idx = vec![0usize; m];
    for v in values.iter_mut() {
        if idx[1..].iter().all(|&j| j < idx[0]) {
            *v = rng.next_open01();
        }
        next_index(&mut idx, n);
    }
    let b = Tensor::dense(m, n, values)?;
    let s = 0.5 * row_sum_max(&b);
    if !(s > 0.0) {
        return Err(ProblemError::BadParameter {
            problem: 5,
            what: "n >= 2 so that the triangle is nonempty",
        });
    }
    finish(b, s, &mut rng)
}

/// Zeroes a random subset of `b` outside `keep`.
///
/// `round(frac * n)` entries are zeroed, clamped so that at least one entry is
/// zeroed and at least one stays positive. Candidates are drawn by a partial
/// Fisher-Yates shuffle of the non-kept indices in increasing order.
pub fn zero_out_rhs(
    b: &[f64],
    seed: u64,
    keep: &[usize],
    frac: f64,
) -> Result<Vec<f64>, ProblemError> {
    let n = b.len();
    if !b.iter().all(|&v| v > 0.0) {
        return Err(ProblemError::BadZeroing("b must be strictly positive"));
    }
    if n < 2 {
        return Err(ProblemError::BadZeroing("need at least two entries"));
    }
    if !(0.0..=1.0).contains(&frac) {
        return Err(ProblemError::BadZeroing("fraction must lie in [0, 1]"));
    }
    let mut candidates: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    if candidates.is_empty() {
        return Err(ProblemError::BadZeroing("every index is kept"));
    }
    let count = (libm::round(frac * n as f64) as usize)
        .clamp(1, n - 1)
        .min(candidates.len());
    let mut rng = UniformStream::new(seed);
    for k in 0..count {
        let j = k + rng.next_index(candidates.len() - k);
        candidates.swap(k, j);
    }
    let mut out = b.to_vec();
    for &i in &candidates[..count] {
        out[i] = 0.0;
    }
    Ok(out)
}

/// Replaces the right-hand side of a problem, keeping its (already scaled) tensor.
pub fn with_rhs(p: &MTeqProblem, rhs: Vec<f64>) -> Result<MTeqProblem, ProblemError> {
    let mut q = MTeqProblem::new(p.tensor().clone(), rhs)?;
    if let Some(u) = p.certificate() {
        q.certify(u.to_vec())?;
    }
    Ok(q)
}

/// Dense entries of a generated tensor, if dense.
pub fn dense_values(t: &Tensor) -> Option<&[f64]> {
    match t.storage() {
        Storage::Dense(d) => Some(d),
        Storage::Coo { .. } => None,
    }
}
