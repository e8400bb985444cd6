//! Order-m, dimension-n real tensors with dense or coordinate storage.
//!
//! Dense storage keeps all `n^m` entries in lexicographic index order with the
//! first index varying slowest. Coordinate (COO) storage keeps a flat index
//! buffer of `nnz * m` entries whose tuples are strictly increasing in
//! lexicographic order.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::linalg::Matrix;

/// Default cap on the number of entries a dense tensor may hold.
pub const DEFAULT_DENSE_CAP: usize = 200_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("tensor order must be at least 2, got {0}")]
    BadOrder(usize),
    #[error("tensor dimension must be at least 1")]
    BadDim,
    #[error("dense storage of a ({order}, {dim}) tensor needs {expected} values, got {got}")]
    DenseLength {
        order: usize,
        dim: usize,
        expected: usize,
        got: usize,
    },
    #[error("a dense ({order}, {dim}) tensor exceeds the cap of {cap} entries")]
    DenseCap {
        order: usize,
        dim: usize,
        cap: usize,
    },
    #[error("coordinate entry {entry}: index {index} is outside the range of dimension {dim}")]
    IndexOutOfRange {
        entry: usize,
        index: usize,
        dim: usize,
    },
    #[error("coordinate entry {0} is not strictly after its predecessor")]
    Unsorted(usize),
    #[error("coordinate buffers disagree: {indices} indices for {values} values of order {order}")]
    CooShape {
        indices: usize,
        values: usize,
        order: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative base {base} at component {index} with fractional exponent {alpha}")]
    NegativeBase { index: usize, base: f64, alpha: f64 },
    #[error("tensor entry {value} is negative")]
    Negative { value: f64 },
}

/// Backing storage of a [`Tensor`].
#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Dense(Vec<f64>),
    /// `indices` holds `values.len() * order` 0-based indices, one tuple per value.
    Coo {
        indices: Vec<usize>,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    order: usize,
    dim: usize,
    storage: Storage,
    semi_symmetric: bool,
}

/// Number of dense entries `dim^order`, or `None` on overflow.
pub fn dense_len(order: usize, dim: usize) -> Option<usize> {
    u32::try_from(order).ok().and_then(|m| dim.checked_pow(m))
}

fn check_shape(order: usize, dim: usize) -> Result<(), TensorError> {
    if order < 2 {
        return Err(TensorError::BadOrder(order));
    }
    if dim == 0 {
        return Err(TensorError::BadDim);
    }
    Ok(())
}

/// Fails with [`TensorError::DenseCap`] unless a dense tensor fits under `cap`.
pub fn check_dense_cap(order: usize, dim: usize, cap: usize) -> Result<usize, TensorError> {
    check_shape(order, dim)?;
    match dense_len(order, dim) {
        Some(len) if len <= cap => Ok(len),
        _ => Err(TensorError::DenseCap { order, dim, cap }),
    }
}

/// Advances a multi-index in lexicographic order; returns false after the last one.
pub(crate) fn next_index(idx: &mut [usize], dim: usize) -> bool {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < dim {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Rearranges `xs` into the next lexicographically greater permutation.
fn next_permutation(xs: &mut [usize]) -> bool {
    if xs.len() < 2 {
        return false;
    }
    let mut i = xs.len() - 1;
    while i > 0 && xs[i - 1] >= xs[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = xs.len() - 1;
    while xs[j] <= xs[i - 1] {
        j -= 1;
    }
    xs.swap(i - 1, j);
    xs[i..].reverse();
    true
}

fn flat_index(idx: &[usize], dim: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * dim + i)
}

fn is_diagonal(idx: &[usize]) -> bool {
    idx.iter().all(|&i| i == idx[0])
}

fn is_sorted(xs: &[usize]) -> bool {
    xs.windows(2).all(|w| w[0] <= w[1])
}

impl Tensor {
    /// Dense tensor from `dim^order` values in lexicographic order.
    pub fn dense(order: usize, dim: usize, values: Vec<f64>) -> Result<Self, TensorError> {
        check_shape(order, dim)?;
        let expected = dense_len(order, dim).ok_or(TensorError::DenseCap {
            order,
            dim,
            cap: usize::MAX,
        })?;
        if values.len() != expected {
            return Err(TensorError::DenseLength {
                order,
                dim,
                expected,
                got: values.len(),
            });
        }
        Ok(Self {
            order,
            dim,
            storage: Storage::Dense(values),
            semi_symmetric: false,
        })
    }

    /// All-zero dense tensor, refusing allocations above `cap` entries.
    pub fn zeros_dense(order: usize, dim: usize, cap: usize) -> Result<Self, TensorError> {
        let len = check_dense_cap(order, dim, cap)?;
        Self::dense(order, dim, vec![0.0; len])
    }

    /// COO tensor from a flat, strictly increasing index buffer.
    pub fn coo(
        order: usize,
        dim: usize,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, TensorError> {
        check_shape(order, dim)?;
        if indices.len() != values.len() * order {
            return Err(TensorError::CooShape {
                indices: indices.len(),
                values: values.len(),
                order,
            });
        }
        for (entry, tuple) in indices.chunks_exact(order).enumerate() {
            if let Some(&index) = tuple.iter().find(|&&i| i >= dim) {
                return Err(TensorError::IndexOutOfRange { entry, index, dim });
            }
            if entry > 0 && indices[(entry - 1) * order..entry * order] >= *tuple {
                return Err(TensorError::Unsorted(entry));
            }
        }
        Ok(Self {
            order,
            dim,
            storage: Storage::Coo { indices, values },
            semi_symmetric: false,
        })
    }

    /// COO tensor from arbitrary entries; duplicates are summed and exact zeros dropped.
    pub fn coo_from_entries(
        order: usize,
        dim: usize,
        entries: impl IntoIterator<Item = (Vec<usize>, f64)>,
    ) -> Result<Self, TensorError> {
        check_shape(order, dim)?;
        let mut map: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (entry, (idx, v)) in entries.into_iter().enumerate() {
            if idx.len() != order {
                return Err(TensorError::CooShape {
                    indices: idx.len(),
                    values: 1,
                    order,
                });
            }
            if let Some(&index) = idx.iter().find(|&&i| i >= dim) {
                return Err(TensorError::IndexOutOfRange { entry, index, dim });
            }
            *map.entry(idx).or_insert(0.0) += v;
        }
        let mut indices = Vec::with_capacity(map.len() * order);
        let mut values = Vec::with_capacity(map.len());
        for (idx, v) in map {
            if v != 0.0 {
                indices.extend_from_slice(&idx);
                values.push(v);
            }
        }
        Self::coo(order, dim, indices, values)
    }

    /// The identity tensor: ones on the diagonal `(i, ..., i)`.
    pub fn identity(order: usize, dim: usize) -> Result<Self, TensorError> {
        check_shape(order, dim)?;
        let indices = (0..dim)
            .flat_map(|i| core::iter::repeat_n(i, order))
            .collect();
        Self::coo(order, dim, indices, vec![1.0; dim]).map(|t| t.with_semi_symmetric_flag(true))
    }

    /// The dense all-ones tensor.
    pub fn ones(order: usize, dim: usize, cap: usize) -> Result<Self, TensorError> {
        let len = check_dense_cap(order, dim, cap)?;
        Ok(Self::dense(order, dim, vec![1.0; len])?.with_semi_symmetric_flag(true))
    }

    /// `s * I - other`, keeping the storage kind of `other`.
    pub fn scaled_identity_minus(s: f64, other: &Tensor) -> Tensor {
        let (m, n) = (other.order, other.dim);
        let storage = match &other.storage {
            Storage::Dense(data) => {
                let mut out: Vec<f64> = data.iter().map(|v| -v).collect();
                let stride = diagonal_stride(m, n);
                for i in 0..n {
                    out[i * stride] += s;
                }
                Storage::Dense(out)
            }
            Storage::Coo { .. } => {
                let entries = other
                    .nonzeros()
                    .map(|idx, v| (idx.to_vec(), -v))
                    .chain((0..n).map(|i| (vec![i; m], s)))
                    .collect::<Vec<_>>();
                Self::coo_from_entries(m, n, entries)
                    .expect("entries come from a valid tensor")
                    .storage
            }
        };
        Tensor {
            order: m,
            dim: n,
            storage,
            semi_symmetric: other.semi_symmetric,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Cached flag set by [`Tensor::semi_symmetrize`]; false does not imply asymmetry.
    pub fn is_semi_symmetric(&self) -> bool {
        self.semi_symmetric
    }

    pub(crate) fn with_semi_symmetric_flag(mut self, flag: bool) -> Self {
        self.semi_symmetric = flag;
        self
    }

    /// Number of stored entries (all `n^m` for dense storage).
    pub fn stored_len(&self) -> usize {
        match &self.storage {
            Storage::Dense(d) => d.len(),
            Storage::Coo { values, .. } => values.len(),
        }
    }

    /// Entry at a 0-based multi-index.
    pub fn get(&self, idx: &[usize]) -> f64 {
        assert_eq!(
            idx.len(),
            self.order,
            "index tuple length must equal the order"
        );
        match &self.storage {
            Storage::Dense(d) => d[flat_index(idx, self.dim)],
            Storage::Coo { indices, values } => {
                let m = self.order;
                let (mut lo, mut hi) = (0, values.len());
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    match indices[mid * m..(mid + 1) * m].cmp(idx) {
                        core::cmp::Ordering::Less => lo = mid + 1,
                        core::cmp::Ordering::Greater => hi = mid,
                        core::cmp::Ordering::Equal => return values[mid],
                    }
                }
                0.0
            }
        }
    }

    /// Iterates over nonzero entries in lexicographic order.
    pub fn nonzeros(&self) -> Nonzeros<'_> {
        Nonzeros {
            tensor: self,
            pos: 0,
            idx: vec![0; self.order],
            started: false,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| match &self.storage {
                Storage::Dense(d) => d[i * diagonal_stride(self.order, self.dim)],
                Storage::Coo { .. } => self.get(&vec![i; self.order]),
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        let values = match &self.storage {
            Storage::Dense(d) => d.as_slice(),
            Storage::Coo { values, .. } => values.as_slice(),
        };
        values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Tensor {
        self.map_values(|v| v * factor)
    }

    /// Divides every entry by `divisor`; `t.divided(t.max_abs())` has largest entry exactly 1.
    pub fn divided(&self, divisor: f64) -> Tensor {
        self.map_values(|v| v / divisor)
    }

    fn map_values(&self, f: impl Fn(f64) -> f64) -> Tensor {
        let storage = match &self.storage {
            Storage::Dense(d) => Storage::Dense(d.iter().map(|&v| f(v)).collect()),
            Storage::Coo { indices, values } => Storage::Coo {
                indices: indices.clone(),
                values: values.iter().map(|&v| f(v)).collect(),
            },
        };
        Tensor {
            order: self.order,
            dim: self.dim,
            storage,
            semi_symmetric: self.semi_symmetric,
        }
    }

    pub fn to_dense(&self, cap: usize) -> Result<Tensor, TensorError> {
        if self.is_dense() {
            return Ok(self.clone());
        }
        let mut out = Tensor::zeros_dense(self.order, self.dim, cap)?;
        if let Storage::Dense(data) = &mut out.storage {
            let mut nz = self.nonzeros();
            while let Some((idx, v)) = nz.next() {
                data[flat_index(idx, self.dim)] = v;
            }
        }
        Ok(out.with_semi_symmetric_flag(self.semi_symmetric))
    }

    /// COO copy holding only the nonzero entries.
    pub fn to_coo(&self) -> Tensor {
        if let Storage::Coo { .. } = self.storage {
            return self.clone();
        }
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut nz = self.nonzeros();
        while let Some((idx, v)) = nz.next() {
            indices.extend_from_slice(idx);
            values.push(v);
        }
        Tensor {
            order: self.order,
            dim: self.dim,
            storage: Storage::Coo { indices, values },
            semi_symmetric: self.semi_symmetric,
        }
    }

    fn check_vec(&self, x: &[f64]) -> Result<(), TensorError> {
        if x.len() != self.dim {
            return Err(TensorError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `A x^(m-1)`: contracts every index but the first with `x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, TensorError> {
        self.check_vec(x)?;
        let n = self.dim;
        match &self.storage {
            Storage::Dense(data) => {
                // Contract the trailing axis m-1 times.
                let mut current = contract_last(data, x);
                for _ in 2..self.order {
                    current = contract_last(&current, x);
                }
                Ok(current)
            }
            Storage::Coo { indices, values } => {
                let mut out = vec![0.0; n];
                for (tuple, &v) in indices.chunks_exact(self.order).zip(values) {
                    let prod: f64 = tuple[1..].iter().map(|&j| x[j]).product();
                    out[tuple[0]] += v * prod;
                }
                Ok(out)
            }
        }
    }

    /// Exact derivative of `x -> A x^(m-1)`.
    ///
    /// Entry `(i, j)` sums, over every trailing position `p` holding `j`, the
    /// entry value times the product of the other trailing coordinates. This
    /// never materializes the semi-symmetrized tensor.
    pub fn jacobian(&self, x: &[f64]) -> Result<Matrix, TensorError> {
        self.check_vec(x)?;
        let n = self.dim;
        let m = self.order;
        let mut jac = Matrix::zeros(n, n);
        // prefix[p] = x[i_1] .. x[i_{p-1}], suffix[p] = x[i_{p+1}] .. x[i_{m-1}]
        let mut prefix = vec![1.0; m];
        let mut suffix = vec![1.0; m + 1];
        let mut nz = self.nonzeros();
        while let Some((idx, v)) = nz.next() {
            let trailing = &idx[1..];
            let t = trailing.len();
            prefix[0] = 1.0;
            for p in 0..t {
                prefix[p + 1] = prefix[p] * x[trailing[p]];
            }
            suffix[t] = 1.0;
            for p in (0..t).rev() {
                suffix[p] = suffix[p + 1] * x[trailing[p]];
            }
            let row = idx[0];
            for p in 0..t {
                jac[(row, trailing[p])] += v * prefix[p] * suffix[p + 1];
            }
        }
        Ok(jac)
    }

    /// Averages each slice over all permutations of the trailing indices.
    pub fn semi_symmetrize(&self) -> Tensor {
        self.orbit_average(1).with_semi_symmetric_flag(true)
    }

    /// Averages every entry over all permutations of the full index tuple.
    pub fn symmetrize(&self) -> Tensor {
        self.orbit_average(0).with_semi_symmetric_flag(true)
    }

    /// Orbit averaging over permutations of positions `from..m`.
    fn orbit_average(&self, from: usize) -> Tensor {
        let (m, n) = (self.order, self.dim);
        match &self.storage {
            Storage::Dense(data) => {
                let mut out = vec![0.0; data.len()];
                let mut idx = vec![0usize; m];
                let mut perm = vec![0usize; m];
                let mut members: Vec<usize> = Vec::new();
                loop {
                    if is_sorted(&idx[from..]) {
                        perm.copy_from_slice(&idx);
                        members.clear();
                        loop {
                            members.push(flat_index(&perm, n));
                            if !next_permutation(&mut perm[from..]) {
                                break;
                            }
                        }
                        let mean =
                            members.iter().map(|&f| data[f]).sum::<f64>() / members.len() as f64;
                        for &f in &members {
                            out[f] = mean;
                        }
                    }
                    if !next_index(&mut idx, n) {
                        break;
                    }
                }
                Tensor {
                    order: m,
                    dim: n,
                    storage: Storage::Dense(out),
                    semi_symmetric: false,
                }
            }
            Storage::Coo { .. } => {
                let mut orbits: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
                let mut nz = self.nonzeros();
                while let Some((idx, v)) = nz.next() {
                    let mut key = idx.to_vec();
                    key[from..].sort_unstable();
                    *orbits.entry(key).or_insert(0.0) += v;
                }
                let mut entries = Vec::new();
                for (key, sum) in orbits {
                    let mut perm = key.clone();
                    let mut members = Vec::new();
                    loop {
                        members.push(perm.clone());
                        if !next_permutation(&mut perm[from..]) {
                            break;
                        }
                    }
                    let mean = sum / members.len() as f64;
                    entries.extend(members.into_iter().map(|p| (p, mean)));
                }
                Tensor::coo_from_entries(m, n, entries).expect("orbits of valid indices")
            }
        }
    }

    /// True iff every off-diagonal entry is `<= 0`.
    pub fn is_z_tensor(&self) -> bool {
        self.nonzeros().all(|idx, v| is_diagonal(idx) || v <= 0.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonzeros().all(|_, v| v >= 0.0)
    }

    /// `A e^(m-1) > 0` componentwise, beyond rounding noise: `e` certifies a strong M-tensor.
    pub fn is_diag_dominant(&self) -> bool {
        self.is_certificate(&vec![1.0; self.dim])
    }

    /// `A u^(m-1) > 0` componentwise, where each row must exceed the rounding
    /// noise `64 eps (|A| u^(m-1))_i`. `false` for a wrong length.
    pub fn is_certificate(&self, u: &[f64]) -> bool {
        let Ok(au) = self.apply(u) else {
            return false;
        };
        let mut noise = vec![0.0; self.dim];
        let mut nz = self.nonzeros();
        while let Some((idx, v)) = nz.next() {
            noise[idx[0]] += idx[1..].iter().fold(v.abs(), |acc, &j| acc * u[j].abs());
        }
        au.iter()
            .zip(&noise)
            .all(|(&s, &a)| s > 64.0 * f64::EPSILON * a)
    }
}

fn diagonal_stride(order: usize, dim: usize) -> usize {
    // Flat offset between (i, .., i) and (i+1, .., i+1): 1 + n + n^2 + .. + n^(m-1).
    (0..order).fold(0, |acc, _| acc * dim + 1)
}

fn contract_last(data: &[f64], x: &[f64]) -> Vec<f64> {
    data.chunks_exact(x.len())
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Iterator over `(index tuple, value)` pairs of nonzero entries.
pub struct Nonzeros<'a> {
    tensor: &'a Tensor,
    pos: usize,
    idx: Vec<usize>,
    started: bool,
}

impl<'a> Nonzeros<'a> {
    /// Lending-style advance; the returned slice is valid until the next call.
    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> Option<(&[usize], f64)> {
        match &self.tensor.storage {
            Storage::Dense(data) => loop {
                if self.started {
                    if !next_index(&mut self.idx, self.tensor.dim) {
                        return None;
                    }
                    self.pos += 1;
                } else {
                    self.started = true;
                }
                let v = data[self.pos];
                if v != 0.0 {
                    return Some((&self.idx, v));
                }
            },
            Storage::Coo { indices, values } => {
                let m = self.tensor.order;
                let k = self.pos;
                if k >= values.len() {
                    return None;
                }
                self.pos += 1;
                Some((&indices[k * m..(k + 1) * m], values[k]))
            }
        }
    }

    pub fn all(mut self, mut pred: impl FnMut(&[usize], f64) -> bool) -> bool {
        while let Some((idx, v)) = self.next() {
            if !pred(idx, v) {
                return false;
            }
        }
        true
    }

    pub fn any(self, mut pred: impl FnMut(&[usize], f64) -> bool) -> bool {
        !self.all(|idx, v| !pred(idx, v))
    }

    pub fn map<T>(mut self, mut f: impl FnMut(&[usize], f64) -> T) -> alloc::vec::IntoIter<T> {
        let mut out = Vec::new();
        while let Some((idx, v)) = self.next() {
            out.push(f(idx, v));
        }
        out.into_iter()
    }
}

/// Componentwise power `(x_1^alpha, .., x_n^alpha)`.
pub fn hadamard_power(x: &[f64], alpha: f64) -> Result<Vec<f64>, TensorError> {
    let integral = libm::trunc(alpha) == alpha;
    x.iter()
        .enumerate()
        .map(|(index, &base)| {
            if base < 0.0 && !integral {
                Err(TensorError::NegativeBase { index, base, alpha })
            } else {
                Ok(pow(base, alpha))
            }
        })
        .collect()
}

pub(crate) fn pow(base: f64, alpha: f64) -> f64 {
    if alpha == 2.0 {
        base * base
    } else if alpha == 1.0 {
        base
    } else {
        libm::pow(base, alpha)
    }
}

/// Collatz-Wielandt bracket `lower <= rho(B) <= upper` from a power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBracket {
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    /// Whether `delta * ones` had to be added because an iterate lost positivity.
    pub perturbed: bool,
}

pub const NQZ_PERTURBATION: f64 = 1e-12;
pub const NQZ_DEFAULT_TOL: f64 = 1e-10;
pub const NQZ_DEFAULT_MAX_ITER: usize = 5000;

/// Power iteration `x+ = (B x^(m-1))^[1/(m-1)]` for a nonnegative tensor.
///
/// Returns the min/max of `(B x^(m-1))_i / x_i^(m-1)` at the final iterate.
/// If an iterate component vanishes, `B` is replaced by `B + 1e-12 * ones`
/// for the rest of the run; the bracket then bounds the perturbed radius,
/// which is still an upper bound for `rho(B)`.
pub fn nqz_spectral_radius(
    b: &Tensor,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralBracket, TensorError> {
    if let Some(value) = b.nonzeros().map(|_, v| v).find(|v| *v < 0.0) {
        return Err(TensorError::Negative { value });
    }
    let zero = SpectralBracket {
        lower: 0.0,
        upper: 0.0,
        iterations: 0,
        perturbed: false,
    };
    if b.stored_len() == 0 || b.max_abs() == 0.0 {
        return Ok(zero);
    }
    let n = b.dim();
    let deg = (b.order() - 1) as f64;
    let mut x = vec![1.0 / n as f64; n];
    let mut perturbed = false;
    let eval = |x: &[f64], perturbed: bool| -> Vec<f64> {
        let mut w = b.apply(x).expect("iterate has the tensor dimension");
        if perturbed {
            let shift = NQZ_PERTURBATION * pow(x.iter().sum::<f64>(), deg);
            w.iter_mut().for_each(|wi| *wi += shift);
        }
        w
    };
    let mut bracket = zero;
    for it in 1..=max_iter.max(1) {
        let mut w = eval(&x, perturbed);
        if !perturbed && w.iter().any(|&wi| wi <= 0.0) {
            perturbed = true;
            w = eval(&x, perturbed);
        }
        let (mut lower, mut upper) = (f64::INFINITY, 0.0f64);
        for (wi, xi) in w.iter().zip(&x) {
            let ratio = wi / pow(*xi, deg);
            lower = lower.min(ratio);
            upper = upper.max(ratio);
        }
        bracket = SpectralBracket {
            lower,
            upper,
            iterations: it,
            perturbed,
        };
        if upper - lower <= tol * upper {
            break;
        }
        let mut next: Vec<f64> = w.iter().map(|wi| pow(*wi, 1.0 / deg)).collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        x = next;
    }
    Ok(bracket)
}
