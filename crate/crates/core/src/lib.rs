//! Newton methods for M-tensor equations `A x^(m-1) = b`.
//!
//! The crate is `no_std` and only needs an allocator. It contains the tensor
//! kernels, a small dense linear-algebra layer, the y-space residual model, the
//! two Newton solvers and the benchmark problem generators. File formats, the
//! benchmark harness and the command-line interface live in the `mteq` crate.
//!
//! Overview of the pipeline:
//! - Build or generate a Z-tensor `A` and a nonnegative right-hand side `b`
//!   and wrap them in an [`MTeqProblem`] (optionally scaled by the largest
//!   absolute entry).
//! - Obtain a feasible starting point with [`initializer::initial_point`].
//! - Run [`solver::solve_positive`] when `b > 0`, or
//!   [`solver::solve_nonnegative`] when `b` has zero entries.
//!
//! Indices are 0-based everywhere in this crate.

#![no_std]
// `!(x > 0.0)` style tests are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod initializer;
pub mod linalg;
pub mod model;
pub mod problems;
pub mod solver;
pub mod tensor;

pub use linalg::{LinalgError, Matrix};
pub use model::{IndexPartition, MTeqProblem, ModelError, SolverConfig, StopRule};
pub use solver::{IterationRecord, SolveReport, SolveStatus, Step3Mode};
pub use tensor::{Storage, Tensor, TensorError};
