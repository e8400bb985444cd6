//! Convergence-rate estimates from residual histories.

use crate::solver::IterationRecord;

/// Empirical order `q = log(r_K / r_{K-1}) / log(r_{K-1} / r_{K-2})` from the
/// last three residual norms.
///
/// `None` with fewer than three residuals, a nonpositive or non-finite
/// residual, or a stalled ratio (`r_{K-1} = r_{K-2}`).
pub fn estimate_order(residuals: &[f64]) -> Option<f64> {
    let k = residuals.len();
    if k < 3 {
        return None;
    }
    let (r0, r1, r2) = (residuals[k - 3], residuals[k - 2], residuals[k - 1]);
    if ![r0, r1, r2].iter().all(|&r| r > 0.0 && r.is_finite()) {
        return None;
    }
    let den = libm::log(r1 / r0);
    if den == 0.0 {
        return None;
    }
    Some(libm::log(r2 / r1) / den)
}

/// [`estimate_order`] over the residual norms of a solve trace.
pub fn estimate_order_from_trace(trace: &[IterationRecord]) -> Option<f64> {
    let residuals: alloc::vec::Vec<f64> = trace.iter().map(|r| r.residual_norm).collect();
    estimate_order(&residuals)
}

/// Largest `q` such that `r_{k+1} <= C r_k^q` holds on the tail, measured as the
/// minimum of successive order estimates over the last `window` triples.
pub fn min_tail_order(residuals: &[f64], window: usize) -> Option<f64> {
    if residuals.len() < 3 || window == 0 {
        return None;
    }
    let last = residuals.len();
    let first = last.saturating_sub(window + 2);
    (first..last - 2)
        .filter_map(|s| estimate_order(&residuals[s..s + 3]))
        .reduce(f64::min)
}
