//! Reproducible floating-point reductions.

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// slice length, so the result is independent of how callers schedule work.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(x)` over `values` without materializing the mapped slice.
pub fn pairwise_sum_by<T, F>(values: &[T], f: &F) -> f64
where
    F: Fn(&T) -> f64,
{
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().map(f).sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_by(&values[..mid], f) + pairwise_sum_by(&values[mid..], f)
}

pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}
