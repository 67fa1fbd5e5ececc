//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the lattice energies are evaluated in.
///
/// Implemented for `f32` and `f64`. The experiments that sum up to 10^6
/// spring terms at spacings near 1e-6 only make sense in `f64`; `f32` is
/// supported for the pointwise potentials and small lattices.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    fn lit(x: f64) -> Self;

    /// Converts a count into the scalar type.
    fn from_count(n: usize) -> Self;

    fn to_f64_lossy(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        n as f64
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        n as f32
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

/// Pairwise (cascade) summation. Rounding error grows like `O(log n)`
/// instead of `O(n)`, which matters when 10^6 terms of size ~ε are added.
pub fn pairwise_sum<T: Real>(values: &[T]) -> T {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        let mut acc = T::zero();
        for &v in values {
            acc = acc + v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(i)` for `i` in `0..n`, without materializing the terms.
pub fn pairwise_sum_by<T: Real, F: Fn(usize) -> T>(n: usize, f: F) -> T {
    fn rec<T: Real, F: Fn(usize) -> T>(lo: usize, hi: usize, f: &F) -> T {
        const BLOCK: usize = 64;
        if hi - lo <= BLOCK {
            let mut acc = T::zero();
            for i in lo..hi {
                acc = acc + f(i);
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, n, &f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_small_sums() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        assert_eq!(pairwise_sum_by(1000, |i| (i + 1) as f64), 500_500.0);
    }

    #[test]
    fn pairwise_beats_naive_on_many_small_terms() {
        // 10^6 copies of 0.1: the naive running sum drifts by ~1e-6.
        let n = 1_000_000;
        let exact = 100_000.0;
        let pairwise = pairwise_sum_by(n, |_| 0.1f64);
        let naive: f64 = (0..n).map(|_| 0.1f64).fold(0.0, |a, b| a + b);
        assert!((pairwise - exact).abs() < (naive - exact).abs());
        assert!((pairwise - exact).abs() < 1e-8);
    }

    #[test]
    fn lit_round_trips() {
        assert_eq!(<f32 as Real>::lit(0.5), 0.5f32);
        assert_eq!(<f64 as Real>::from_count(7), 7.0);
    }
}
