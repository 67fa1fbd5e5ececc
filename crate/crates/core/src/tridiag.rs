//! Symmetric tridiagonal matrices: products, Thomas solves and Sturm-sequence
//! eigenvalue bisection.

use crate::scalar::Real;

/// Symmetric tridiagonal matrix with `diag.len() == n` and `off.len() == n - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal<T> {
    pub diag: Vec<T>,
    pub off: Vec<T>,
}

impl<T: Real> SymTridiagonal<T> {
    pub fn new(diag: Vec<T>, off: Vec<T>) -> Self {
        assert!(
            diag.len() == off.len() + 1,
            "off-diagonal must be one shorter than the diagonal"
        );
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Entry `(i, j)`; zero outside the three bands.
    pub fn get(&self, i: usize, j: usize) -> T {
        if i == j {
            self.diag[i]
        } else if i + 1 == j {
            self.off[i]
        } else if j + 1 == i {
            self.off[j]
        } else {
            T::zero()
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y = y + self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y = y + self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Principal submatrix on rows/columns `range`.
    pub fn principal(&self, range: std::ops::Range<usize>) -> Self {
        let diag = self.diag[range.clone()].to_vec();
        let off = if range.len() > 1 {
            self.off[range.start..range.end - 1].to_vec()
        } else {
            Vec::new()
        };
        Self { diag, off }
    }

    /// Solves `A x = rhs` with the Thomas algorithm. Returns `None` on a zero
    /// pivot. Stable without pivoting for diagonally dominant or positive
    /// definite matrices.
    pub fn solve(&self, rhs: &[T]) -> Option<Vec<T>> {
        let n = self.dim();
        assert_eq!(rhs.len(), n);
        let mut c = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];
        let mut pivot = self.diag[0];
        if pivot == T::zero() || !pivot.is_finite() {
            return None;
        }
        if n > 1 {
            c[0] = self.off[0] / pivot;
        }
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.off[i - 1] * c[i - 1];
            if pivot == T::zero() || !pivot.is_finite() {
                return None;
            }
            if i + 1 < n {
                c[i] = self.off[i] / pivot;
            }
            d[i] = (rhs[i] - self.off[i - 1] * d[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            d[i] = d[i] - c[i] * d[i + 1];
        }
        Some(d)
    }

    /// Number of eigenvalues strictly less than `x` (Sturm count on the LDLᵀ
    /// pivots of `A - xI`).
    pub fn count_below(&self, x: T) -> usize {
        let tiny = T::min_positive_value();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < T::zero() {
            count += 1;
        }
        for i in 1..self.dim() {
            let denom = if q.abs() < tiny { -tiny } else { q };
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / denom;
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing every eigenvalue.
    pub fn gershgorin(&self) -> (T, T) {
        let n = self.dim();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let mut r = T::zero();
            if i > 0 {
                r = r + self.off[i - 1].abs();
            }
            if i + 1 < n {
                r = r + self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
    pub fn eigenvalue(&self, k: usize) -> T {
        assert!(k < self.dim());
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(T::min_positive_value());
        let pad = scale * T::epsilon() * T::lit(4.0);
        lo = lo - pad;
        hi = hi + pad;
        for _ in 0..200 {
            // Sturm counts are exact only up to about ε_mach ‖A‖
            if hi - lo <= pad {
                break;
            }
            let mid = lo + (hi - lo) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo + (hi - lo) * T::lit(0.5)
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalue(0)
    }

    pub fn max_eigenvalue(&self) -> T {
        self.eigenvalue(self.dim() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymTridiagonal<f64> {
        SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn dirichlet_laplacian_spectrum() {
        // Eigenvalues 2 - 2cos(k pi / (n+1)).
        let n = 50;
        let a = laplacian(n);
        for k in [0, 7, n - 1] {
            let exact = 2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((a.eigenvalue(k) - exact).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn thomas_solve_inverts_product() {
        let a = SymTridiagonal::new(vec![4.0f64, 5.0, 6.0, 7.0], vec![1.0, -2.0, 0.5]);
        let x = vec![1.0f64, -2.0, 3.0, 0.25];
        let b = a.mul_vec(&x);
        let y = a.solve(&b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn indefinite_matrix_has_negative_min_eigenvalue() {
        let a = SymTridiagonal::new(vec![1.0f64, -3.0, 1.0], vec![0.0, 0.0]);
        assert!((a.min_eigenvalue() + 3.0).abs() < 1e-13);
        assert!((a.max_eigenvalue() - 1.0).abs() < 1e-13);
        assert_eq!(a.count_below(0.0), 1);
    }

    #[test]
    fn principal_block() {
        let a = laplacian(5).principal(1..4);
        assert_eq!(a.dim(), 3);
        assert_eq!(a.off.len(), 2);
        assert_eq!(a.get(0, 2), 0.0);
    }
}
