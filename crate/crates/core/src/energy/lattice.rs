//! Lattice fields on `εZ ∩ [0,1]` and the scaled Perona-Malik functional.

use serde::Serialize;

use crate::energy::potential::Scaling;
use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum_by, Real};
use crate::tridiag::SymTridiagonal;

/// Nodal values `u_0, …, u_N` on the lattice with spacing `ε = 1/N`.
///
/// `N` is stored as an integer so that `ε·N = 1` holds exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeField<T> {
    springs: usize,
    values: Vec<T>,
}

impl<T: Real> LatticeField<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::TooFewSprings(values.len().saturating_sub(1)));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { springs: values.len() - 1, values })
    }

    /// Samples `f` at the nodes `x_i = i/N`.
    pub fn from_fn(springs: usize, f: impl Fn(T) -> T) -> Result<Self> {
        if springs < 2 {
            return Err(Error::TooFewSprings(springs));
        }
        let n = T::from_count(springs);
        Self::new((0..=springs).map(|i| f(T::from_count(i) / n)).collect())
    }

    pub fn constant(springs: usize, c: T) -> Result<Self> {
        Self::from_fn(springs, |_| c)
    }

    /// Number of springs `N`.
    #[inline]
    pub fn springs(&self) -> usize {
        self.springs
    }

    #[inline]
    pub fn spacing(&self) -> T {
        T::one() / T::from_count(self.springs)
    }

    pub fn scaling(&self) -> Scaling<T> {
        Scaling::from_springs(self.springs).expect("validated at construction")
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Node position `iε`.
    #[inline]
    pub fn node(&self, i: usize) -> T {
        T::from_count(i) / T::from_count(self.springs)
    }

    /// Elongation of spring `i` (between nodes `i-1` and `i`), `i ∈ 1..=N`.
    #[inline]
    pub fn elongation(&self, i: usize) -> T {
        self.values[i] - self.values[i - 1]
    }

    /// All elongations `u_i - u_{i-1}` for `i = 1..=N`.
    pub fn elongations(&self) -> Vec<T> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Same lattice with new values. Fails on length mismatch.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::LengthMismatch { expected: self.values.len(), got: values.len() });
        }
        Self::new(values)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { springs: self.springs, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `(Σ_{i=0}^{N} ε |u_i - v_i|²)^{1/2}`, the metric of the proximal term.
    pub fn l2_distance(&self, other: &Self) -> T {
        assert_eq!(self.springs, other.springs);
        let eps = self.spacing();
        let s = pairwise_sum_by(self.values.len(), |i| {
            let d = self.values[i] - other.values[i];
            d * d
        });
        (eps * s).sqrt()
    }

    /// `Σ_{i=0}^{N-1} ε |u_i - v_i|`, the `L¹` distance of the piecewise-constant
    /// extensions `u(x) = u_{⌊x/ε⌋}`.
    pub fn l1_distance(&self, other: &Self) -> T {
        assert_eq!(self.springs, other.springs);
        let s = pairwise_sum_by(self.springs, |i| (self.values[i] - other.values[i]).abs());
        self.spacing() * s
    }

    /// Discrete mass `Σ_{i=0}^{N} ε u_i`.
    pub fn mass(&self) -> T {
        self.spacing() * pairwise_sum_by(self.values.len(), |i| self.values[i])
    }
}

/// Scaled gradients `w_i = √(|log ε|/ε) (u_i - u_{i-1})`, one per spring.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledGradients<T> {
    w: Vec<T>,
}

impl<T: Real> ScaledGradients<T> {
    pub fn of(field: &LatticeField<T>) -> Self {
        let s = field.scaling();
        Self { w: field.elongations().into_iter().map(|d| s.scaled(d)).collect() }
    }

    /// Wraps externally computed `w`, checking it against `field` to
    /// relative tolerance `tol`.
    pub fn checked(field: &LatticeField<T>, w: Vec<T>, tol: T) -> Result<Self> {
        let reference = Self::of(field);
        if w.len() != reference.w.len() {
            return Err(Error::LengthMismatch { expected: reference.w.len(), got: w.len() });
        }
        for (i, (a, b)) in w.iter().zip(&reference.w).enumerate() {
            if (*a - *b).abs() > tol * (T::one() + b.abs()) {
                return Err(Error::InvalidParameter(format!(
                    "scaled gradient {i} is {a}, field gives {b}"
                )));
            }
        }
        Ok(Self { w })
    }

    pub fn as_slice(&self) -> &[T] {
        &self.w
    }

    /// Springs with `|w_i| > 1` (beyond the convexity threshold of `J`).
    pub fn overstretched(&self) -> Vec<usize> {
        self.w.iter().enumerate().filter(|(_, w)| w.abs() > T::one()).map(|(i, _)| i + 1).collect()
    }
}

/// `F_ε(u) = Σ_{i=1}^{N} J(√(|log ε|/ε)(u_i - u_{i-1})) / |log ε|`.
pub fn pm_energy<T: Real>(field: &LatticeField<T>) -> T {
    let s = field.scaling();
    let u = field.values();
    let c = s.elongation_scale();
    pairwise_sum_by(field.springs(), |i| {
        let w = c * (u[i + 1] - u[i]);
        (w * w).ln_1p()
    }) / s.log_abs()
}

/// Energy difference `F_ε(v) - F_ε(u)`, accumulated spring by spring so that
/// tiny changes are not lost to cancellation against the total.
pub fn pm_energy_difference<T: Real>(u: &LatticeField<T>, v: &LatticeField<T>) -> T {
    assert_eq!(u.springs(), v.springs());
    let s = u.scaling();
    let c = s.elongation_scale();
    let (a, b) = (u.values(), v.values());
    pairwise_sum_by(u.springs(), |i| {
        let wu = c * (a[i + 1] - a[i]);
        let wv = c * (b[i + 1] - b[i]);
        let (ju, jv) = ((wu * wu).ln_1p(), (wv * wv).ln_1p());
        // log((1 + wv²)/(1 + wu²)) without cancelling two large logs
        if ju > T::one() {
            ((wv - wu) * (wv + wu) / (T::one() + wu * wu)).ln_1p()
        } else {
            jv - ju
        }
    }) / s.log_abs()
}

/// `∂F_ε/∂u_i = f_ε'(Δ_i/ε) - f_ε'(Δ_{i+1}/ε)` with one-sided boundary rows.
pub fn pm_gradient<T: Real>(field: &LatticeField<T>) -> Vec<T> {
    let s = field.scaling();
    let eps = s.eps();
    let n = field.springs();
    let flux: Vec<T> = field.elongations().into_iter().map(|d| s.f_prime(d / eps)).collect();
    let mut g = vec![T::zero(); n + 1];
    g[0] = -flux[0];
    for i in 1..n {
        g[i] = flux[i - 1] - flux[i];
    }
    g[n] = flux[n - 1];
    g
}

/// Hessian `(1/ε) Dᵀ diag(f_ε''(Δ_i/ε)) D`, symmetric tridiagonal of size `N+1`.
pub fn pm_hessian<T: Real>(field: &LatticeField<T>) -> SymTridiagonal<T> {
    let s = field.scaling();
    let eps = s.eps();
    let n = field.springs();
    let k: Vec<T> = field.elongations().into_iter().map(|d| s.f_second(d / eps) / eps).collect();
    let mut diag = vec![T::zero(); n + 1];
    let mut off = vec![T::zero(); n];
    for (i, &ki) in k.iter().enumerate() {
        diag[i] = diag[i] + ki;
        diag[i + 1] = diag[i + 1] + ki;
        off[i] = -ki;
    }
    SymTridiagonal::new(diag, off)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn construction_invariants() {
        assert!(LatticeField::new(vec![0.0f64, 1.0]).is_err());
        assert!(matches!(LatticeField::new(vec![0.0, f64::NAN, 1.0]), Err(Error::NonFinite(1))));
        let f = LatticeField::from_fn(4, |x: f64| x).unwrap();
        assert_eq!(f.springs(), 4);
        assert_eq!(f.spacing() * 4.0, 1.0);
        assert_eq!(f.values(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn constant_field_has_zero_energy_and_gradient() {
        let f = LatticeField::constant(50, 3.0f64).unwrap();
        assert_eq!(pm_energy(&f), 0.0);
        assert!(pm_gradient(&f).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn linear_field_energy_closed_form() {
        // (1/(ε|log ε|)) log(1 + ε|log ε|), frozen from an mpmath evaluation.
        let f = LatticeField::from_fn(1000, |x: f64| x).unwrap();
        assert_relative_eq!(pm_energy(&f), 0.996_561_946_103_135_4, max_relative = 1e-12);
    }

    #[test]
    fn unit_step_energy_closed_form() {
        let f = LatticeField::from_fn(1000, |x: f64| if x >= 0.5 { 1.0 } else { 0.0 }).unwrap();
        assert_relative_eq!(pm_energy(&f), 1.279_799_936_478_170_7, max_relative = 1e-12);
    }

    #[test]
    fn linear_field_gradient_interior_vanishes() {
        let lambda: f64 = 1.7;
        let f = LatticeField::from_fn(64, |x: f64| lambda * x).unwrap();
        let g = pm_gradient(&f);
        let s = f.scaling();
        for &gi in &g[1..64] {
            assert!(gi.abs() < 1e-12);
        }
        assert_relative_eq!(g[0], -s.f_prime(lambda), max_relative = 1e-12);
        assert_relative_eq!(g[64], s.f_prime(lambda), max_relative = 1e-12);
    }

    #[test]
    fn energy_difference_matches_direct() {
        let u = LatticeField::from_fn(100, |x: f64| (3.0 * x).sin() + if x > 0.3 { 2.0 } else { 0.0 }).unwrap();
        let v = u.map(|x| x * 1.01 + 0.001);
        let direct = pm_energy(&v) - pm_energy(&u);
        assert_relative_eq!(pm_energy_difference(&u, &v), direct, max_relative = 1e-9);
    }

    #[test]
    fn overstretched_springs_are_listed_one_based() {
        let f = LatticeField::new(vec![0.0f64, 0.0, 1.0, 1.0]).unwrap();
        let w = ScaledGradients::of(&f);
        assert_eq!(w.overstretched(), vec![2]);
        assert!(ScaledGradients::checked(&f, vec![0.0, 0.5, 0.0], 1e-12).is_err());
    }

    #[test]
    fn hessian_annihilates_constants() {
        let f = LatticeField::from_fn(30, |x: f64| (7.0 * x).cos()).unwrap();
        let h = pm_hessian(&f);
        let ones = vec![1.0; 31];
        assert!(h.mul_vec(&ones).iter().all(|v| v.abs() < 1e-9));
    }
}
