//! The convex-concave potential `J(z) = log(1 + z²)` and its lattice scaling.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `J(z) = log(1 + z²)`.
#[inline]
pub fn j_potential<T: Real>(z: T) -> T {
    (z * z).ln_1p()
}

/// `J'(z) = 2z / (1 + z²)`.
#[inline]
pub fn j_prime<T: Real>(z: T) -> T {
    let two = T::lit(2.0);
    two * z / (T::one() + z * z)
}

/// `J''(z) = 2(1 - z²) / (1 + z²)²`. Vanishes at the inflection `|z| = 1`
/// and attains its minimum `-1/4` at `|z| = √3`.
#[inline]
pub fn j_second<T: Real>(z: T) -> T {
    let z2 = z * z;
    let d = T::one() + z2;
    T::lit(2.0) * (T::one() - z2) / (d * d)
}

/// `J'''(z) = 4z(z² - 3) / (1 + z²)³`.
#[inline]
pub fn j_third<T: Real>(z: T) -> T {
    let z2 = z * z;
    let d = T::one() + z2;
    T::lit(4.0) * z * (z2 - T::lit(3.0)) / (d * d * d)
}

/// Lattice scaling at spacing `ε`: precomputes `|log ε|` and `√(ε|log ε|)`.
///
/// The per-spring density is `f_ε(q) = J(√(ε|log ε|) q) / (ε|log ε|)` where `q`
/// is a difference quotient; a spring with elongation `Δ` stores
/// `ε f_ε(Δ/ε) = J(√(|log ε|/ε) Δ) / |log ε|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling<T> {
    eps: T,
    log_abs: T,
    root: T,
}

impl<T: Real> Scaling<T> {
    pub fn new(eps: T) -> Result<Self> {
        if !(eps > T::zero() && eps < T::one()) {
            return Err(Error::InvalidSpacing(eps.to_f64_lossy()));
        }
        let log_abs = -eps.ln();
        Ok(Self { eps, log_abs, root: (eps * log_abs).sqrt() })
    }

    /// Scaling of the lattice `εZ ∩ [0,1]` with `n` springs (`ε = 1/n`).
    pub fn from_springs(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewSprings(n));
        }
        let nf = T::from_count(n);
        let eps = T::one() / nf;
        Ok(Self { eps, log_abs: nf.ln(), root: (eps * nf.ln()).sqrt() })
    }

    #[inline]
    pub fn eps(&self) -> T {
        self.eps
    }

    /// `|log ε|`.
    #[inline]
    pub fn log_abs(&self) -> T {
        self.log_abs
    }

    /// `√(ε|log ε|)`.
    #[inline]
    pub fn root(&self) -> T {
        self.root
    }

    /// `√(|log ε|/ε)`: converts an elongation into the scaled variable `w`.
    #[inline]
    pub fn elongation_scale(&self) -> T {
        self.log_abs / self.root
    }

    /// Difference quotient beyond which a spring counts as a jump:
    /// `1/√(ε|log ε|)`. Equivalently the scaled variable crosses 1.
    #[inline]
    pub fn jump_quotient(&self) -> T {
        T::one() / self.root
    }

    /// Elongation at which the scaled variable equals 1: `√(ε/|log ε|)`.
    #[inline]
    pub fn threshold_elongation(&self) -> T {
        self.root / self.log_abs
    }

    #[inline]
    pub fn scaled(&self, elongation: T) -> T {
        self.elongation_scale() * elongation
    }

    /// `f_ε(q)`.
    #[inline]
    pub fn f(&self, q: T) -> T {
        j_potential(self.root * q) / (self.root * self.root)
    }

    /// `f_ε'(q) = J'(√(ε|log ε|) q) / √(ε|log ε|)`.
    #[inline]
    pub fn f_prime(&self, q: T) -> T {
        j_prime(self.root * q) / self.root
    }

    /// `f_ε''(q) = J''(√(ε|log ε|) q)`, always in `[-1/4, 2]`.
    #[inline]
    pub fn f_second(&self, q: T) -> T {
        j_second(self.root * q)
    }

    #[inline]
    pub fn f_third(&self, q: T) -> T {
        self.root * j_third(self.root * q)
    }

    /// Energy stored in one spring of elongation `Δ`.
    #[inline]
    pub fn spring_energy(&self, elongation: T) -> T {
        j_potential(self.scaled(elongation)) / self.log_abs
    }
}

/// `f_ε(u)`; rejects `ε ∉ (0, 1)`.
pub fn f_eps<T: Real>(eps: T, u: T) -> Result<T> {
    Ok(Scaling::new(eps)?.f(u))
}

pub fn f_eps_prime<T: Real>(eps: T, u: T) -> Result<T> {
    Ok(Scaling::new(eps)?.f_prime(u))
}

pub fn f_eps_second<T: Real>(eps: T, u: T) -> Result<T> {
    Ok(Scaling::new(eps)?.f_second(u))
}
