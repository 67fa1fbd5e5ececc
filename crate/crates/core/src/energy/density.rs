//! Concave jump densities `g` and the family `G_ε` that shares the
//! Mumford-Shah limit with the lattice functional.

use std::fmt;
use std::sync::Arc;

use crate::energy::piecewise::{PiecewiseH1Function, ScalarFn};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Decades at which `g(w) / (2 log w)` is compared with 1, and the allowed
/// deviation at each.
pub const ASYMPTOTE_CHECKS: [(f64, f64); 3] = [(1e3, 0.25), (1e6, 0.1), (1e9, 0.05)];

const ORIGIN_TOL: f64 = 1e-8;

/// Jump density `g` with its derivative.
#[derive(Clone)]
pub struct JumpDensity<T> {
    name: String,
    g: ScalarFn<T>,
    dg: ScalarFn<T>,
}

impl<T: Real> fmt::Debug for JumpDensity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JumpDensity").field("name", &self.name).finish()
    }
}

/// Outcome of the individual conditions on `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityReport {
    pub value_at_zero: f64,
    pub slope_at_zero: f64,
    pub concave: bool,
    /// `|g(w)/(2 log w) - 1|` at each of [`ASYMPTOTE_CHECKS`].
    pub asymptote_deviation: [f64; 3],
    pub asymptote_ok: bool,
}

impl DensityReport {
    pub fn origin_ok(&self) -> bool {
        self.value_at_zero.abs() <= ORIGIN_TOL && (self.slope_at_zero - 1.0).abs() <= ORIGIN_TOL
    }

    pub fn all_ok(&self) -> bool {
        self.origin_ok() && self.concave && self.asymptote_ok
    }
}

impl<T: Real> JumpDensity<T> {
    pub fn new(
        name: impl Into<String>,
        g: impl Fn(T) -> T + Send + Sync + 'static,
        dg: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), g: Arc::new(g), dg: Arc::new(dg) }
    }

    /// `g(w) = 2 log(1 + w/2)`.
    pub fn log_half() -> Self {
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        Self::new("2log(1+w/2)", move |w| two * (w * half).ln_1p(), move |w| T::one() / (T::one() + w * half))
    }

    /// `g(w) = w / (1 + w)`: bounded, so it misses the logarithmic growth.
    pub fn saturating() -> Self {
        Self::new(
            "w/(1+w)",
            |w| w / (T::one() + w),
            |w| {
                let d = T::one() + w;
                T::one() / (d * d)
            },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn value(&self, w: T) -> T {
        (self.g)(w)
    }

    #[inline]
    pub fn derivative(&self, w: T) -> T {
        (self.dg)(w)
    }

    /// Evaluates every condition without failing.
    pub fn report(&self) -> DensityReport {
        let value_at_zero = self.value(T::zero()).to_f64_lossy();
        let slope_at_zero = self.derivative(T::zero()).to_f64_lossy();

        // g' non-increasing on a geometric grid 1e-6 .. 1e12, plus w = 0
        let mut concave = true;
        let mut prev = self.derivative(T::zero());
        let mut w = 1e-6f64;
        while w <= 1e12 {
            let d = self.derivative(T::lit(w));
            if !d.is_finite() || d > prev + prev.abs() * T::lit(1e-12) {
                concave = false;
                break;
            }
            prev = d;
            w *= 1.25;
        }

        let mut asymptote_deviation = [0.0; 3];
        let mut asymptote_ok = true;
        for (k, &(w, tol)) in ASYMPTOTE_CHECKS.iter().enumerate() {
            let ratio = self.value(T::lit(w)).to_f64_lossy() / (2.0 * w.ln());
            asymptote_deviation[k] = (ratio - 1.0).abs();
            asymptote_ok &= asymptote_deviation[k] <= tol;
        }
        DensityReport { value_at_zero, slope_at_zero, concave, asymptote_deviation, asymptote_ok }
    }

    /// `g(0) = 0` and `g'(0) = 1` only.
    pub fn validate_origin(&self) -> Result<DensityReport> {
        let r = self.report();
        if r.value_at_zero.abs() > ORIGIN_TOL {
            return Err(Error::InvalidDensity { condition: "g(0) = 0" });
        }
        if (r.slope_at_zero - 1.0).abs() > ORIGIN_TOL {
            return Err(Error::InvalidDensity { condition: "g'(0) = 1" });
        }
        Ok(r)
    }

    /// All three conditions: origin, concavity, logarithmic asymptote.
    pub fn validate(&self) -> Result<DensityReport> {
        let r = self.validate_origin()?;
        if !r.concave {
            return Err(Error::InvalidDensity { condition: "concavity (g' non-increasing)" });
        }
        if !r.asymptote_ok {
            return Err(Error::InvalidDensity { condition: "g(w) / (2 log w) -> 1" });
        }
        Ok(r)
    }
}

/// `G_ε(u) = ∫|u'|² + Σ_{S(u)} g(√(|log ε|/ε) |u⁺ - u⁻|) / |log ε|`.
pub fn g_eps_energy<T: Real>(u: &PiecewiseH1Function<T>, eps: T, g: &JumpDensity<T>) -> Result<T> {
    g.validate()?;
    g_eps_energy_unchecked(u, eps, g)
}

/// [`g_eps_energy`] without validating `g` (for densities that are known to
/// miss the asymptote but are still probed).
pub fn g_eps_energy_unchecked<T: Real>(u: &PiecewiseH1Function<T>, eps: T, g: &JumpDensity<T>) -> Result<T> {
    if !(eps > T::zero() && eps < T::one()) {
        return Err(Error::InvalidSpacing(eps.to_f64_lossy()));
    }
    let log_abs = -eps.ln();
    let scale = (log_abs / eps).sqrt();
    let jumps = u.jump_sizes().into_iter().fold(T::zero(), |acc, s| acc + g.value(scale * s));
    Ok(u.dirichlet_energy()? + jumps / log_abs)
}
