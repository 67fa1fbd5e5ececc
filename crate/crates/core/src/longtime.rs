//! Slow motion of a two-jump plateau: `u = 0` on `(0, x₀)`, `z` on `(x₀, x₁)`,
//! `1` on `(x₁, 1)`, evolved by minimizing movements of the jump energy with
//! time step `η = τ/λ`.
//!
//! Everything is written in the centred variable `d = z - ½`. The equation is
//! odd in `d`, so runs from `z₀` and `1 - z₀` are exact negatives of each other.

use serde::Serialize;

use crate::energy::density::JumpDensity;
use crate::error::{Error, Result};

const RESIDUAL_TOL: f64 = 1e-13;
const MAX_ITERS: usize = 200;
/// The limit equation blows up at `z ∈ {0, 1}`; integration stops this close.
pub const ODE_GUARD: f64 = 1e-4;
/// Largest sup distance between scheme and limit trajectory counted as a match.
pub const MATCH_TOL: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct PlateauConfig {
    pub x0: f64,
    pub x1: f64,
    pub z0: f64,
    pub eps: f64,
    pub tau: f64,
    pub horizon: f64,
    /// Time scale; `None` means `1/|log ε|`.
    pub lambda: Option<f64>,
}

impl PlateauConfig {
    pub fn new(x0: f64, x1: f64, z0: f64, eps: f64, tau: f64, horizon: f64) -> Result<Self> {
        let cfg = Self { x0, x1, z0, eps, tau, horizon, lambda: None };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(0.0 < self.x0 && self.x0 < self.x1 && self.x1 < 1.0) {
            return bad("jump positions need 0 < x0 < x1 < 1");
        }
        if !(self.z0 >= 0.0 && self.z0.is_finite()) {
            return bad("plateau value must be non-negative");
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidSpacing(self.eps));
        }
        if !(self.tau > 0.0 && self.horizon >= 0.0) {
            return bad("time step must be positive and horizon non-negative");
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return bad("time scale must be positive");
            }
        }
        Ok(())
    }

    pub fn log_abs(&self) -> f64 {
        self.eps.ln().abs()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or(1.0 / self.log_abs())
    }

    /// `η = τ/λ`.
    pub fn eta(&self) -> f64 {
        self.tau / self.lambda()
    }

    pub fn steps(&self) -> usize {
        let r = self.horizon / self.tau;
        let k = r.round();
        if (r - k).abs() <= 1e-9 * r.max(1.0) {
            k as usize
        } else {
            r.floor() as usize
        }
    }

    fn gap(&self) -> f64 {
        self.x1 - self.x0
    }
}

/// Derivative in `z` of the jump energy of the plateau, `-force(d)` drives `d`.
#[derive(Clone)]
enum Force {
    /// `2 (G(½ + d) - G(½ - d))` with `G(y) = y / (ε + |log ε| y²)`.
    PeronaMalik { eps: f64, log_abs: f64 },
    /// `(a/|log ε|)(A(½ + d) - A(½ - d))` with `A(y) = sgn(y) g'(a|y|)`, `a = √(|log ε|/ε)`.
    Density { g: JumpDensity<f64>, a: f64, log_abs: f64 },
}

impl Force {
    fn value(&self, d: f64) -> f64 {
        match self {
            Force::PeronaMalik { eps, log_abs } => {
                let g = |y: f64| y / (eps + log_abs * y * y);
                2.0 * (g(0.5 + d) - g(0.5 - d))
            }
            Force::Density { g, a, log_abs } => {
                let side = |y: f64| y.signum() * g.derivative(a * y.abs());
                a / log_abs * (side(0.5 + d) - side(0.5 - d))
            }
        }
    }

    fn slope(&self, d: f64) -> f64 {
        match self {
            Force::PeronaMalik { eps, log_abs } => {
                let dg = |y: f64| {
                    let q = eps + log_abs * y * y;
                    (eps - log_abs * y * y) / (q * q)
                };
                2.0 * (dg(0.5 + d) + dg(0.5 - d))
            }
            Force::Density { g, a, log_abs } => {
                // central difference of g' at the scaled argument
                let curv = |y: f64| {
                    let w = a * y.abs();
                    let h = 1e-6 * w.max(1.0);
                    (g.derivative(w + h) - g.derivative((w - h).max(0.0))) / (w + h - (w - h).max(0.0))
                };
                a * a / log_abs * (curv(0.5 + d) + curv(0.5 - d))
            }
        }
    }
}

/// Output of [`scaled_scheme`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlateauTrace {
    pub tau: f64,
    /// `z_k`, `k = 0..=steps`.
    pub z: Vec<f64>,
    /// Centred values `z_k - ½` as computed.
    pub centred: Vec<f64>,
    /// First step whose solution was clamped to `z = 0`.
    pub clamped_at: Option<usize>,
}

fn solve_step(d_prev: f64, c: f64, force: &Force) -> Result<(f64, bool)> {
    let res = |d: f64| d - d_prev + c * force.value(d);
    let mut lo = d_prev.min(-0.5);
    let mut hi = d_prev.max(0.5);
    // R(lo) ≤ 0 ≤ R(hi) because the force is non-positive left of -½ and
    // non-negative right of ½
    let mut x = d_prev;
    let mut r = res(x);
    for _ in 0..MAX_ITERS {
        if r.abs() <= RESIDUAL_TOL {
            let clamped = x < -0.5;
            return Ok((if clamped { -0.5 } else { x }, clamped));
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = 1.0 + c * force.slope(x);
        let newton = x - r / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if next == x {
            break;
        }
        x = next;
        r = res(x);
    }
    if r.abs() <= RESIDUAL_TOL {
        let clamped = x < -0.5;
        return Ok((if clamped { -0.5 } else { x }, clamped));
    }
    // a density with g'(0) > 0 makes the force jump at z = 0; the sign change
    // then sits on the jump and z = 0 is the solution
    if hi - lo <= 4.0 * f64::EPSILON && lo <= -0.5 + f64::EPSILON && hi >= -0.5 - f64::EPSILON {
        return Ok((-0.5, true));
    }
    Err(Error::NoConvergence { iterations: MAX_ITERS, residual: r.abs() })
}

fn run(cfg: &PlateauConfig, force: &Force) -> Result<PlateauTrace> {
    cfg.check()?;
    let c = cfg.eta() / cfg.gap();
    let steps = cfg.steps();
    let mut centred = Vec::with_capacity(steps + 1);
    centred.push(cfg.z0 - 0.5);
    let mut clamped_at = None;
    for k in 1..=steps {
        let (d, clamped) = solve_step(centred[k - 1], c, force)?;
        if clamped {
            clamped_at.get_or_insert(k);
        }
        centred.push(d);
    }
    let z = centred.iter().map(|d| 0.5 + d).collect();
    Ok(PlateauTrace { tau: cfg.tau, z, centred, clamped_at })
}

fn pm_force(cfg: &PlateauConfig) -> Force {
    Force::PeronaMalik { eps: cfg.eps, log_abs: cfg.log_abs() }
}

/// One implicit step
/// `(x₁ - x₀)(z - z_prev)/τ = -(2/λ)(z/(ε + |log ε| z²) + (z - 1)/(ε + |log ε|(z - 1)²))`,
/// solved by bracketed Newton. Returns the new value and whether it had to be
/// clamped at 0.
pub fn scaled_step(z_prev: f64, cfg: &PlateauConfig) -> Result<(f64, bool)> {
    cfg.check()?;
    if !(z_prev >= 0.0) {
        return Err(Error::InvalidParameter(format!("plateau value must be non-negative, got {z_prev}")));
    }
    let (d, clamped) = solve_step(z_prev - 0.5, cfg.eta() / cfg.gap(), &pm_force(cfg))?;
    Ok((0.5 + d, clamped))
}

/// Iterates [`scaled_step`] over the horizon.
pub fn scaled_scheme(cfg: &PlateauConfig) -> Result<PlateauTrace> {
    run(cfg, &pm_force(cfg))
}

/// Samples of the limit equation `z' = -(2/(x₁ - x₀))(1 - 2z)/(z(1 - z))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeTrace {
    /// `z(kτ)` for `k = 0..` up to the horizon or the guard.
    pub z: Vec<f64>,
    /// Time at which `z` left `(δ, 1 - δ)`, if it did.
    pub guard_time: Option<f64>,
}

/// Classical RK4 with step `dt` (rounded so that it divides `τ`), sampled on the
/// scheme's grid.
pub fn limit_ode(cfg: &PlateauConfig, dt: f64) -> Result<OdeTrace> {
    cfg.check()?;
    let half = 0.5 - ODE_GUARD;
    let d0 = cfg.z0 - 0.5;
    if d0.abs() >= half {
        return Err(Error::SingularStart(cfg.z0));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("ODE step must be positive".into()));
    }
    let sub = (cfg.tau / dt).round().max(1.0) as usize;
    let h = cfg.tau / sub as f64;
    let k4 = 4.0 / cfg.gap();
    // in the centred variable: d' = (4/(x₁ - x₀)) d / (¼ - d²)
    let rhs = |d: f64| k4 * d / (0.25 - d * d);
    let steps = cfg.steps();
    let mut z = vec![cfg.z0];
    let mut d = d0;
    for k in 1..=steps {
        for j in 0..sub {
            // a stage outside the band means the step reaches the singularity
            let inside = |x: f64| x.is_finite() && x.abs() < half;
            let a = rhs(d);
            let sb = d + 0.5 * h * a;
            let b = rhs(sb);
            let sc = d + 0.5 * h * b;
            let c = rhs(sc);
            let se = d + h * c;
            let e = rhs(se);
            let next = d + h / 6.0 * (a + 2.0 * b + 2.0 * c + e);
            if ![sb, sc, se, next].into_iter().all(inside) {
                let t = (k - 1) as f64 * cfg.tau + (j + 1) as f64 * h;
                return Ok(OdeTrace { z, guard_time: Some(t) });
            }
            d = next;
        }
        z.push(0.5 + d);
    }
    Ok(OdeTrace { z, guard_time: None })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongtimeComparison {
    pub sup_error: f64,
    pub compared_steps: usize,
    pub guard_time: Option<f64>,
    pub clamped_at: Option<usize>,
}

fn compare(scheme: &PlateauTrace, ode: &OdeTrace) -> LongtimeComparison {
    let n = scheme.z.len().min(ode.z.len());
    let sup_error = scheme.z[..n].iter().zip(&ode.z[..n]).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    LongtimeComparison { sup_error, compared_steps: n, guard_time: ode.guard_time, clamped_at: scheme.clamped_at }
}

/// Sup distance between the scheme and the limit equation on their common grid.
pub fn longtime_comparison(cfg: &PlateauConfig, dt: f64) -> Result<(LongtimeComparison, PlateauTrace, OdeTrace)> {
    let scheme = scaled_scheme(cfg)?;
    let ode = limit_ode(cfg, dt)?;
    Ok((compare(&scheme, &ode), scheme, ode))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GprimeReport {
    pub density: String,
    pub origin_ok: bool,
    /// `w g'(w)` at `w = 1e9`; tends to 2 for densities with logarithmic growth.
    pub slope_times_w: f64,
    pub asymptote_ok: bool,
    pub comparison: LongtimeComparison,
    pub matches: bool,
}

/// Reruns the plateau scheme with the jump energy `g(√(|log ε|/ε)|jump|)/|log ε|`
/// and compares it with the limit equation.
pub fn gprime_longtime_check(g: &JumpDensity<f64>, cfg: &PlateauConfig, dt: f64) -> Result<(GprimeReport, PlateauTrace)> {
    let report = g.validate_origin()?;
    let l = cfg.log_abs();
    let force = Force::Density { g: g.clone(), a: (l / cfg.eps).sqrt(), log_abs: l };
    let scheme = run(cfg, &force)?;
    let ode = limit_ode(cfg, dt)?;
    let comparison = compare(&scheme, &ode);
    let matches = comparison.sup_error <= MATCH_TOL;
    Ok((
        GprimeReport {
            density: g.name().to_string(),
            origin_ok: report.origin_ok(),
            slope_times_w: 1e9 * g.derivative(1e9),
            asymptote_ok: report.asymptote_ok,
            comparison,
            matches,
        },
        scheme,
    ))
}
