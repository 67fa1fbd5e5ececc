//! Stationary points of the lattice energy under Dirichlet conditions
//! `u_0 = left`, `u_N = right`, and their classification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::lattice::{pm_energy, pm_energy_difference, pm_gradient, pm_hessian, LatticeField};
use crate::energy::potential::{j_potential, j_prime, j_third, Scaling};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sup-norm of the interior gradient accepted for profiles built here.
pub const STATIONARITY_TOL: f64 = 1e-10;
/// Sup-norm of the interior gradient accepted by [`classify_stationary`].
pub const PRECONDITION_TOL: f64 = 1e-8;
/// Eigenvalues with modulus below this are treated as zero.
pub const DEGENERACY_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletBC<T> {
    pub left: T,
    pub right: T,
}

impl<T: Real> DirichletBC<T> {
    pub fn new(left: T, right: T) -> Result<Self> {
        if !left.is_finite() || !right.is_finite() {
            return Err(Error::InvalidParameter("boundary values must be finite".into()));
        }
        Ok(Self { left, right })
    }

    /// `u_0 = 0`, `u_N = λ`.
    pub fn pulled(lambda: T) -> Result<Self> {
        Self::new(T::zero(), lambda)
    }

    pub fn span(&self) -> T {
        self.right - self.left
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchKind {
    UniformElastic,
    SingleOverstretchHigh,
    SingleOverstretchLow,
    DegenerateThreshold,
    Other,
}

impl BranchKind {
    pub fn label(self) -> &'static str {
        match self {
            BranchKind::UniformElastic => "uniform",
            BranchKind::SingleOverstretchHigh => "overstretch_high",
            BranchKind::SingleOverstretchLow => "overstretch_low",
            BranchKind::DegenerateThreshold => "threshold",
            BranchKind::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    LocalMin,
    Saddle,
    LocalMax,
    Degenerate,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::LocalMin => "local_min",
            Classification::Saddle => "saddle",
            Classification::LocalMax => "local_max",
            Classification::Degenerate => "degenerate",
        }
    }

    /// `all_negative`: every eigenvalue lies below `-DEGENERACY_BAND`.
    fn from_spectrum(min: f64, all_negative: bool) -> Self {
        if min.abs() < DEGENERACY_BAND {
            Classification::Degenerate
        } else if min > 0.0 {
            Classification::LocalMin
        } else if all_negative {
            Classification::LocalMax
        } else {
            Classification::Saddle
        }
    }
}

/// A stationary lattice field with its multiplier and second-order type.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryProfile<T> {
    pub field: LatticeField<T>,
    /// Common value `σ` of `J'` over the springs.
    pub multiplier: T,
    pub kind: BranchKind,
    pub classification: Classification,
    /// Smallest eigenvalue of the Hessian restricted to the interior nodes.
    pub hessian_min_eigenvalue: T,
    pub energy: T,
    /// Interior gradient sup-norm.
    pub residual: T,
    /// Elongation of the overstretched spring, when there is one.
    pub overstretch: Option<T>,
}

/// `STATIONARITY_TOL`, raised to the rounding floor of the gradient on fine
/// lattices: an elongation `u_i - u_{i-1}` carries an error of order
/// `ε_mach |u|`, which the flux magnifies by `f''/ε ≤ 2/ε`.
pub fn stationarity_tolerance<T: Real>(field: &LatticeField<T>) -> T {
    let floor = T::lit(16.0) * T::epsilon() * (T::one() + field.sup_norm()) * T::from_count(field.springs());
    floor.max(T::lit(STATIONARITY_TOL))
}

fn check_springs<T: Real>(eps: T, n: usize) -> Result<Scaling<T>> {
    let s = Scaling::from_springs(n)?;
    if (eps * T::from_count(n) - T::one()).abs() > T::lit(1e-12) {
        return Err(Error::InvalidParameter(format!("spacing {eps} does not match {n} springs")));
    }
    Ok(s)
}

/// `2 √((1 - ε)/|log ε|)`: the load above which the high overstretched
/// branch is a local minimum.
pub fn critical_lambda<T: Real>(eps: T) -> Result<T> {
    let s = Scaling::new(eps)?;
    Ok(T::lit(2.0) * ((T::one() - eps) / s.log_abs()).sqrt())
}

/// Roots `w_1 ≥ w_2 > 0` of `w² - λw + (1 - ε)/|log ε| = 0` (elongation of the
/// overstretched spring), or `None` when the discriminant is negative.
pub fn overstretch_roots<T: Real>(eps: T, lambda: T) -> Result<Option<(T, T)>> {
    let s = Scaling::new(eps)?;
    let lambda = lambda.abs();
    let c = (T::one() - eps) / s.log_abs();
    let half = lambda * T::lit(0.5);
    let disc = half * half - c;
    if disc < T::zero() {
        return Ok(None);
    }
    let w1 = half + disc.sqrt();
    // product of the roots is c; avoids cancellation in the smaller one
    let w2 = if w1 > T::zero() { c / w1 } else { T::zero() };
    Ok(Some((w1, w2)))
}

/// Profile with `N - 1` equal springs and the last spring stretched by `w`,
/// for `u_0 = 0`, `u_N = λ ≥ 0`.
fn profile_with_last<T: Real>(n: usize, lambda: T, w: T) -> Result<LatticeField<T>> {
    let elastic = (lambda - w) / T::from_count(n - 1);
    let mut values: Vec<T> = (0..n).map(|i| T::from_count(i) * elastic).collect();
    values.push(lambda);
    LatticeField::new(values)
}

/// Maps a profile built for `(0, |span|)` onto `bc`, negating exactly when the
/// span is negative.
fn place<T: Real>(field: LatticeField<T>, bc: &DirichletBC<T>) -> LatticeField<T> {
    let neg = bc.span() < T::zero();
    let left = bc.left;
    field.map(|v| {
        let v = if neg { -v } else { v };
        if left == T::zero() {
            v
        } else {
            left + v
        }
    })
}

/// Linear profile `u_i = left + span·i/N`, present when the springs stay below
/// the convexity threshold.
pub fn uniform_branch<T: Real>(eps: T, bc: &DirichletBC<T>, n: usize) -> Result<Option<StationaryProfile<T>>> {
    let s = check_springs(eps, n)?;
    let lambda = bc.span().abs();
    if lambda >= s.jump_quotient() {
        return Ok(None);
    }
    let field = LatticeField::from_fn(n, |x| x * lambda)?;
    let mut p = classify_stationary(&place(field, bc), bc)?;
    p.kind = BranchKind::UniformElastic;
    Ok(Some(p))
}

/// The two single-overstretch solutions that lie in the admissible set
/// `w ≥ max(√(ε/|log ε|), λ - (N-1)√(ε/|log ε|))`, with the overstretched
/// spring placed last.
pub fn overstretch_branches<T: Real>(eps: T, bc: &DirichletBC<T>, n: usize) -> Result<Vec<StationaryProfile<T>>> {
    let s = check_springs(eps, n)?;
    let lambda = bc.span().abs();
    let Some((w1, w2)) = overstretch_roots(eps, lambda)? else {
        return Ok(Vec::new());
    };
    let c = s.threshold_elongation();
    let floor = c.max(lambda - T::from_count(n - 1) * c);
    let mut out = Vec::new();
    for (w, kind) in [(w1, BranchKind::SingleOverstretchHigh), (w2, BranchKind::SingleOverstretchLow)] {
        if w < floor || (kind == BranchKind::SingleOverstretchLow && w2 == w1) {
            continue;
        }
        let field = place(profile_with_last(n, lambda, w)?, bc);
        let mut p = classify_stationary(&field, bc)?;
        if p.residual > stationarity_tolerance(&p.field) {
            return Err(Error::NotStationary { residual: p.residual.to_f64_lossy() });
        }
        p.kind = kind;
        p.overstretch = Some(if bc.span() < T::zero() { -w } else { w });
        out.push(p);
    }
    Ok(out)
}

/// Evidence that the all-at-threshold profile is not a local minimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyCertificate {
    /// `J'''(1)(1 - 1/(N-1)²)`, the cubic coefficient of the energy along the
    /// direction that moves the last spring by `+t` and the others by `-t/(N-1)`.
    pub cubic_coefficient: f64,
    /// Step `t` in the scaled variable.
    pub t: f64,
    /// `F(perturbed) - F(profile)` evaluated on the lattice.
    pub energy_change: f64,
    /// Same change from the reduced one-dimensional energy.
    pub reduced_change: f64,
}

/// Lattice displacement for the threshold perturbation: the last spring grows
/// by `t` (scaled units) and the other `N-1` shrink by `t/(N-1)` each.
pub fn threshold_direction<T: Real>(n: usize, t: T, threshold_elongation: T) -> Vec<T> {
    let m = T::from_count(n - 1);
    let mut d: Vec<T> = (0..n).map(|i| -T::from_count(i) * t / m * threshold_elongation).collect();
    d.push(T::zero());
    d
}

/// The profile with every scaled gradient equal to 1, i.e. `λ = 1/√(ε|log ε|)`.
pub fn degenerate_threshold_case<T: Real>(eps: T, n: usize, t: T) -> Result<(StationaryProfile<T>, DegeneracyCertificate)> {
    let s = check_springs(eps, n)?;
    let c = s.threshold_elongation();
    let field = LatticeField::new((0..=n).map(|i| T::from_count(i) * c).collect())?;
    let lambda = field.values()[n];
    let bc = DirichletBC::pulled(lambda)?;
    let mut p = classify_stationary(&field, &bc)?;
    p.kind = BranchKind::DegenerateThreshold;

    let m = T::from_count(n - 1);
    let cubic = j_third(T::one()) * (T::one() - T::one() / (m * m));
    let delta = threshold_direction(n, t, c);
    let perturbed = field.with_values(field.values().iter().zip(&delta).map(|(&u, &d)| u + d).collect())?;
    let energy_change = pm_energy_difference(&field, &perturbed);
    let one = T::one();
    let reduced = (m * (j_potential(one - t / m) - j_potential(one)) + (j_potential(one + t) - j_potential(one)))
        / s.log_abs();
    let cert = DegeneracyCertificate {
        cubic_coefficient: cubic.to_f64_lossy(),
        t: t.to_f64_lossy(),
        energy_change: energy_change.to_f64_lossy(),
        reduced_change: reduced.to_f64_lossy(),
    };
    Ok((p, cert))
}

fn infer_kind<T: Real>(field: &LatticeField<T>, bc: &DirichletBC<T>) -> (BranchKind, Option<T>) {
    let s = field.scaling();
    let w: Vec<T> = field.elongations().into_iter().map(|d| s.scaled(d).abs()).collect();
    let tol = T::lit(1e-9);
    let near = |a: T, b: T| (a - b).abs() <= tol * (T::one() + b.abs());
    if w.iter().all(|&x| near(x, T::one())) {
        return (BranchKind::DegenerateThreshold, None);
    }
    let over: Vec<usize> = (0..w.len()).filter(|&i| w[i] > T::one()).collect();
    if over.is_empty() && w.iter().all(|&x| near(x, w[0])) {
        return (BranchKind::UniformElastic, None);
    }
    if over.len() == 1 {
        let i = over[0];
        let rest = if i == 0 { w[1] } else { w[0] };
        if w.iter().enumerate().all(|(j, &x)| j == i || near(x, rest)) {
            let elong = field.elongation(i + 1);
            if let Ok(Some((w1, w2))) = overstretch_roots(s.eps(), bc.span()) {
                let a = elong.abs();
                let kind = if (a - w1).abs() <= (a - w2).abs() {
                    BranchKind::SingleOverstretchHigh
                } else {
                    BranchKind::SingleOverstretchLow
                };
                return (kind, Some(elong));
            }
        }
    }
    (BranchKind::Other, None)
}

/// Classifies a stationary field by the spectrum of the Hessian restricted to
/// the interior nodes (the endpoints are held by `bc`).
pub fn classify_stationary<T: Real>(field: &LatticeField<T>, bc: &DirichletBC<T>) -> Result<StationaryProfile<T>> {
    let n = field.springs();
    let u = field.values();
    let tol = T::lit(1e-12) * (T::one() + bc.left.abs().max(bc.right.abs()));
    if (u[0] - bc.left).abs() > tol || (u[n] - bc.right).abs() > tol {
        return Err(Error::InvalidParameter("field does not satisfy the boundary values".into()));
    }
    let g = pm_gradient(field);
    let residual = g[1..n].iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if !(residual <= T::lit(PRECONDITION_TOL)) {
        return Err(Error::NotStationary { residual: residual.to_f64_lossy() });
    }
    let interior = pm_hessian(field).principal(1..n);
    let min = interior.min_eigenvalue();
    // one Sturm count settles the sign of the top eigenvalue
    let all_negative = interior.count_below(-T::lit(DEGENERACY_BAND)) == interior.dim();
    let classification = Classification::from_spectrum(min.to_f64_lossy(), all_negative);

    let s = field.scaling();
    let jp: Vec<T> = field.elongations().into_iter().map(|d| j_prime(s.scaled(d))).collect();
    let multiplier = jp.iter().fold(T::zero(), |a, &b| a + b) / T::from_count(n);
    let (kind, overstretch) = infer_kind(field, bc);
    Ok(StationaryProfile {
        field: field.clone(),
        multiplier,
        kind,
        classification,
        hessian_min_eigenvalue: min,
        energy: pm_energy(field),
        residual,
        overstretch,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub trials: usize,
    pub magnitude: f64,
    /// Smallest `F(u + δ) - F(u)` seen.
    pub min_change: f64,
    /// Trials with a change below `-1e-14`.
    pub decreases: usize,
}

impl PerturbationReport {
    pub fn confirms_local_min(&self) -> bool {
        self.decreases == 0
    }
}

pub const PERTURBATION_FLOOR: f64 = -1e-14;

/// Brute-force check: `trials` random interior displacements of Euclidean
/// norm `magnitude`, each compared spring by spring with the unperturbed
/// energy.
pub fn perturbation_check<T: Real>(field: &LatticeField<T>, trials: usize, magnitude: T, seed: u64) -> PerturbationReport {
    let n = field.springs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_change = f64::INFINITY;
    let mut decreases = 0;
    let mut dir = vec![T::zero(); n - 1];
    let mut trial = field.values().to_vec();
    for _ in 0..trials {
        let mut norm2 = T::zero();
        for d in dir.iter_mut() {
            *d = T::lit(rng.gen_range(-1.0..1.0));
            norm2 = norm2 + *d * *d;
        }
        let scale = magnitude / norm2.sqrt();
        for i in 1..n {
            trial[i] = field.values()[i] + dir[i - 1] * scale;
        }
        let perturbed = LatticeField::new(trial.clone()).expect("finite perturbation");
        let change = pm_energy_difference(field, &perturbed).to_f64_lossy();
        min_change = min_change.min(change);
        if change < PERTURBATION_FLOOR {
            decreases += 1;
        }
    }
    PerturbationReport { trials, magnitude: magnitude.to_f64_lossy(), min_change, decreases }
}

/// Local minima of the continuum energy with `u(0-) = 0`, `u(1+) = λ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MsMinima {
    /// Energy `λ²` of `u(x) = λx`.
    pub elastic: f64,
    /// Fewest jumps of a piecewise-constant local minimum (its energy).
    /// With `λ = 0` a single jump cannot connect the boundary values.
    pub min_jump_count: usize,
    /// `min(λ², 1)`.
    pub global_min: f64,
}

pub fn ms_local_minima_energy(lambda: f64) -> MsMinima {
    let elastic = lambda * lambda;
    MsMinima { elastic, min_jump_count: if lambda == 0.0 { 2 } else { 1 }, global_min: elastic.min(1.0) }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalMinimumComparison {
    pub lambda: f64,
    /// Lowest energy among the uniform and overstretched branches.
    pub branch_min: Option<f64>,
    /// Sampled jump `λ χ_[x0,1)`: one spring carries the whole load.
    pub jump_candidate: f64,
    pub lattice_min: f64,
    pub continuum_min: f64,
    pub gap: f64,
}

/// Lowest lattice energy over the stationary branches and the jump candidate,
/// against `min(λ², 1)`.
pub fn global_minimum_comparison<T: Real>(eps: T, lambda: T, n: usize) -> Result<GlobalMinimumComparison> {
    let s = check_springs(eps, n)?;
    let bc = DirichletBC::pulled(lambda)?;
    let mut energies: Vec<T> = Vec::new();
    if let Some(p) = uniform_branch(eps, &bc, n)? {
        energies.push(p.energy);
    }
    energies.extend(overstretch_branches(eps, &bc, n)?.into_iter().map(|p| p.energy));
    let branch_min = energies.iter().copied().fold(None, |m: Option<T>, e| Some(m.map_or(e, |m| m.min(e))));
    let jump_candidate = s.spring_energy(lambda);
    let lattice_min = branch_min.map_or(jump_candidate, |m| m.min(jump_candidate));
    let continuum_min = ms_local_minima_energy(lambda.to_f64_lossy()).global_min;
    Ok(GlobalMinimumComparison {
        lambda: lambda.to_f64_lossy(),
        branch_min: branch_min.map(|v| v.to_f64_lossy()),
        jump_candidate: jump_candidate.to_f64_lossy(),
        lattice_min: lattice_min.to_f64_lossy(),
        continuum_min,
        gap: (lattice_min.to_f64_lossy() - continuum_min).abs(),
    })
}

/// Every stationary profile this module can build at load `λ`.
pub fn all_branches<T: Real>(eps: T, bc: &DirichletBC<T>, n: usize) -> Result<Vec<StationaryProfile<T>>> {
    let mut out: Vec<_> = uniform_branch(eps, bc, n)?.into_iter().collect();
    out.extend(overstretch_branches(eps, bc, n)?);
    Ok(out)
}
