use serde::Serialize;

use crate::energy::lattice::LatticeField;
use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{jump_springs, EvolutionTrace};

/// Discrete flux `f_ε'((u_{i+1} - u_i)/ε)`, one entry per spring.
pub fn flux_field<T: Real>(field: &LatticeField<T>) -> Vec<T> {
    let s = field.scaling();
    let eps = s.eps();
    field.values().windows(2).map(|w| s.f_prime((w[1] - w[0]) / eps)).collect()
}

/// Flux of a spring with elongation `γ`: `2γ/(ε + γ² |log ε|)`. Beyond the
/// jump threshold the flux decreases in `γ`, so this bounds the flux of every
/// spring at least that long.
pub fn flux_bound(eps: f64, gamma: f64) -> f64 {
    let l = eps.ln().abs();
    2.0 * gamma / (eps + gamma * gamma * l)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxReport {
    pub max_flux: f64,
    /// Largest flux over springs with elongation at least `γ`.
    pub max_jump_flux: f64,
    pub jump_flux_bound: f64,
    pub jump_springs: usize,
    /// `max |φ_i - 2Δ_i/ε| / |2Δ_i/ε|` over springs below the jump threshold.
    pub small_slope_rel_error: f64,
    /// `ε|log ε| q²` at the steepest sub-threshold spring.
    pub small_slope_bound: f64,
}

impl FluxReport {
    pub fn of<T: Real>(field: &LatticeField<T>, gamma: f64) -> Self {
        let eps = field.spacing().to_f64_lossy();
        let l = eps.ln().abs();
        let limit = field.scaling().threshold_elongation().to_f64_lossy();
        let flux = flux_field(field);
        let mut r = FluxReport {
            max_flux: 0.0,
            max_jump_flux: 0.0,
            jump_flux_bound: flux_bound(eps, gamma),
            jump_springs: 0,
            small_slope_rel_error: 0.0,
            small_slope_bound: 0.0,
        };
        for (w, phi) in field.values().windows(2).zip(flux) {
            let d = (w[1] - w[0]).to_f64_lossy();
            let phi = phi.to_f64_lossy().abs();
            r.max_flux = r.max_flux.max(phi);
            if d.abs() >= gamma {
                r.jump_springs += 1;
                r.max_jump_flux = r.max_jump_flux.max(phi);
            }
            if d.abs() <= limit && d != 0.0 {
                let q = d / eps;
                r.small_slope_rel_error = r.small_slope_rel_error.max((phi - 2.0 * q.abs()).abs() / (2.0 * q.abs()));
                r.small_slope_bound = r.small_slope_bound.max(eps * l * q * q);
            }
        }
        r
    }

    pub fn holds(&self) -> bool {
        self.max_jump_flux <= self.jump_flux_bound * (1.0 + 1e-12)
            && self.small_slope_rel_error <= self.small_slope_bound * (1.0 + 1e-9) + 1e-15
    }
}

/// Whether the jump set only ever shrinks along the trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionReport {
    /// `4τ/ε²`, the Lipschitz constant of the explicit map.
    pub lipschitz: f64,
    pub condition_held: bool,
    pub violations: usize,
    pub first_violation: Option<usize>,
    pub initial_jumps: usize,
    pub final_jumps: usize,
}

impl InclusionReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

pub fn jump_set_trace<T: Real>(trace: &EvolutionTrace<T>) -> InclusionReport {
    let mut violations = 0;
    let mut first = None;
    for (k, w) in trace.jump_sets.windows(2).enumerate() {
        // both lists are sorted
        if !w[1].iter().all(|i| w[0].binary_search(i).is_ok()) {
            violations += 1;
            first.get_or_insert(k + 1);
        }
    }
    InclusionReport {
        lipschitz: trace.stability_ratio,
        condition_held: trace.stability_ratio < 1.0,
        violations,
        first_violation: first,
        initial_jumps: trace.jump_sets[0].len(),
        final_jumps: trace.jump_sets.last().map_or(0, Vec::len),
    }
}

/// Empirical `1/2`-Hölder constant of the piecewise-constant interpolant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport {
    /// `max ‖u(t) - u(s)‖ / √(t - s + τ)` over recorded pairs.
    pub constant: f64,
    /// `√(2 F_ε(u⁰))`.
    pub bound: f64,
    pub pairs: usize,
    /// Running maximum at each recorded state.
    pub running: Vec<(usize, f64)>,
}

impl HolderReport {
    pub fn holds(&self) -> bool {
        self.constant <= self.bound
    }
}

pub fn holder_estimate<T: Real>(trace: &EvolutionTrace<T>) -> Result<HolderReport> {
    let rec = &trace.recorded;
    if rec.len() < 2 {
        return Err(Error::InvalidParameter("need at least two recorded states".into()));
    }
    let tau = trace.tau;
    let mut best = 0.0f64;
    let mut pairs = 0;
    let mut running = Vec::with_capacity(rec.len());
    for (b, (kb, vb)) in rec.iter().enumerate() {
        for (ka, va) in &rec[..b] {
            let dt = (kb - ka) as f64 * tau;
            best = best.max(vb.l2_distance(va).to_f64_lossy() / (dt + tau).sqrt());
            pairs += 1;
        }
        running.push((*kb, best));
    }
    Ok(HolderReport { constant: best, bound: (2.0 * trace.energies[0]).sqrt(), pairs, running })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistenceEntry {
    /// Position `(i + 1) ε` of the jump in the final state.
    pub position: f64,
    pub size: f64,
    /// First recorded step without a jump larger than `γ` within `2ε`.
    pub first_gap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistenceReport {
    pub gamma: f64,
    pub entries: Vec<PersistenceEntry>,
}

impl PersistenceReport {
    pub fn holds(&self) -> bool {
        self.entries.iter().all(|e| e.first_gap.is_none())
    }
}

/// For each jump of the final state larger than `γ`, looks for a jump larger
/// than `γ` within two springs at every recorded time.
pub fn jump_persistence_check<T: Real>(trace: &EvolutionTrace<T>, gamma: f64) -> PersistenceReport {
    let last = trace.final_state();
    let eps = last.spacing().to_f64_lossy();
    let big = |f: &LatticeField<T>, i: usize| (f.values()[i + 1] - f.values()[i]).to_f64_lossy().abs() > gamma;
    let entries = jump_springs(last)
        .into_iter()
        .filter(|&i| big(last, i))
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 2).min(last.springs() - 1);
            let first_gap = trace.recorded.iter().find(|(_, f)| !(lo..=hi).any(|j| big(f, j))).map(|(k, _)| *k);
            PersistenceEntry {
                position: (i + 1) as f64 * eps,
                size: (last.values()[i + 1] - last.values()[i]).to_f64_lossy(),
                first_gap,
            }
        })
        .collect();
    PersistenceReport { gamma, entries }
}
