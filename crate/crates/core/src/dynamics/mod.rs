//! Minimizing movements along the lattice energy: each step minimizes
//! `F_ε(v) + (1/2τ) Σ_{i=0}^{N} ε |v_i - u_i|²` with free ends.

mod diagnostics;
mod dump;
mod heat;
mod prox;

pub use diagnostics::{
    flux_bound, flux_field, holder_estimate, jump_persistence_check, jump_set_trace, FluxReport, HolderReport,
    InclusionReport, PersistenceEntry, PersistenceReport,
};
pub use dump::{read_state_dump, write_state_dump, StateDump};
pub use heat::{heat_oracle, HEAT_CELLS, HEAT_STEPS};
pub use prox::{minimizing_movement, minimizing_movement_with, prox_step, prox_step_from, EvolutionTrace, MMConfig, StepViolation};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::lattice::LatticeField;
use crate::error::Result;
use crate::scalar::Real;

/// Springs whose scaled elongation exceeds 1 (0-based spring index `i` joins
/// nodes `i` and `i+1`).
pub fn jump_springs<T: Real>(field: &LatticeField<T>) -> Vec<usize> {
    let s = field.scaling();
    let limit = s.threshold_elongation();
    field
        .values()
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[1] - w[0]).abs() > limit)
        .map(|(i, _)| i)
        .collect()
}

/// Seeded rough initial datum: increments `s_i ε` with slopes `s_i` uniform in
/// `[-2, 2]`, plus a jump uniform in `[-1, 1]` on each spring with probability
/// 1/20. Starts at 0.
pub fn random_field(springs: usize, seed: u64) -> Result<LatticeField<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = 1.0 / springs as f64;
    let mut values = Vec::with_capacity(springs + 1);
    values.push(0.0);
    for _ in 0..springs {
        let slope: f64 = rng.gen_range(-2.0..=2.0);
        let jump = if rng.gen_bool(0.05) { rng.gen_range(-1.0..=1.0) } else { 0.0 };
        let last = values[values.len() - 1];
        values.push(last + slope * eps + jump);
    }
    LatticeField::new(values)
}
