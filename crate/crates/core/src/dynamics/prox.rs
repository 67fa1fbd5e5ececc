use serde::Serialize;

use crate::energy::lattice::{pm_energy, pm_energy_difference, pm_gradient, pm_hessian, LatticeField};
use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum_by, Real};
use crate::tridiag::SymTridiagonal;

use super::{flux_field, jump_springs};

const FALLBACK_ITERATIONS: usize = 500;
const MAX_HALVINGS: usize = 30;

/// Parameters of a minimizing-movement run.
#[derive(Debug, Clone, Serialize)]
pub struct MMConfig {
    pub tau: f64,
    pub horizon: f64,
    /// Sup norm of the displacement-form residual `v - u + (τ/ε)∇F_ε(v)`.
    pub solver_tol: f64,
    pub max_newton_iters: usize,
    /// Minimum jump size tracked by the persistence check.
    pub jump_floor: f64,
    pub allow_unstable: bool,
    /// Keep every `record_stride`-th state (the last one is always kept).
    pub record_stride: usize,
    /// Flux snapshots every `flux_stride` steps.
    pub flux_stride: usize,
}

impl MMConfig {
    pub fn new(tau: f64, horizon: f64) -> Self {
        Self {
            tau,
            horizon,
            solver_tol: 1e-12,
            max_newton_iters: 50,
            jump_floor: 0.1,
            allow_unstable: false,
            record_stride: 0,
            flux_stride: 100,
        }
    }

    /// `⌈T/τ⌉` steps, ignoring round-off in the ratio.
    pub fn steps(&self) -> usize {
        let r = self.horizon / self.tau;
        let k = r.round();
        if (r - k).abs() <= 1e-9 * r.max(1.0) {
            k as usize
        } else {
            r.ceil() as usize
        }
    }

    /// `4τ/ε²`; the discrete maximum principle and the jump-set inclusion need
    /// it below 1.
    pub fn stability_ratio(&self, springs: usize) -> f64 {
        let n = springs as f64;
        4.0 * self.tau * n * n
    }

    fn stride(&self) -> usize {
        if self.record_stride > 0 {
            self.record_stride
        } else {
            (self.steps() / 100).max(1)
        }
    }
}

/// A per-step check that failed beyond its round-off slack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepViolation {
    pub step: usize,
    pub invariant: &'static str,
    pub excess: f64,
}

/// Everything recorded along a run.
#[derive(Debug, Clone, Serialize)]
pub struct EvolutionTrace<T> {
    pub springs: usize,
    pub tau: f64,
    /// `F_ε(u^k)` for `k = 0..=steps`.
    pub energies: Vec<f64>,
    pub sup_norms: Vec<f64>,
    /// Jump springs (0-based) of every state.
    pub jump_sets: Vec<Vec<usize>>,
    /// `(k, u^k)` at the recording stride, always including `k = 0` and the last step.
    pub recorded: Vec<(usize, LatticeField<T>)>,
    pub flux_snapshots: Vec<(usize, Vec<T>)>,
    pub violations: Vec<StepViolation>,
    /// Set when the run went ahead with `4τ/ε² ≥ 1`.
    pub tainted: bool,
    pub stability_ratio: f64,
    pub newton_iterations: usize,
    pub fallbacks: usize,
    /// Smallest `2τ(F(u^{k-1}) - F(u^k)) - Σ ε|u^k - u^{k-1}|²` seen.
    pub min_dissipation_margin: f64,
}

impl<T: Real> EvolutionTrace<T> {
    pub fn final_state(&self) -> &LatticeField<T> {
        &self.recorded.last().expect("trace always holds the initial state").1
    }

    pub fn initial_state(&self) -> &LatticeField<T> {
        &self.recorded[0].1
    }

    pub fn steps(&self) -> usize {
        self.energies.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.tau
    }

    pub fn violations_of(&self, invariant: &str) -> usize {
        self.violations.iter().filter(|v| v.invariant == invariant).count()
    }
}

struct SolveStats {
    newton: usize,
    fallback: bool,
}

fn residual<T: Real>(prev: &[T], v: &LatticeField<T>, ratio: T) -> Vec<T> {
    let g = pm_gradient(v);
    v.values().iter().zip(prev).zip(&g).map(|((&vi, &ui), &gi)| vi - ui + ratio * gi).collect()
}

fn sup<T: Real>(r: &[T]) -> T {
    r.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

fn newton<T: Real>(
    prev: &[T],
    mut v: LatticeField<T>,
    ratio: T,
    tol: T,
    max_iters: usize,
    iters: &mut usize,
) -> Result<(LatticeField<T>, T)> {
    let mut r = residual(prev, &v, ratio);
    let mut norm = sup(&r);
    for _ in 0..max_iters {
        if norm <= tol {
            break;
        }
        *iters += 1;
        let h = pm_hessian(&v);
        let diag = h.diag.iter().map(|&d| T::one() + ratio * d).collect();
        let off = h.off.iter().map(|&o| ratio * o).collect();
        let jac = SymTridiagonal::new(diag, off);
        let rhs: Vec<T> = r.iter().map(|&x| -x).collect();
        let Some(delta) = jac.solve(&rhs) else { break };
        let mut alpha = T::one();
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<T> = v.values().iter().zip(&delta).map(|(&a, &d)| a + alpha * d).collect();
            if trial.iter().all(|x| x.is_finite()) {
                let cand = v.with_values(trial)?;
                let rc = residual(prev, &cand, ratio);
                let nc = sup(&rc);
                if nc < norm {
                    v = cand;
                    r = rc;
                    norm = nc;
                    accepted = true;
                    break;
                }
            }
            alpha = alpha * T::lit(0.5);
        }
        if !accepted {
            break;
        }
    }
    Ok((v, norm))
}

fn solve<T: Real>(prev: &LatticeField<T>, guess: LatticeField<T>, cfg: &MMConfig) -> Result<(LatticeField<T>, SolveStats)> {
    let eps = prev.spacing();
    let tau = T::lit(cfg.tau);
    let ratio = tau / eps;
    let tol = T::lit(cfg.solver_tol);
    let mut stats = SolveStats { newton: 0, fallback: false };
    let (v, norm) = newton(prev.values(), guess, ratio, tol, cfg.max_newton_iters, &mut stats.newton)?;
    if norm <= tol {
        return Ok((v, stats));
    }
    // gradient descent with the step of the global Lipschitz bound `ε/τ + 8/ε`
    stats.fallback = true;
    let damp = T::one() / (T::one() + T::lit(8.0) * tau / (eps * eps));
    let mut v = v;
    for _ in 0..FALLBACK_ITERATIONS {
        let r = residual(prev.values(), &v, ratio);
        let next = v.values().iter().zip(&r).map(|(&a, &ri)| a - damp * ri).collect();
        v = v.with_values(next)?;
    }
    let (v, norm) = newton(prev.values(), v, ratio, tol, cfg.max_newton_iters, &mut stats.newton)?;
    if norm <= tol {
        Ok((v, stats))
    } else {
        Err(Error::NoConvergence { iterations: stats.newton + FALLBACK_ITERATIONS, residual: norm.to_f64_lossy() })
    }
}

fn check_ratio(springs: usize, cfg: &MMConfig) -> Result<bool> {
    if !(cfg.tau > 0.0 && cfg.tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {}", cfg.tau)));
    }
    let ratio = cfg.stability_ratio(springs);
    if ratio >= 1.0 && !cfg.allow_unstable {
        return Err(Error::Unstable { ratio });
    }
    Ok(ratio >= 1.0)
}

/// One proximal step from `prev`, started at `prev`.
pub fn prox_step<T: Real>(prev: &LatticeField<T>, cfg: &MMConfig) -> Result<LatticeField<T>> {
    prox_step_from(prev, prev.clone(), cfg)
}

/// One proximal step from `prev` with an explicit initial guess for the solver.
pub fn prox_step_from<T: Real>(prev: &LatticeField<T>, guess: LatticeField<T>, cfg: &MMConfig) -> Result<LatticeField<T>> {
    check_ratio(prev.springs(), cfg)?;
    if guess.springs() != prev.springs() {
        return Err(Error::LengthMismatch { expected: prev.springs() + 1, got: guess.springs() + 1 });
    }
    Ok(solve(prev, guess, cfg)?.0)
}

/// Runs `⌈T/τ⌉` proximal steps from `u0`.
pub fn minimizing_movement<T: Real>(u0: &LatticeField<T>, cfg: &MMConfig) -> Result<EvolutionTrace<T>> {
    minimizing_movement_with(u0, cfg, |_, _| {})
}

/// As [`minimizing_movement`], calling `observe(k, u^k)` after every step.
pub fn minimizing_movement_with<T: Real>(
    u0: &LatticeField<T>,
    cfg: &MMConfig,
    mut observe: impl FnMut(usize, &LatticeField<T>),
) -> Result<EvolutionTrace<T>> {
    let tainted = check_ratio(u0.springs(), cfg)?;
    let steps = cfg.steps();
    let stride = cfg.stride();
    let eps = u0.spacing();
    let tau = T::lit(cfg.tau);
    let mut trace = EvolutionTrace {
        springs: u0.springs(),
        tau: cfg.tau,
        energies: vec![pm_energy(u0).to_f64_lossy()],
        sup_norms: vec![u0.sup_norm().to_f64_lossy()],
        jump_sets: vec![jump_springs(u0)],
        recorded: vec![(0, u0.clone())],
        flux_snapshots: vec![(0, flux_field(u0))],
        violations: Vec::new(),
        tainted,
        stability_ratio: cfg.stability_ratio(u0.springs()),
        newton_iterations: 0,
        fallbacks: 0,
        min_dissipation_margin: f64::INFINITY,
    };
    let mut u = u0.clone();
    let mut energy = pm_energy(u0);
    let mut supn = u0.sup_norm();
    for k in 1..=steps {
        let (v, stats) = solve(&u, u.clone(), cfg)?;
        trace.newton_iterations += stats.newton;
        trace.fallbacks += usize::from(stats.fallback);

        // F(v) - F(u) spring by spring; dissipation Σ ε|v - u|²
        let drop = -pm_energy_difference(&u, &v);
        let diss = eps * pairwise_sum_by(v.values().len(), |i| {
            let d = v.values()[i] - u.values()[i];
            d * d
        });
        let e_slack = T::lit(1e-13) * energy.abs() + T::min_positive_value();
        if drop < -e_slack {
            trace.violations.push(StepViolation { step: k, invariant: "energy-decrease", excess: (-drop).to_f64_lossy() });
        }
        let bound = T::lit(2.0) * tau * drop;
        let margin = bound - diss;
        let d_slack = T::lit(1e-9) * diss.max(bound.abs()) + T::lit(64.0) * T::epsilon() * tau * energy.abs();
        if margin < -d_slack {
            trace.violations.push(StepViolation { step: k, invariant: "dissipation", excess: (-margin).to_f64_lossy() });
        }
        trace.min_dissipation_margin = trace.min_dissipation_margin.min(margin.to_f64_lossy());
        let vsup = v.sup_norm();
        let s_slack = T::lit(10.0 * cfg.solver_tol) * supn.max(T::one());
        if vsup > supn + s_slack {
            trace.violations.push(StepViolation { step: k, invariant: "max-principle", excess: (vsup - supn).to_f64_lossy() });
        }

        energy = energy - drop;
        supn = vsup;
        trace.energies.push(energy.to_f64_lossy());
        trace.sup_norms.push(vsup.to_f64_lossy());
        trace.jump_sets.push(jump_springs(&v));
        if cfg.flux_stride > 0 && k % cfg.flux_stride == 0 {
            trace.flux_snapshots.push((k, flux_field(&v)));
        }
        if k % stride == 0 || k == steps {
            trace.recorded.push((k, v.clone()));
        }
        observe(k, &v);
        u = v;
    }
    Ok(trace)
}
