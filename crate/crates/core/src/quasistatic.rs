//! Time-discrete quasistatic evolution of the chain under a prescribed end
//! displacement, with irreversible energy in springs that crossed the
//! convexity threshold.
//!
//! The minimizers at each step are known in closed form: `N - 1` springs share
//! one elastic elongation and the last spring carries the rest. States are
//! therefore stored as three numbers and expanded into a lattice field only
//! on request, which keeps runs with 10^6 springs cheap.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::energy::lattice::LatticeField;
use crate::energy::potential::{j_potential, Scaling};
use crate::error::{Error, Result};
use crate::statics::{critical_lambda, overstretch_roots};
use crate::scalar::Real;

/// End displacement `h(t)` with `h(0) = 0`.
#[derive(Clone)]
pub struct LoadProgram<T> {
    h: Arc<dyn Fn(T) -> T + Send + Sync>,
    description: String,
}

impl<T: Real> fmt::Debug for LoadProgram<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LoadProgram").field("description", &self.description).finish()
    }
}

impl<T: Real> LoadProgram<T> {
    /// Wraps `h`; rejects `h(0) ≠ 0`.
    pub fn new(description: impl Into<String>, h: impl Fn(T) -> T + Send + Sync + 'static) -> Result<Self> {
        let p = Self { h: Arc::new(h), description: description.into() };
        let h0 = p.at(T::zero());
        if !(h0.abs() <= T::lit(1e-12)) {
            return Err(Error::InvalidParameter(format!("load must vanish at t = 0, got {h0}")));
        }
        Ok(p)
    }

    pub fn zero() -> Self {
        Self::new("0", |_| T::zero()).expect("zero load")
    }

    /// `h(t) = rate · t`.
    pub fn ramp(rate: T) -> Self {
        Self::new(format!("{rate}*t"), move |t| rate * t).expect("ramp vanishes at 0")
    }

    /// `h(t) = t0 - |t - t0|`.
    pub fn hat(t0: T) -> Self {
        Self::new(format!("hat({t0})"), move |t| t0 - (t - t0).abs()).expect("hat vanishes at 0")
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    #[inline]
    pub fn at(&self, t: T) -> T {
        (self.h)(t)
    }

    /// Sampling test for continuity on `[0, horizon]`: the largest increment
    /// over a grid must shrink when the grid is refined fourfold. A jump
    /// keeps it fixed.
    pub fn check_continuity(&self, horizon: T) -> Result<()> {
        let max_inc = |m: usize| {
            let mut prev = self.at(T::zero());
            let mut worst = T::zero();
            for k in 1..=m {
                let v = self.at(horizon * T::from_count(k) / T::from_count(m));
                if !v.is_finite() {
                    return T::infinity();
                }
                worst = worst.max((v - prev).abs());
                prev = v;
            }
            worst
        };
        let coarse = max_inc(1 << 12);
        let fine = max_inc(1 << 14);
        if !fine.is_finite() || (fine > T::lit(1e-9) && fine > T::lit(0.75) * coarse) {
            return Err(Error::InvalidParameter(format!("load '{}' is not continuous", self.description)));
        }
        Ok(())
    }
}

/// Sparse chain state: springs `1..N-1` share `elastic`, spring `N` carries
/// `last`; `memory` is the largest past elongation of spring `N` once it
/// crossed the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasistaticState<T> {
    pub springs: usize,
    pub step: usize,
    pub load: T,
    pub elastic: T,
    pub last: T,
    /// Zero until the last spring has crossed; non-decreasing afterwards.
    pub memory: T,
    /// Largest `|h|` reached since the crossing.
    pub peak: T,
    pub cracked: bool,
}

impl<T: Real> QuasistaticState<T> {
    pub fn initial(springs: usize) -> Self {
        Self {
            springs,
            step: 0,
            load: T::zero(),
            elastic: T::zero(),
            last: T::zero(),
            memory: T::zero(),
            peak: T::zero(),
            cracked: false,
        }
    }

    /// Per-spring memory, as `(1-based spring index, value)` pairs.
    pub fn memory_entries(&self) -> Vec<(usize, T)> {
        if self.memory > T::zero() {
            vec![(self.springs, self.memory)]
        } else {
            Vec::new()
        }
    }

    /// Expands into nodal values `u_0 = 0, …, u_N = h`.
    pub fn field(&self) -> Result<LatticeField<T>> {
        let n = self.springs;
        let mut v: Vec<T> = (0..n).map(|i| T::from_count(i) * self.elastic).collect();
        v.push(if self.cracked { v[n - 1] + self.last } else { T::from_count(n) * self.elastic });
        LatticeField::new(v)
    }
}

/// Closed-form step rule at spacing `1/N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasistaticModel<T> {
    pub scaling: Scaling<T>,
    pub springs: usize,
    pub h_tilde: T,
    /// When false, the last spring's energy is recoverable (no `∨` term).
    pub dissipation: bool,
}

/// Energy `(1/(ε|log ε|)) J(λ√(ε|log ε|))` of the linear profile.
pub fn uniform_energy<T: Real>(s: &Scaling<T>, lambda: T) -> T {
    j_potential(lambda * s.root()) / (s.root() * s.root())
}

/// Energy of the high overstretched branch at load `λ`.
pub fn overstretch_energy<T: Real>(s: &Scaling<T>, springs: usize, lambda: T) -> Option<T> {
    let (w1, _) = overstretch_roots(s.eps(), lambda).ok()??;
    Some(split_energy(s, springs, lambda.abs() - w1, w1))
}

/// `[(N-1) J(s' (h - w)/(N-1)) + J(s' m)] / |log ε|`, `s' = √(|log ε|/ε)`.
fn split_energy<T: Real>(s: &Scaling<T>, springs: usize, rest: T, stored: T) -> T {
    let m = T::from_count(springs - 1);
    (m * j_potential(s.scaled(rest / m)) + j_potential(s.scaled(stored))) / s.log_abs()
}

/// Load above which one overstretched spring beats the linear profile,
/// bisected on `[critical load, 2]` to `1e-10`.
pub fn h_tilde<T: Real>(eps: T) -> Result<T> {
    let n = crate::energy::probe::springs_for_spacing(eps.to_f64_lossy())?;
    h_tilde_for(&Scaling::from_springs(n)?, n)
}

fn h_tilde_for<T: Real>(s: &Scaling<T>, n: usize) -> Result<T> {
    let gap = |l: T| overstretch_energy(s, n, l).map(|e| uniform_energy(s, l) - e);
    let mut lo = critical_lambda(s.eps())?;
    // the discriminant can round below zero right at the critical load
    for _ in 0..64 {
        if gap(lo).is_some() {
            break;
        }
        lo = lo * (T::one() + T::lit(1e-14));
    }
    let mut hi = T::lit(2.0);
    let (glo, ghi) = (gap(lo), gap(hi));
    match (glo, ghi) {
        (Some(a), Some(b)) if a <= T::zero() && b >= T::zero() => {}
        _ => return Err(Error::BracketFailure { lo: lo.to_f64_lossy(), hi: hi.to_f64_lossy() }),
    }
    while hi - lo > T::lit(1e-10) {
        let mid = (lo + hi) * T::lit(0.5);
        match gap(mid) {
            Some(g) if g < T::zero() => lo = mid,
            _ => hi = mid,
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}

impl<T: Real> QuasistaticModel<T> {
    pub fn new(eps: T) -> Result<Self> {
        if !(eps <= T::lit(1e-2)) {
            return Err(Error::InvalidSpacing(eps.to_f64_lossy()));
        }
        let n = crate::energy::probe::springs_for_spacing(eps.to_f64_lossy())?;
        let scaling = Scaling::from_springs(n)?;
        Ok(Self { scaling, springs: n, h_tilde: h_tilde_for(&scaling, n)?, dissipation: true })
    }

    pub fn without_dissipation(mut self) -> Self {
        self.dissipation = false;
        self
    }

    fn m(&self) -> T {
        T::from_count(self.springs - 1)
    }

    fn uniform(&self, prev: &QuasistaticState<T>, h: T) -> QuasistaticState<T> {
        let e = h / T::from_count(self.springs);
        QuasistaticState { step: prev.step + 1, load: h, elastic: e, last: e, ..*prev }
    }

    fn overstretched(&self, prev: &QuasistaticState<T>, h: T) -> Option<QuasistaticState<T>> {
        let (w1, _) = overstretch_roots(self.scaling.eps(), h).ok()??;
        let w = if h < T::zero() { -w1 } else { w1 };
        Some(QuasistaticState {
            step: prev.step + 1,
            load: h,
            elastic: (h - w) / self.m(),
            last: w,
            memory: if self.dissipation { prev.memory.max(w1) } else { T::zero() },
            peak: prev.peak.max(h.abs()),
            cracked: true,
            springs: self.springs,
        })
    }

    /// Minimizer at the next load value.
    pub fn step(&self, prev: &QuasistaticState<T>, h: T) -> QuasistaticState<T> {
        let a = h.abs();
        if !prev.cracked {
            if a <= self.h_tilde {
                return self.uniform(prev, h);
            }
            return self.overstretched(prev, h).expect("h above the threshold has an overstretched branch");
        }
        if a > prev.peak {
            return self.overstretched(prev, h).expect("reload beyond the peak");
        }
        if !self.dissipation {
            // recoverable energy: follow the local branch while it exists
            let floor = self.scaling.threshold_elongation();
            return match self.overstretched(prev, h) {
                Some(s) if s.last.abs() >= floor => QuasistaticState { peak: prev.peak, ..s },
                _ => QuasistaticState { cracked: false, peak: T::zero(), ..self.uniform(prev, h) },
            };
        }
        // frozen memory: the last spring moves freely inside [-m, m]
        let m = prev.memory;
        let w = h.max(-m).min(m);
        QuasistaticState { step: prev.step + 1, load: h, elastic: (h - w) / self.m(), last: w, ..*prev }
    }

    /// Energy of a state, counting the memory term when dissipation is on.
    pub fn energy(&self, state: &QuasistaticState<T>) -> T {
        let s = &self.scaling;
        if !state.cracked {
            return T::from_count(self.springs) * j_potential(s.scaled(state.elastic)) / s.log_abs();
        }
        let stored = if self.dissipation { state.last.abs().max(state.memory) } else { state.last.abs() };
        (self.m() * j_potential(s.scaled(state.elastic)) + j_potential(s.scaled(stored))) / s.log_abs()
    }
}

/// One-step helper matching [`QuasistaticModel::step`].
pub fn quasistatic_step<T: Real>(model: &QuasistaticModel<T>, state: &QuasistaticState<T>, next_load: T) -> QuasistaticState<T> {
    model.step(state, next_load)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasistaticRow {
    pub k: usize,
    pub t: f64,
    pub load: f64,
    pub energy: f64,
    pub w_last: f64,
    pub memory: f64,
    pub elastic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasistaticTrace<T> {
    pub eps: f64,
    pub tau: f64,
    pub h_tilde: f64,
    pub rows: Vec<QuasistaticRow>,
    pub final_state: QuasistaticState<T>,
}

/// Runs `k = 0..=⌊T/τ⌋`, checking that memory never decreases.
pub fn quasistatic_run<T: Real>(model: &QuasistaticModel<T>, tau: T, load: &LoadProgram<T>, horizon: T) -> Result<QuasistaticTrace<T>> {
    if !(tau > T::zero()) || !(horizon > T::zero()) {
        return Err(Error::InvalidParameter("time step and horizon must be positive".into()));
    }
    let steps = (horizon / tau + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    let mut state = QuasistaticState::initial(model.springs);
    let mut rows = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = T::from_count(k) * tau;
        let h = load.at(t);
        let next = if k == 0 {
            QuasistaticState { step: 0, ..model.step(&state, h) }
        } else {
            model.step(&state, h)
        };
        assert!(next.memory >= state.memory, "memory decreased at step {k}");
        state = next;
        rows.push(QuasistaticRow {
            k,
            t: t.to_f64_lossy(),
            load: h.to_f64_lossy(),
            energy: model.energy(&state).to_f64_lossy(),
            w_last: state.last.to_f64_lossy(),
            memory: state.memory.to_f64_lossy(),
            elastic: state.elastic.to_f64_lossy(),
        });
    }
    Ok(QuasistaticTrace {
        eps: model.scaling.eps().to_f64_lossy(),
        tau: tau.to_f64_lossy(),
        h_tilde: model.h_tilde.to_f64_lossy(),
        rows,
        final_state: state,
    })
}

/// Limit energy on the grid `t_k = kτ`: `h(t)²` until `|h|` first exceeds 1,
/// then 1.
pub fn ms_quasistatic_oracle<T: Real>(load: &LoadProgram<T>, horizon: T, dt: T) -> Vec<(f64, f64)> {
    let steps = (horizon / dt + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    let mut cracked = false;
    (0..=steps)
        .map(|k| {
            let t = T::from_count(k) * dt;
            let h = load.at(t).to_f64_lossy();
            cracked |= h.abs() > 1.0;
            (t.to_f64_lossy(), if cracked { 1.0 } else { h * h })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub h_tilde: f64,
    pub sup_gap: f64,
}

/// `sup_t |E_{τ,ε}(t) - E(t)|` per spacing, plus whether the gaps are
/// non-increasing within 5%.
pub fn quasistatic_convergence_table<T: Real>(
    load: &LoadProgram<T>,
    eps_list: &[T],
    tau: T,
    horizon: T,
) -> Result<(Vec<ConvergenceRow>, bool)> {
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("spacing list must be strictly decreasing".into()));
    }
    let oracle = ms_quasistatic_oracle(load, horizon, tau);
    let mut rows = Vec::new();
    for &eps in eps_list {
        let model = QuasistaticModel::new(eps)?;
        let trace = quasistatic_run(&model, tau, load, horizon)?;
        let sup_gap = trace.rows.iter().zip(&oracle).map(|(r, (_, e))| (r.energy - e).abs()).fold(0.0, f64::max);
        rows.push(ConvergenceRow { eps: eps.to_f64_lossy(), h_tilde: trace.h_tilde, sup_gap });
    }
    let monotone = rows.windows(2).all(|w| w[1].sup_gap <= 1.05 * w[0].sup_gap);
    Ok((rows, monotone))
}
