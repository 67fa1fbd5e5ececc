//! Continuum reconstructions of lattice fields: jump detection, the
//! interpolation that turns overstretched springs into jumps, removal of
//! intermediate increments, and the lower-bound diagnostic.

use serde::Serialize;

use crate::energy::lattice::{pm_energy, LatticeField};
use crate::energy::piecewise::{ms_energy, Piece, PiecewiseH1Function, SampleLayout};
use crate::energy::potential::Scaling;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Difference-quotient thresholds at spacing `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterpolationThresholds<T> {
    pub eps: T,
    /// `1/√(ε|log ε|)`: quotients strictly above it mark a jump.
    pub jump_threshold: T,
    /// `b = (ε|log ε|)^{1/4}`; the lower window edge is `b/√(ε|log ε|)`.
    pub b: T,
    /// `c = ε^p`; the upper window edge is `c/ε`.
    pub c: T,
    /// `p = (log|log ε|)² / |log ε|`.
    pub p: T,
}

impl<T: Real> InterpolationThresholds<T> {
    pub fn new(eps: T) -> Result<Self> {
        if !(eps > T::zero() && eps <= T::lit(1e-2)) {
            return Err(Error::InvalidSpacing(eps.to_f64_lossy()));
        }
        let s = Scaling::new(eps)?;
        Ok(Self::from_scaling(&s))
    }

    /// Thresholds for a lattice with `n ≥ 100` springs.
    pub fn for_springs(n: usize) -> Result<Self> {
        if n < 100 {
            return Err(Error::InvalidSpacing(1.0 / n as f64));
        }
        Ok(Self::from_scaling(&Scaling::from_springs(n)?))
    }

    fn from_scaling(s: &Scaling<T>) -> Self {
        let l = s.log_abs();
        let ll = l.ln();
        let p = ll * ll / l;
        let t = Self {
            eps: s.eps(),
            jump_threshold: s.jump_quotient(),
            b: s.root().sqrt(),
            c: (-p * l).exp(),
            p,
        };
        assert!(t.lower() < t.upper(), "empty intermediate window at eps = {}", s.eps());
        t
    }

    /// `b/√(ε|log ε|)`.
    pub fn lower(&self) -> T {
        let l = -self.eps.ln();
        self.b / (self.eps * l).sqrt()
    }

    /// `c/ε`.
    pub fn upper(&self) -> T {
        self.c / self.eps
    }

    fn check_field(&self, field: &LatticeField<T>) -> Result<()> {
        if (field.spacing() - self.eps).abs() > self.eps * T::lit(1e-12) {
            return Err(Error::InvalidParameter("thresholds built for a different spacing".into()));
        }
        Ok(())
    }
}

/// Spring indices `i ∈ 0..N` (spring `i` joins nodes `i` and `i+1`) sorted
/// into the jump set and the three gradient classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexPartition {
    pub jump: Vec<usize>,
    pub intermediate: Vec<usize>,
    /// Computed on the collapsed field, so `flat ∪ steep` is all springs.
    pub flat: Vec<usize>,
    pub steep: Vec<usize>,
}

impl IndexPartition {
    /// Per-spring labels for debugging dumps.
    pub fn labels(&self, springs: usize) -> Vec<String> {
        let mut out = vec![String::new(); springs];
        let mut tag = |set: &[usize], name: &str| {
            for &i in set {
                if !out[i].is_empty() {
                    out[i].push('+');
                }
                out[i].push_str(name);
            }
        };
        tag(&self.jump, "jump");
        tag(&self.intermediate, "intermediate");
        tag(&self.flat, "flat");
        tag(&self.steep, "steep");
        out
    }
}

fn quotients<T: Real>(field: &LatticeField<T>) -> Vec<T> {
    let n = T::from_count(field.springs());
    field.elongations().into_iter().map(|d| d.abs() * n).collect()
}

fn select<T: Real>(q: &[T], keep: impl Fn(T) -> bool) -> Vec<usize> {
    q.iter().enumerate().filter(|(_, &v)| keep(v)).map(|(i, _)| i).collect()
}

pub fn jump_indices<T: Real>(field: &LatticeField<T>, t: &InterpolationThresholds<T>) -> Vec<usize> {
    select(&quotients(field), |v| v > t.jump_threshold)
}

pub fn intermediate_indices<T: Real>(field: &LatticeField<T>, t: &InterpolationThresholds<T>) -> Vec<usize> {
    let (lo, hi) = (t.lower(), t.upper());
    select(&quotients(field), |v| v >= lo && v <= hi)
}

pub fn partition_indices<T: Real>(field: &LatticeField<T>, t: &InterpolationThresholds<T>) -> Result<IndexPartition> {
    t.check_field(field)?;
    let q = quotients(field);
    let jump = select(&q, |v| v > t.jump_threshold);
    let intermediate = select(&q, |v| v >= t.lower() && v <= t.upper());
    let collapsed = collapse_intermediate(field, t)?;
    let qc = quotients(&collapsed);
    let flat = select(&qc, |v| v <= t.lower());
    let steep = select(&qc, |v| v >= t.upper());
    Ok(IndexPartition { jump, intermediate, flat, steep })
}

/// JSON dump with thresholds and per-spring labels.
pub fn partition_json<T: Real>(field: &LatticeField<T>, t: &InterpolationThresholds<T>) -> Result<serde_json::Value> {
    let p = partition_indices(field, t)?;
    Ok(serde_json::json!({
        "eps": t.eps.to_f64_lossy(),
        "p": t.p.to_f64_lossy(),
        "b": t.b.to_f64_lossy(),
        "c": t.c.to_f64_lossy(),
        "jump_threshold": t.jump_threshold.to_f64_lossy(),
        "lower": t.lower().to_f64_lossy(),
        "upper": t.upper().to_f64_lossy(),
        "labels": p.labels(field.springs()),
    }))
}

/// Removes every intermediate increment: scanning left to right, the tail
/// after each such spring is shifted down by that spring's increment. Other
/// increments are kept.
pub fn collapse_intermediate<T: Real>(field: &LatticeField<T>, t: &InterpolationThresholds<T>) -> Result<LatticeField<T>> {
    t.check_field(field)?;
    let window = intermediate_indices(field, t);
    if window.is_empty() {
        return Ok(field.clone());
    }
    let u = field.values();
    let mut out = Vec::with_capacity(u.len());
    let mut shift = T::zero();
    let mut next = window.iter().peekable();
    out.push(u[0]);
    for i in 0..field.springs() {
        if next.peek() == Some(&&i) {
            next.next();
            shift = shift + (u[i + 1] - u[i]);
        }
        out.push(u[i + 1] - shift);
    }
    field.with_values(out)
}

/// Piecewise-affine reconstruction that is constant on the flagged cells.
/// A constant cell `i` ends in a jump at `(i+1)ε` unless it is the last cell.
fn reconstruct<T: Real>(field: &LatticeField<T>, constant: &[usize]) -> Result<PiecewiseH1Function<T>> {
    let n = field.springs();
    let u = field.values();
    let mut is_const = vec![false; n];
    for &i in constant {
        is_const[i] = true;
    }
    let mut jumps = Vec::new();
    let mut pieces = Vec::new();
    let mut nodes = Vec::new();
    for i in 0..n {
        nodes.push(u[i]);
        if is_const[i] {
            nodes.push(u[i]);
            if i + 1 < n {
                jumps.push(T::from_count(i + 1) / T::from_count(n));
                pieces.push(Piece::Sampled { values: std::mem::take(&mut nodes), layout: SampleLayout::Nodes });
            }
        } else if i + 1 == n {
            nodes.push(u[n]);
        }
    }
    if !nodes.is_empty() {
        pieces.push(Piece::Sampled { values: nodes, layout: SampleLayout::Nodes });
    }
    PiecewiseH1Function::new(jumps, pieces)
}

/// Constant on jump springs, affine elsewhere; jumps at `(i+1)ε` for jump
/// springs `i < N-1`.
pub fn chambolle_interpolation<T: Real>(field: &LatticeField<T>, t: &InterpolationThresholds<T>) -> Result<PiecewiseH1Function<T>> {
    t.check_field(field)?;
    reconstruct(field, &jump_indices(field, t))
}

/// Affine on flat springs, constant on steep ones. Requires a field without
/// intermediate increments.
pub fn mixed_extension<T: Real>(field: &LatticeField<T>, t: &InterpolationThresholds<T>) -> Result<PiecewiseH1Function<T>> {
    t.check_field(field)?;
    let window = intermediate_indices(field, t);
    if !window.is_empty() {
        return Err(Error::NotCollapsed(window.len()));
    }
    let steep = select(&quotients(field), |v| v >= t.upper());
    reconstruct(field, &steep)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `F_ε(u) ≥ (1 - δ)(∫|w'|² + #S(w))` with `w` the mixed extension of the
/// collapsed field.
pub fn ms_lower_bound_check<T: Real>(field: &LatticeField<T>, t: &InterpolationThresholds<T>, delta: T) -> Result<LowerBoundReport> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::InvalidParameter(format!("delta {delta} outside (0, 1)")));
    }
    let w = mixed_extension(&collapse_intermediate(field, t)?, t)?;
    let lhs = pm_energy(field);
    let rhs = (T::one() - delta) * ms_energy(&w)?;
    Ok(LowerBoundReport { lhs: lhs.to_f64_lossy(), rhs: rhs.to_f64_lossy(), holds: lhs >= rhs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpCountBound {
    pub count: usize,
    /// `F_ε(u) |log ε| / log 2`.
    pub bound: f64,
}

pub fn jump_count_bound<T: Real>(field: &LatticeField<T>, t: &InterpolationThresholds<T>) -> Result<JumpCountBound> {
    t.check_field(field)?;
    let count = jump_indices(field, t).len();
    let l = field.scaling().log_abs();
    let bound = (pm_energy(field) * l / T::LN_2()).to_f64_lossy();
    assert!(count as f64 <= bound + 1e-9, "jump count {count} exceeds bound {bound}");
    Ok(JumpCountBound { count, bound })
}
