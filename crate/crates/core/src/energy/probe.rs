//! Numerical illustration of the discrete-to-continuum limit: lattice energy of
//! a sampled function against its Mumford-Shah energy.

use serde::Serialize;

use crate::energy::lattice::pm_energy;
use crate::energy::piecewise::{ms_energy, PiecewiseH1Function};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Number of springs `N` with `ε = 1/N`. Rejects spacings that are not the
/// reciprocal of an integer to relative precision 1e-9.
pub fn springs_for_spacing(eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidSpacing(eps));
    }
    let n = (1.0 / eps).round();
    if (n * eps - 1.0).abs() > 1e-9 || n > usize::MAX as f64 {
        return Err(Error::InvalidSpacing(eps));
    }
    let n = n as usize;
    if n < 2 {
        return Err(Error::TooFewSprings(n));
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub eps: f64,
    pub springs: usize,
    pub lattice_energy: f64,
    pub ms_energy: f64,
    pub gap: f64,
}

/// Tabulates `(ε, F_ε(sample_ε u), M_s(u), |F_ε - M_s|)` for a decreasing
/// list of spacings.
pub fn gamma_probe<T: Real>(u: &PiecewiseH1Function<T>, eps_list: &[f64]) -> Result<Vec<ProbeRow>> {
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("spacing list must be strictly decreasing".into()));
    }
    let limit = ms_energy(u)?;
    eps_list
        .iter()
        .map(|&eps| {
            let springs = springs_for_spacing(eps)?;
            let field = u.sample_lattice(springs)?;
            let f = pm_energy(&field);
            Ok(ProbeRow {
                eps,
                springs,
                lattice_energy: f.to_f64_lossy(),
                ms_energy: limit.to_f64_lossy(),
                gap: (f - limit).abs().to_f64_lossy(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_gaps_shrink() {
        let rows = gamma_probe(&PiecewiseH1Function::linear(1.0f64), &[1e-3, 1e-4, 1e-5]).unwrap();
        assert!(rows[0].gap <= 0.01);
        assert!(rows.windows(2).all(|w| w[1].gap < w[0].gap));
    }

    #[test]
    fn unit_step_gap_at_one_in_a_million() {
        let u = PiecewiseH1Function::step(0.5f64, 1.0).unwrap();
        let rows = gamma_probe(&u, &[1e-6]).unwrap();
        // mpmath: (1/L) log(1 + L/eps) - 1 with L = |log 1e-6|
        assert_relative_eq!(rows[0].gap, 0.190_061_161_753_065, max_relative = 1e-9);
    }

    #[test]
    fn constant_gaps_vanish() {
        let rows = gamma_probe(&PiecewiseH1Function::constant(2.5f64), &[1e-2, 1e-3]).unwrap();
        assert!(rows.iter().all(|r| r.gap == 0.0));
    }

    #[test]
    fn spacing_list_must_decrease() {
        assert!(gamma_probe(&PiecewiseH1Function::constant(0.0f64), &[1e-3, 1e-2]).is_err());
        assert!(springs_for_spacing(0.3).is_err());
        assert_eq!(springs_for_spacing(1e-6).unwrap(), 1_000_000);
    }
}
