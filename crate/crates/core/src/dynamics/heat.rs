//! Reference solution of `u_t = 2 u_xx` on each interval between the jumps of
//! the initial datum, with homogeneous Neumann conditions on both sides of
//! every jump.

use crate::energy::piecewise::{Piece, PiecewiseH1Function, SampleLayout};
use crate::error::{Error, Result};
use crate::quadrature::gauss3;
use crate::scalar::Real;
use crate::tridiag::SymTridiagonal;

/// Finite-volume cells per interval.
pub const HEAT_CELLS: usize = 2048;
/// Crank-Nicolson steps over the horizon.
pub const HEAT_STEPS: usize = 4096;

/// Cell-centred finite volumes with Crank-Nicolson in time. The scheme keeps
/// `h Σ c_j` on every interval up to rounding, so the returned function has the
/// same mass per interval as `u0`.
pub fn heat_oracle<T: Real>(u0: &PiecewiseH1Function<T>, horizon: T) -> Result<PiecewiseH1Function<T>> {
    if !(horizon >= T::zero()) || !horizon.is_finite() {
        return Err(Error::InvalidParameter(format!("horizon must be non-negative, got {horizon}")));
    }
    let m = HEAT_CELLS;
    let dt = horizon / T::from_count(HEAT_STEPS);
    let pieces = (0..u0.pieces().len())
        .map(|k| {
            let (a, b) = u0.interval(k);
            let h = (b - a) / T::from_count(m);
            let mut c: Vec<T> = (0..m)
                .map(|j| {
                    let x0 = a + h * T::from_count(j);
                    gauss3(|x| u0.eval(x), x0, x0 + h) / h
                })
                .collect();
            if dt > T::zero() {
                // A = 2 Δ_h with reflecting ends; CN: (I - dt/2 A) c' = (I + dt/2 A) c
                let r = dt / (h * h);
                let mut diag = vec![T::one() + T::lit(2.0) * r; m];
                diag[0] = T::one() + r;
                diag[m - 1] = T::one() + r;
                let lhs = SymTridiagonal::new(diag, vec![-r; m - 1]);
                for _ in 0..HEAT_STEPS {
                    let rhs: Vec<T> = (0..m)
                        .map(|j| {
                            let left = if j > 0 { c[j - 1] - c[j] } else { T::zero() };
                            let right = if j + 1 < m { c[j + 1] - c[j] } else { T::zero() };
                            c[j] + r * (left + right)
                        })
                        .collect();
                    c = lhs.solve(&rhs).ok_or_else(|| Error::InvalidParameter("singular heat system".into()))?;
                }
            }
            Ok(Piece::Sampled { values: c, layout: SampleLayout::Cells })
        })
        .collect::<Result<Vec<_>>>()?;
    PiecewiseH1Function::new(u0.jumps().to_vec(), pieces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn cosine_decays_at_the_neumann_rate() {
        let u0 = PiecewiseH1Function::smooth(Piece::callable(|x: f64| (PI * x).cos(), |x: f64| -PI * (PI * x).sin())).unwrap();
        let u = heat_oracle(&u0, 0.01).unwrap();
        // mpmath: exp(-2 π² 0.01)
        let decay = 0.820_868_717_415_540;
        for x in [0.1, 0.3, 0.77] {
            assert_relative_eq!(u.eval(x), decay * (PI * x).cos(), epsilon = 1e-6);
        }
    }

    #[test]
    fn mass_is_kept_on_each_side_of_a_jump() {
        let u0 = PiecewiseH1Function::new(
            vec![0.5],
            vec![
                Piece::callable(|x: f64| (2.0 * PI * x).cos(), |x: f64| -2.0 * PI * (2.0 * PI * x).sin()),
                Piece::callable(|x: f64| 3.0 + (2.0 * PI * x).cos(), |x: f64| -2.0 * PI * (2.0 * PI * x).sin()),
            ],
        )
        .unwrap();
        let u = heat_oracle(&u0, 0.01).unwrap();
        assert_relative_eq!(u.piece_integral(0).unwrap(), 0.0, epsilon = 1e-10);
        assert_relative_eq!(u.piece_integral(1).unwrap(), 1.5, epsilon = 1e-10);
        // mpmath: exp(-8 π² 0.01)
        assert_relative_eq!(u.eval(0.1), 0.454_040_738_727_245 * (0.2 * PI).cos(), epsilon = 1e-6);
    }
}
