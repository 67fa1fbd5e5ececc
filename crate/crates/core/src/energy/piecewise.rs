//! Piecewise-`H¹` functions on `[0, 1]` with a finite jump set, and the
//! Mumford-Shah energy `∫|u'|² + #S(u)`.

use std::fmt;
use std::sync::Arc;

use crate::energy::lattice::LatticeField;
use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::scalar::{pairwise_sum_by, Real};

/// Real function of one variable, shareable across threads.
pub type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Where the samples of a [`Piece::Sampled`] profile sit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleLayout {
    /// `m + 1` values at `a + j h`, `j = 0..=m`; linear interpolation.
    Nodes,
    /// `m` cell averages centred at `a + (j + ½) h`; linear between centres,
    /// constant in the two boundary half cells. Integrates to `h Σ c_j`.
    Cells,
}

/// Profile on one interval between consecutive jumps.
#[derive(Clone)]
pub enum Piece<T> {
    /// `u(x) = value + slope (x - a)` on `[a, b]`.
    Affine { value: T, slope: T },
    /// Uniformly sampled profile over the interval.
    Sampled { values: Vec<T>, layout: SampleLayout },
    /// Closed-form profile with its derivative.
    Callable { f: ScalarFn<T>, df: ScalarFn<T> },
}

impl<T: fmt::Debug> fmt::Debug for Piece<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Piece::Affine { value, slope } => {
                f.debug_struct("Affine").field("value", value).field("slope", slope).finish()
            }
            Piece::Sampled { values, layout } => f
                .debug_struct("Sampled")
                .field("len", &values.len())
                .field("layout", layout)
                .finish(),
            Piece::Callable { .. } => f.write_str("Callable"),
        }
    }
}

impl<T: Real> Piece<T> {
    pub fn constant(c: T) -> Self {
        Piece::Affine { value: c, slope: T::zero() }
    }

    pub fn callable(
        f: impl Fn(T) -> T + Send + Sync + 'static,
        df: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Piece::Callable { f: Arc::new(f), df: Arc::new(df) }
    }

    fn check(&self) -> Result<()> {
        if let Piece::Sampled { values, layout } = self {
            let min = match layout {
                SampleLayout::Nodes => 2,
                SampleLayout::Cells => 1,
            };
            if values.len() < min {
                return Err(Error::InvalidJumps(format!(
                    "sampled piece needs at least {min} values"
                )));
            }
            if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        Ok(())
    }

    fn eval(&self, a: T, b: T, x: T) -> T {
        match self {
            Piece::Affine { value, slope } => *value + *slope * (x - a),
            Piece::Callable { f, .. } => f(x),
            Piece::Sampled { values, layout } => {
                let (offset, cells) = match layout {
                    SampleLayout::Nodes => (T::zero(), values.len() - 1),
                    SampleLayout::Cells => (T::lit(0.5), values.len()),
                };
                let h = (b - a) / T::from_count(cells);
                let s = (x - a) / h - offset;
                let last = values.len() - 1;
                if s <= T::zero() {
                    return values[0];
                }
                let j = s.floor().to_usize().unwrap_or(last).min(last);
                if j >= last {
                    return values[last];
                }
                let t = s - T::from_count(j);
                values[j] + (values[j + 1] - values[j]) * t
            }
        }
    }

    fn dirichlet(&self, a: T, b: T, tol: T) -> Result<T> {
        match self {
            Piece::Affine { slope, .. } => Ok(*slope * *slope * (b - a)),
            Piece::Sampled { values, layout } => {
                let cells = match layout {
                    SampleLayout::Nodes => values.len() - 1,
                    SampleLayout::Cells => values.len(),
                };
                let h = (b - a) / T::from_count(cells);
                let s = pairwise_sum_by(values.len() - 1, |j| {
                    let d = values[j + 1] - values[j];
                    d * d
                });
                Ok(s / h)
            }
            Piece::Callable { df, .. } => adaptive_simpson(
                |x| {
                    let d = df(x);
                    d * d
                },
                a,
                b,
                tol,
                48,
            )
            .ok_or(Error::NonIntegrable { a: a.to_f64_lossy(), b: b.to_f64_lossy() }),
        }
    }

    fn integral(&self, a: T, b: T, tol: T) -> Option<T> {
        match self {
            Piece::Affine { value, slope } => {
                let w = b - a;
                Some(*value * w + *slope * w * w * T::lit(0.5))
            }
            Piece::Sampled { values, layout } => match layout {
                SampleLayout::Nodes => {
                    let m = values.len() - 1;
                    let h = (b - a) / T::from_count(m);
                    let inner = pairwise_sum_by(m + 1, |j| values[j]);
                    Some(h * (inner - (values[0] + values[m]) * T::lit(0.5)))
                }
                SampleLayout::Cells => {
                    let h = (b - a) / T::from_count(values.len());
                    Some(h * pairwise_sum_by(values.len(), |j| values[j]))
                }
            },
            Piece::Callable { f, .. } => adaptive_simpson(|x| f(x), a, b, tol, 48),
        }
    }
}

/// Function on `[0, 1]` that is `H¹` away from finitely many jump points.
///
/// `pieces[k]` lives on `[breaks[k], breaks[k+1]]` where the breaks are
/// `0, jumps…, 1`. Point evaluation at a jump returns the right trace.
#[derive(Clone, Debug)]
pub struct PiecewiseH1Function<T> {
    jumps: Vec<T>,
    pieces: Vec<Piece<T>>,
}

impl<T: Real> PiecewiseH1Function<T> {
    pub fn new(jumps: Vec<T>, pieces: Vec<Piece<T>>) -> Result<Self> {
        if pieces.len() != jumps.len() + 1 {
            return Err(Error::InvalidJumps(format!(
                "{} jumps need {} pieces, got {}",
                jumps.len(),
                jumps.len() + 1,
                pieces.len()
            )));
        }
        let mut prev = T::zero();
        for &x in &jumps {
            if !(x > prev && x < T::one()) {
                return Err(Error::InvalidJumps(format!(
                    "position {x} is not strictly increasing inside (0, 1)"
                )));
            }
            prev = x;
        }
        for p in &pieces {
            p.check()?;
        }
        Ok(Self { jumps, pieces })
    }

    /// Function without jumps.
    pub fn smooth(piece: Piece<T>) -> Result<Self> {
        Self::new(Vec::new(), vec![piece])
    }

    /// `u(x) = λx`.
    pub fn linear(lambda: T) -> Self {
        Self { jumps: Vec::new(), pieces: vec![Piece::Affine { value: T::zero(), slope: lambda }] }
    }

    pub fn constant(c: T) -> Self {
        Self { jumps: Vec::new(), pieces: vec![Piece::constant(c)] }
    }

    /// `height · χ_[x0, 1)`.
    pub fn step(x0: T, height: T) -> Result<Self> {
        Self::new(vec![x0], vec![Piece::constant(T::zero()), Piece::constant(height)])
    }

    pub fn jumps(&self) -> &[T] {
        &self.jumps
    }

    pub fn pieces(&self) -> &[Piece<T>] {
        &self.pieces
    }

    /// Interval `[a, b]` of piece `k`.
    pub fn interval(&self, k: usize) -> (T, T) {
        let a = if k == 0 { T::zero() } else { self.jumps[k - 1] };
        let b = if k == self.jumps.len() { T::one() } else { self.jumps[k] };
        (a, b)
    }

    fn piece_index(&self, x: T) -> usize {
        self.jumps.partition_point(|&j| j <= x)
    }

    pub fn eval(&self, x: T) -> T {
        let k = self.piece_index(x);
        let (a, b) = self.interval(k);
        self.pieces[k].eval(a, b, x)
    }

    /// One-sided traces `(u⁻, u⁺)` at jump `k`.
    pub fn traces(&self, k: usize) -> (T, T) {
        let x = self.jumps[k];
        let (a, _) = self.interval(k);
        let (_, b) = self.interval(k + 1);
        (self.pieces[k].eval(a, x, x), self.pieces[k + 1].eval(x, b, x))
    }

    /// `|u⁺ - u⁻|` at every jump.
    pub fn jump_sizes(&self) -> Vec<T> {
        (0..self.jumps.len())
            .map(|k| {
                let (l, r) = self.traces(k);
                (r - l).abs()
            })
            .collect()
    }

    /// `∫|u'|²` over `[0, 1] \ S(u)`, adaptive quadrature at `tol` per piece.
    pub fn dirichlet_energy_tol(&self, tol: T) -> Result<T> {
        let mut total = T::zero();
        for (k, p) in self.pieces.iter().enumerate() {
            let (a, b) = self.interval(k);
            total = total + p.dirichlet(a, b, tol)?;
        }
        Ok(total)
    }

    pub fn dirichlet_energy(&self) -> Result<T> {
        self.dirichlet_energy_tol(T::lit(1e-10))
    }

    /// `∫` of piece `k` over its interval.
    pub fn piece_integral(&self, k: usize) -> Option<T> {
        let (a, b) = self.interval(k);
        self.pieces[k].integral(a, b, T::lit(1e-12))
    }

    /// Lattice samples `u(i/N)`. A node sitting on a jump takes the right
    /// trace, so the jump is carried by the spring whose right node is the
    /// first node at or past the jump.
    pub fn sample_lattice(&self, springs: usize) -> Result<LatticeField<T>> {
        LatticeField::from_fn(springs, |x| self.eval(x))
    }
}

/// Mumford-Shah energy `∫|u'|² + #S(u)`.
pub fn ms_energy<T: Real>(u: &PiecewiseH1Function<T>) -> Result<T> {
    Ok(u.dirichlet_energy()? + T::from_count(u.jumps().len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_energy_is_slope_squared() {
        assert_relative_eq!(ms_energy(&PiecewiseH1Function::linear(2.0f64)).unwrap(), 4.0);
    }

    #[test]
    fn step_energy_is_one() {
        for &x0 in &[0.1f64, 0.5, 0.93] {
            assert_eq!(ms_energy(&PiecewiseH1Function::step(x0, 1.0).unwrap()).unwrap(), 1.0);
        }
    }

    #[test]
    fn broken_ramp_counts_dirichlet_and_jump() {
        let u = PiecewiseH1Function::new(
            vec![0.5f64],
            vec![
                Piece::Affine { value: 0.0, slope: 1.0 },
                Piece::Affine { value: 1.5, slope: 1.0 },
            ],
        )
        .unwrap();
        assert_relative_eq!(ms_energy(&u).unwrap(), 2.0, epsilon = 1e-14);
        assert_eq!(u.traces(0), (0.5, 1.5));
        assert_eq!(u.jump_sizes(), vec![1.0]);
    }

    #[test]
    fn callable_piece_uses_quadrature() {
        let pi = std::f64::consts::PI;
        let u = PiecewiseH1Function::smooth(Piece::callable(
            move |x: f64| (pi * x).cos(),
            move |x: f64| -pi * (pi * x).sin(),
        ))
        .unwrap();
        assert_relative_eq!(u.dirichlet_energy().unwrap(), pi * pi / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn square_root_is_not_h1() {
        let u = PiecewiseH1Function::smooth(Piece::callable(
            |x: f64| x.sqrt(),
            |x: f64| 0.5 / x.sqrt(),
        ))
        .unwrap();
        assert!(matches!(ms_energy(&u), Err(Error::NonIntegrable { .. })));
    }

    #[test]
    fn rejects_bad_jump_lists() {
        let c = || Piece::constant(0.0f64);
        assert!(PiecewiseH1Function::new(vec![0.5, 0.4], vec![c(), c(), c()]).is_err());
        assert!(PiecewiseH1Function::new(vec![0.0], vec![c(), c()]).is_err());
        assert!(PiecewiseH1Function::new(vec![1.0], vec![c(), c()]).is_err());
        assert!(PiecewiseH1Function::new(vec![0.5], vec![c()]).is_err());
    }

    #[test]
    fn sampling_puts_jump_on_first_node_at_or_after() {
        let u = PiecewiseH1Function::step(0.5f64, 1.0).unwrap();
        let f = u.sample_lattice(10).unwrap();
        assert_eq!(f.values()[4], 0.0);
        assert_eq!(f.values()[5], 1.0);
        let u = PiecewiseH1Function::step(0.43f64, 1.0).unwrap();
        let f = u.sample_lattice(10).unwrap();
        assert_eq!(f.values()[4], 0.0);
        assert_eq!(f.values()[5], 1.0);
    }

    #[test]
    fn sampled_layouts_integrate_consistently() {
        let cells = Piece::Sampled { values: vec![1.0f64, 3.0, 2.0, 6.0], layout: SampleLayout::Cells };
        let u = PiecewiseH1Function::smooth(cells).unwrap();
        assert_relative_eq!(u.piece_integral(0).unwrap(), 3.0, epsilon = 1e-15);
        assert_eq!(u.eval(0.0), 1.0);
        assert_eq!(u.eval(1.0), 6.0);
        assert_relative_eq!(u.eval(0.25), 2.0, epsilon = 1e-15);
        let nodes = Piece::Sampled { values: vec![0.0f64, 1.0, 0.0], layout: SampleLayout::Nodes };
        let v = PiecewiseH1Function::smooth(nodes).unwrap();
        assert_relative_eq!(v.dirichlet_energy().unwrap(), 4.0, epsilon = 1e-14);
        assert_relative_eq!(v.eval(0.25), 0.5, epsilon = 1e-15);
    }
}
