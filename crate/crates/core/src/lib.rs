//! Scaled Perona-Malik lattice energies, their Mumford-Shah limit, and the
//! static, quasistatic and dynamic experiments built on them.
//!
//! Every routine is generic over [`Real`]; the aliases below fix `f64`, which
//! is what the experiments use.

pub mod dynamics;
pub mod energy;
pub mod error;
pub mod interpolation;
pub mod longtime;
pub mod quadrature;
pub mod quasistatic;
pub mod scalar;
pub mod statics;
pub mod tridiag;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Field = energy::LatticeField<f64>;
pub type Function = energy::PiecewiseH1Function<f64>;
pub type Density = energy::JumpDensity<f64>;
