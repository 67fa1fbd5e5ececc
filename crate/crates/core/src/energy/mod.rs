//! Potentials, lattice and continuum functionals.

pub mod density;
pub mod lattice;
pub mod piecewise;
pub mod potential;
pub mod probe;

pub use density::{g_eps_energy, g_eps_energy_unchecked, DensityReport, JumpDensity};
pub use lattice::{pm_energy, pm_energy_difference, pm_gradient, pm_hessian, LatticeField, ScaledGradients};
pub use piecewise::{ms_energy, Piece, PiecewiseH1Function, SampleLayout, ScalarFn};
pub use potential::{f_eps, f_eps_prime, f_eps_second, j_potential, j_prime, j_second, j_third, Scaling};
pub use probe::{gamma_probe, springs_for_spacing, ProbeRow};
