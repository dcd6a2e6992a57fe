//! Numerical workbench for subwavelength resonances of finite sphere systems.
//!
//! The pipeline runs from geometry to physics in four stages:
//!
//! 1. [`geometry`] — sphere systems and icosphere boundary meshes;
//! 2. [`bem`] — the single layer potential, equilibrium densities and the
//!    capacitance matrices C and Cgen;
//! 3. [`linear`] — resonance asymptotics ω(δ) = ω₀√δ + ω₁δ from the
//!    eigenvalues of Cgen, with matrix-pencil order verification;
//! 4. [`nonlinear`] — amplitude-dependent resonance branches of the cubic
//!    (Kerr-type) system, traced by Newton continuation and discovered by
//!    seeded multistart, including the nonlinearity-induced extra family.
//!
//! [`analytic`] holds the independent references (exact sphere capacitance,
//! Kelvin image charges, amplitude closed forms) the solvers are checked
//! against.

pub mod analytic;
pub mod bem;
pub mod geometry;
pub mod linear;
pub mod nonlinear;
pub mod quadrature;

use thiserror::Error;

/// Umbrella error for pipeline-level helpers.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Bem(#[from] bem::BemError),
    #[error(transparent)]
    Oracle(#[from] analytic::OracleError),
    #[error(transparent)]
    Spectral(#[from] linear::SpectralError),
    #[error(transparent)]
    Solve(#[from] nonlinear::SolveError),
}
