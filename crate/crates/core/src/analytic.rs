//! Closed-form and semi-analytic references: isolated-sphere capacitance,
//! Kelvin image charges for two spheres, and the amplitude-dependent
//! closed forms for symmetric dimers and monomers.

use nalgebra::{Matrix2, Vector3};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("spheres are not separated: center distance {distance} ≤ r1 + r2 = {radii_sum}")]
    NotSeparated { distance: f64, radii_sum: f64 },
    #[error("image iteration did not reach tolerance {tol:.1e} within {iterations} reflections")]
    NoConvergence { tol: f64, iterations: usize },
    #[error("amplitude {amplitude} hits the pole 1 − β·cr²·|a|² = 0")]
    Pole { amplitude: f64 },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// Capacitance of an isolated sphere: 4πr (the exterior potential r/|x|
/// carries total flux 4πr through the boundary).
pub fn sphere_capacitance(radius: f64) -> f64 {
    4.0 * std::f64::consts::PI * radius
}

/// Image charges accumulated inside one sphere while enforcing the two-sphere
/// boundary conditions, with the iteration bookkeeping.
#[derive(Debug, Clone)]
pub struct ImageChargeState {
    /// (charge, position) pairs in generation order.
    pub charges: Vec<(f64, Vector3<f64>)>,
    pub iterations: usize,
    /// Magnitude of the last image placed; bounds the truncation error.
    pub convergence_estimate: f64,
}

impl ImageChargeState {
    pub fn total_charge(&self) -> f64 {
        self.charges.iter().map(|(q, _)| q).sum()
    }
}

/// Capacitance coefficients of two separated spheres via Kelvin reflections,
/// together with the per-sphere image systems of both unit-potential problems.
#[derive(Debug, Clone)]
pub struct TwoSphereCapacitance {
    pub matrix: Matrix2<f64>,
    /// states[j] = (images in sphere 1, images in sphere 2) for the problem
    /// "unit potential on sphere j, zero on the other".
    pub states: [(ImageChargeState, ImageChargeState); 2],
}

const MAX_REFLECTIONS: usize = 10_000;

/// Kelvin image iteration for the 2×2 capacitance matrix. Starting from a
/// charge at the driven sphere's center, images q' = −q·r/s at distance r²/s
/// from the passive sphere's center alternate until the latest magnitude
/// drops below `tol`. Coefficients are total induced charges scaled by 4π.
pub fn two_sphere_capacitance(
    r1: f64,
    r2: f64,
    center_distance: f64,
    tol: f64,
) -> Result<TwoSphereCapacitance, OracleError> {
    for (name, value) in [("r1", r1), ("r2", r2), ("tol", tol)] {
        if !(value > 0.0) {
            return Err(OracleError::NonPositive { name, value });
        }
    }
    if center_distance <= r1 + r2 {
        return Err(OracleError::NotSeparated {
            distance: center_distance,
            radii_sum: r1 + r2,
        });
    }

    let column = |ra: f64, rb: f64| -> Result<(ImageChargeState, ImageChargeState), OracleError> {
        // Driven sphere A at axial coordinate 0, passive sphere B at `center_distance`.
        let d = center_distance;
        let mut in_a: Vec<(f64, f64)> = vec![(ra, 0.0)];
        let mut in_b: Vec<(f64, f64)> = Vec::new();
        let mut q = ra;
        let mut pos = 0.0;
        let mut iterations = 0;
        let mut latest = ra;
        while latest.abs() >= tol {
            if iterations >= MAX_REFLECTIONS {
                return Err(OracleError::NoConvergence {
                    tol,
                    iterations,
                });
            }
            // reflect the newest charge near A into B
            let s = d - pos;
            let qb = -q * rb / s;
            let pb = d - rb * rb / s;
            in_b.push((qb, pb));
            // and back into A to restore its potential
            let qa = -qb * ra / pb;
            let pa = ra * ra / pb;
            in_a.push((qa, pa));
            q = qa;
            pos = pa;
            latest = qa;
            iterations += 1;
        }
        let lift = |list: &[(f64, f64)]| ImageChargeState {
            charges: list
                .iter()
                .map(|&(q, t)| (q, Vector3::new(t, 0.0, 0.0)))
                .collect(),
            iterations,
            convergence_estimate: latest.abs(),
        };
        Ok((lift(&in_a), lift(&in_b)))
    };

    let (a1, b1) = column(r1, r2)?;
    let (a2, b2) = column(r2, r1)?;
    let c11 = 4.0 * std::f64::consts::PI * a1.total_charge();
    let c21 = 4.0 * std::f64::consts::PI * b1.total_charge();
    let c22 = 4.0 * std::f64::consts::PI * a2.total_charge();
    let c12 = 4.0 * std::f64::consts::PI * b2.total_charge();
    let matrix = Matrix2::new(c11, c12, c21, c22);

    // the two columns are computed independently; mismatch means a bug
    let scale = c11.abs().max(c22.abs());
    debug_assert!((c12 - c21).abs() <= 1e-10 * scale);

    // The second column swaps the roles of the spheres, so its states are
    // reported as (images in sphere 1, images in sphere 2) too.
    Ok(TwoSphereCapacitance {
        matrix,
        states: [(a1, b1), (b2, a2)],
    })
}

/// Bispherical-series self coefficient for two equal spheres of radius `a`
/// at center distance `d`: C11 = 4πa·sinh(α)·Σ_{n≥1} 1/sinh((2n−1)α) with
/// cosh(α) = d/(2a).
pub fn equal_spheres_self_coefficient(a: f64, d: f64) -> f64 {
    let alpha = (d / (2.0 * a)).acosh();
    let mut sum = 0.0;
    let mut n = 1u32;
    loop {
        let term = 1.0 / ((2 * n - 1) as f64 * alpha).sinh();
        sum += term;
        if term < 1e-18 * sum || n > 500 {
            break;
        }
        n += 1;
    }
    4.0 * std::f64::consts::PI * a * alpha.sinh() * sum
}

/// Bispherical-series mutual coefficient for two equal spheres:
/// C12 = −4πa·sinh(α)·Σ_{n≥1} 1/sinh(2nα).
pub fn equal_spheres_mutual_coefficient(a: f64, d: f64) -> f64 {
    let alpha = (d / (2.0 * a)).acosh();
    let mut sum = 0.0;
    let mut n = 1u32;
    loop {
        let term = 1.0 / ((2 * n) as f64 * alpha).sinh();
        sum += term;
        if term < 1e-18 * sum || n > 500 {
            break;
        }
        n += 1;
    }
    -4.0 * std::f64::consts::PI * a * alpha.sinh() * sum
}

const POLE_TOL: f64 = 1e-14;

/// Closed-form squared frequency of a symmetric-dimer family at per-entry
/// amplitude `amp`: ω² = λ / (1 − β·cr²·amp²), λ the eigenvalue the family
/// continues from.
pub fn symmetric_dimer_omega_sq(
    lambda: f64,
    beta: Complex64,
    cr: f64,
    amp: f64,
) -> Result<Complex64, OracleError> {
    let denom = Complex64::new(1.0, 0.0) - beta * (cr * cr * amp * amp);
    if denom.norm() <= POLE_TOL {
        return Err(OracleError::Pole { amplitude: amp });
    }
    Ok(Complex64::new(lambda, 0.0) / denom)
}

/// Single-resonator closed form: ω² = Cgen / (1 − β·cr²·amp²).
pub fn monomer_omega_sq(
    cgen: f64,
    beta: Complex64,
    cr: f64,
    amp: f64,
) -> Result<Complex64, OracleError> {
    let denom = Complex64::new(1.0, 0.0) - beta * (cr * cr * amp * amp);
    if denom.norm() <= POLE_TOL {
        return Err(OracleError::Pole { amplitude: amp });
    }
    Ok(Complex64::new(cgen, 0.0) / denom)
}
