//! Pencil order studies resolving the coupling-term sign conventions, run on
//! capacitance-like matrices of the kind the solver produces.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use subwave_core::linear::*;

fn dimer_test_matrices() -> (DMatrix<f64>, DMatrix<f64>) {
    let c = DMatrix::from_row_slice(2, 2, &[2.6204, -0.5246, -0.5246, 2.6204]);
    let cgen = DMatrix::from_row_slice(2, 2, &[78.196, -15.654, -15.654, 78.196]);
    (c, cgen)
}

#[test]
fn exactly_one_omega1_sign_works_per_pencil_sign() {
    let (c, cgen) = dimer_test_matrices();
    let conv = resolve_sign_conventions(&c, &cgen, 1.0).unwrap();
    // winners sit on the matched diagonal of the sign table
    for (pi, _) in [-1.0, 1.0].iter().enumerate() {
        let in_band: Vec<bool> = conv.slopes[pi]
            .iter()
            .map(|s| (1.9..=2.1).contains(s))
            .collect();
        assert_eq!(
            in_band.iter().filter(|b| **b).count(),
            1,
            "pencil sign index {pi}: slopes {:?}",
            conv.slopes[pi]
        );
    }
    // the canonical selection matches the nonlinear pencil convention
    assert_eq!(conv.pencil_sign, 1.0);
    assert_eq!(conv.omega1_sign, 1.0);
    assert!((1.4..=1.6).contains(&conv.slope_without_omega1));
}

#[test]
fn kerr_pencil_study_selects_a_unique_combination() {
    let (c, cgen) = dimer_test_matrices();
    let eig = eigensystem(&cgen).unwrap();
    let beta = Complex64::new(0.0, -89.05);
    let q_amp = &eig.right[0] * Complex64::new(0.1, 0.0);
    let omega0 = eig.eigenvalues[0].sqrt();
    let mut winners = Vec::new();
    for pencil_sign in [-1.0, 1.0] {
        for omega1_sign in [-1.0, 1.0] {
            let w1 = omega1_kerr(&c, &cgen, 1.0, 1.0, beta, &eig, 0, &q_amp, omega1_sign).unwrap();
            let sigmas: Vec<f64> = ORDER_STUDY_DELTAS
                .iter()
                .map(|&d| {
                    kerr_pencil_min_singular(
                        omega0 * d.sqrt() + w1 * d,
                        d,
                        &c,
                        &cgen,
                        1.0,
                        pencil_sign,
                        beta,
                        1.0,
                        &q_amp,
                    )
                })
                .collect();
            let slope = log_log_slope(&ORDER_STUDY_DELTAS, &sigmas);
            if (1.9..=2.1).contains(&slope) {
                winners.push((pencil_sign, omega1_sign));
            }
        }
    }
    assert_eq!(winners, vec![(1.0, 1.0)]);
}

#[test]
fn sign_selection_is_scale_invariant() {
    // doubling all lengths scales C by 2 and volumes by 8
    let (c, cgen) = dimer_test_matrices();
    let conv = resolve_sign_conventions(&c, &cgen, 1.0).unwrap();
    let c2 = &c * 2.0;
    let cgen2 = &cgen * 0.25;
    let conv2 = resolve_sign_conventions(&c2, &cgen2, 1.0).unwrap();
    assert_eq!(conv.pencil_sign, conv2.pencil_sign);
    assert_eq!(conv.omega1_sign, conv2.omega1_sign);
}

#[test]
fn slope_improves_from_three_halves_to_two_with_omega1() {
    let (c, cgen) = dimer_test_matrices();
    let conv = resolve_sign_conventions(&c, &cgen, 1.0).unwrap();
    let eig = eigensystem(&cgen).unwrap();
    let omega0 = eig.eigenvalues[0].sqrt();
    let w1 = omega1_linear(&c, &cgen, 1.0, &eig, 0, conv.omega1_sign).unwrap();
    let without = pencil_order_slope(&c, &cgen, 1.0, conv.pencil_sign, |d| omega0 * d.sqrt());
    let with = pencil_order_slope(&c, &cgen, 1.0, conv.pencil_sign, |d| {
        omega0 * d.sqrt() + w1 * d
    });
    assert!((1.4..=1.6).contains(&without), "slope without: {without}");
    assert!((1.9..=2.1).contains(&with), "slope with: {with}");
}

#[test]
fn monomer_pencil_reduces_to_scalars() {
    let c = DMatrix::from_element(1, 1, 2.5133);
    let cgen = DMatrix::from_element(1, 1, 74.94);
    let conv = resolve_sign_conventions(&c, &cgen, 1.0).unwrap();
    assert!((1.9..=2.1).contains(&conv.slopes[1][1]));
    // ω = 0, δ = 1 gives σ_min(Cgen) = |Cgen|
    let sigma = pencil_min_singular(Complex64::new(0.0, 0.0), 1.0, &c, &cgen, 1.0, 1.0);
    assert!((sigma - 74.94).abs() < 1e-10);
}

#[test]
fn asymmetric_dimer_resolution_matches_symmetric_one() {
    // nonsymmetric Cgen of the r2 = 0.21 system
    let c = DMatrix::from_row_slice(2, 2, &[2.6266, -0.5522, -0.5522, 2.7574]);
    let cgen = DMatrix::from_row_slice(2, 2, &[78.382, -16.478, -14.234, 71.082]);
    let conv = resolve_sign_conventions(&c, &cgen, 1.0).unwrap();
    assert_eq!((conv.pencil_sign, conv.omega1_sign), (1.0, 1.0));
    let eig = eigensystem(&cgen).unwrap();
    // eigenvalues real positive, eigenvectors real after canonicalization
    for mode in 0..2 {
        assert!(eig.eigenvalues[mode].re > 0.0);
        assert!(eig.eigenvalues[mode].im.abs() < 1e-10);
        for x in eig.right[mode].iter() {
            assert!(x.im.abs() < 1e-10);
        }
    }
}

#[test]
fn kerr_correction_beta_term_scales_quadratically_with_amplitude() {
    let (c, cgen) = dimer_test_matrices();
    let eig = eigensystem(&cgen).unwrap();
    let beta = Complex64::new(0.0, -89.05);
    let lin = omega1_linear(&c, &cgen, 1.0, &eig, 0, 1.0).unwrap();
    let beta_term = |t: f64| {
        let q = &eig.right[0] * Complex64::new(t, 0.0);
        omega1_kerr(&c, &cgen, 1.0, 1.0, beta, &eig, 0, &q, 1.0).unwrap() - lin
    };
    let base = beta_term(0.05);
    for t in [2.0, 3.0] {
        let scaled = beta_term(0.05 * t);
        assert!(
            (scaled - base * (t * t)).norm() < 1e-10 * scaled.norm(),
            "t = {t}: {scaled} vs {}",
            base * (t * t)
        );
    }
}

#[test]
fn omega1_vanishes_on_the_antisymmetric_mode() {
    // the all-ones coupling annihilates vectors with zero sum
    let (c, cgen) = dimer_test_matrices();
    let eig = eigensystem(&cgen).unwrap();
    let w1 = omega1_linear(&c, &cgen, 1.0, &eig, 1, 1.0).unwrap();
    assert!(w1.norm() < 1e-12);
}

#[test]
fn resonance_asymptotics_square_to_the_eigenvalue() {
    let (c, cgen) = dimer_test_matrices();
    let conv = resolve_sign_conventions(&c, &cgen, 1.0).unwrap();
    let eig = eigensystem(&cgen).unwrap();
    for mode in 0..2 {
        let asym = linear_asymptotics(&c, &cgen, 1.0, &eig, mode, &conv).unwrap();
        let defect = (asym.omega0 * asym.omega0 - eig.eigenvalues[mode]).norm();
        assert!(defect <= 1e-12 * eig.eigenvalues[mode].norm());
        assert_eq!(asym.model, ResonanceModel::Linear);
    }
    let beta = Complex64::new(0.0, -89.05);
    let q = &eig.right[0] * Complex64::new(0.1, 0.0);
    let kerr = kerr_asymptotics(&c, &cgen, 1.0, 1.0, beta, &eig, 0, &q, &conv).unwrap();
    assert_eq!(kerr.model, ResonanceModel::Kerr);
    assert!(kerr.omega1.re.abs() > 0.0);
}
