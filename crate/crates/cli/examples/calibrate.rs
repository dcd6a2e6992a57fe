//! Regenerates the pinned regression numbers used by the test suites
//! (capacitance entries, spectra, first-order corrections, closed-form
//! values and the mirror-symmetry diagnostic). Run after any change to the
//! discretization and paste updated constants where the tests freeze them.

use nalgebra::DVector;
use num_complex::Complex64;
use std::time::Instant;
use subwave_cli::config::parse_config;
use subwave_cli::run::*;
use subwave_core::analytic;
use subwave_core::linear;

fn main() {
    // frozen-value calibration for the linear pipeline on the symmetric reference dimer
    let cfg = parse_config(DIMER_R20_CONFIG).unwrap();
    let t0 = Instant::now();
    let cap = capacitance_for(&cfg, 4).unwrap();
    println!("ref-4 dimer capacitance took {:?}", t0.elapsed());
    println!("c11  = {:.17e}", cap.c[(0, 0)]);
    println!("c12  = {:.17e}", cap.c[(0, 1)]);
    println!("cgen11 = {:.17e}", cap.cgen[(0, 0)]);
    println!("cgen12 = {:.17e}", cap.cgen[(0, 1)]);
    let eig = linear::eigensystem(&cap.cgen).unwrap();
    let conv = linear::resolve_sign_conventions(&cap.c, &cap.cgen, cfg.c0).unwrap();
    println!("lambda0 = {:.17e}", eig.eigenvalues[0].re);
    println!("lambda1 = {:.17e}", eig.eigenvalues[1].re);
    let w1 = linear::omega1_linear(&cap.c, &cap.cgen, cfg.c0, &eig, 0, conv.omega1_sign).unwrap();
    println!("omega1_mode0 = {:.17e} {:+.17e}i", w1.re, w1.im);
    let q_amp = &eig.right[0] * Complex64::new(0.1, 0.0);
    let w1k = linear::omega1_kerr(
        &cap.c, &cap.cgen, cfg.c0, cfg.cr, cfg.beta, &eig, 0, &q_amp, conv.omega1_sign,
    )
    .unwrap();
    println!("omega1_kerr_amp0.1 = {:.17e} {:+.17e}i", w1k.re, w1k.im);

    // closed-form frozen values
    let lam0 = eig.eigenvalues[0].re;
    let w_closed = analytic::symmetric_dimer_omega_sq(lam0, cfg.beta, cfg.cr, 0.1).unwrap();
    println!("dimer_closed_amp0.1 = {:.17e} {:+.17e}i", w_closed.re, w_closed.im);

    // single sphere r = 0.2
    let mono_cfg = parse_config("[sphere]\ncenter = 0,0,0\nradius = 0.2\n").unwrap();
    let mono = capacitance_for(&mono_cfg, 4).unwrap();
    println!("mono_c    = {:.17e} (exact {:.17e})", mono.c[(0, 0)], analytic::sphere_capacitance(0.2));
    println!("mono_cgen = {:.17e} (exact 75)", mono.cgen[(0, 0)]);
    let w_mono = analytic::monomer_omega_sq(mono.cgen[(0, 0)], cfg.beta, 1.0, 0.05).unwrap();
    println!("mono_closed_amp0.05 = {:.17e} {:+.17e}i", w_mono.re, w_mono.im);

    // density mirror-symmetry check on the ref-2 dimer
    let dimer_sys = cfg.to_system().unwrap();
    let mesh = subwave_core::geometry::build_system_mesh(&dimer_sys, 2).unwrap();
    let s = subwave_core::bem::assemble_single_layer(&mesh).unwrap();
    let dens = subwave_core::bem::solve_densities(&s, &mesh).unwrap();
    let mut worst: f64 = 0.0;
    for (i, p) in mesh.panels.iter().enumerate() {
        if p.component != 0 {
            continue;
        }
        let mirrored = nalgebra::Vector3::new(p.centroid.x, p.centroid.y, -p.centroid.z);
        let (j, dist) = mesh
            .panels
            .iter()
            .enumerate()
            .filter(|(_, q)| q.component == 1)
            .map(|(j, q)| (j, (q.centroid - mirrored).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert!(dist < 1e-12);
        worst = worst.max((dens.values[(i, 0)] - dens.values[(j, 1)]).abs());
    }
    println!("mirror density defect = {:.3e}", worst);

    // eigvec alignment angle
    let sym = DVector::from_vec(vec![
        Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
    ]);
    println!(
        "eigvec alignment distance = {:.3e}",
        subwave_core::nonlinear::gauge_distance_q(&eig.right[0], &sym)
    );
}
