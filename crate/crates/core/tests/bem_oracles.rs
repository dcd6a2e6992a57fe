//! The panel solver against its independent references: the analytic
//! flat-triangle self term against adaptive polar quadrature, sphere and
//! dimer capacitances against closed forms and Kelvin image charges, and the
//! structural matrix properties.

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;
use subwave_core::analytic;
use subwave_core::bem::*;
use subwave_core::geometry::*;

/// ∫ over the triangle (p,a,b) of dσ(y)/|y−p| in polar coordinates around p:
/// the radial integral is exact, the angular one is done by adaptive Simpson.
fn wedge_integral(p: Vector3<f64>, a: Vector3<f64>, b: Vector3<f64>) -> f64 {
    let ua = a - p;
    let ub = b - p;
    let la = ua.norm();
    let alpha = (ua.dot(&ub) / (la * ub.norm())).clamp(-1.0, 1.0).acos();
    let va = p - a;
    let vb = b - a;
    let gamma = (va.dot(&vb) / (va.norm() * vb.norm()))
        .clamp(-1.0, 1.0)
        .acos();
    let f = |theta: f64| la * gamma.sin() / (theta + gamma).sin();
    adaptive_simpson(&f, 0.0, alpha, 1e-13, 40)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let simpson = |a: f64, m: f64, b: f64| (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
    let whole = simpson(a, m, b);
    let left = simpson(a, 0.5 * (a + m), m);
    let right = simpson(m, 0.5 * (m + b), b);
    if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_simpson(f, a, m, tol / 2.0, depth - 1)
            + adaptive_simpson(f, m, b, tol / 2.0, depth - 1)
    }
}

fn triangle_potential_oracle(p: Vector3<f64>, v: &[Vector3<f64>; 3]) -> f64 {
    wedge_integral(p, v[0], v[1]) + wedge_integral(p, v[1], v[2]) + wedge_integral(p, v[2], v[0])
}

#[test]
fn self_term_matches_adaptive_quadrature_oracle() {
    let triangles = [
        [
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
        ],
        [
            Vector3::new(0.2, -0.1, 0.4),
            Vector3::new(1.3, 0.2, 0.5),
            Vector3::new(0.4, 1.1, 1.2),
        ],
        [
            Vector3::new(-1.0, 0.0, 2.0),
            Vector3::new(-0.2, 0.05, 2.1),
            Vector3::new(-0.9, 0.6, 1.4),
        ],
    ];
    for v in triangles {
        let centroid = (v[0] + v[1] + v[2]) / 3.0;
        let mut normal = (v[1] - v[0]).cross(&(v[2] - v[0]));
        normal /= normal.norm();
        let analytic = flat_triangle_potential(&centroid, &v, &normal);
        let oracle = triangle_potential_oracle(centroid, &v);
        assert!(
            (analytic - oracle).abs() < 1e-8 * oracle.abs(),
            "analytic {analytic} vs oracle {oracle}"
        );
    }
}

fn monomer(radius: f64) -> ResonatorSystem {
    ResonatorSystem::new(
        vec![SphereSpec::new(Vector3::zeros(), radius)],
        1.0,
        1.0,
        1e-3,
        Complex64::new(0.0, 0.0),
    )
    .unwrap()
}

fn symmetric_dimer() -> ResonatorSystem {
    ResonatorSystem::new(
        vec![
            SphereSpec::new(Vector3::new(0.0, 0.0, -0.5), 0.2),
            SphereSpec::new(Vector3::new(0.0, 0.0, 0.5), 0.2),
        ],
        1.0,
        1.0,
        1e-3,
        Complex64::new(0.0, 0.0),
    )
    .unwrap()
}

fn capacitance_at(system: &ResonatorSystem, refinement: u32) -> (DMatrix<f64>, DensitySet) {
    let mesh = build_system_mesh(system, refinement).unwrap();
    let s = assemble_single_layer(&mesh).unwrap();
    let densities = solve_densities(&s, &mesh).unwrap();
    let c = capacitance_matrix(&densities, &mesh).unwrap();
    (c, densities)
}

#[test]
fn sphere_capacitance_converges_to_analytic() {
    let system = monomer(0.2);
    let exact = analytic::sphere_capacitance(0.2);
    let mut errors = Vec::new();
    for refinement in 1..=3 {
        let (c, _) = capacitance_at(&system, refinement);
        errors.push((c[(0, 0)] - exact).abs() / exact);
    }
    assert!(errors[2] < 4e-3, "ref-3 error {}", errors[2]);
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    // successive improvements at least halve the error
    assert!(errors[1] / errors[2] >= 2.0);
}

#[test]
fn uniform_density_on_sphere() {
    let system = monomer(0.5);
    let mesh = build_system_mesh(&system, 3).unwrap();
    let s = assemble_single_layer(&mesh).unwrap();
    let densities = solve_densities(&s, &mesh).unwrap();
    let values: Vec<f64> = (0..mesh.panel_count())
        .map(|i| densities.values[(i, 0)])
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = values
        .iter()
        .map(|x| (x - mean).abs())
        .fold(0.0f64, f64::max)
        / mean.abs();
    assert!((mean - (-2.0)).abs() < 0.01 * 2.0, "mean {mean}, expect -1/r = -2");
    assert!(spread < 0.01, "spread {spread}");
    assert!(densities.residual_inf.iter().all(|&r| r < 1e-10));
}

#[test]
fn dimer_capacitance_matches_kelvin_images_at_refinement_three() {
    let (c, densities) = capacitance_at(&symmetric_dimer(), 3);
    let kelvin = analytic::two_sphere_capacitance(0.2, 0.2, 1.0, 1e-13).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let want = kelvin.matrix[(i, j)];
            let got = c[(i, j)];
            assert!(
                (got - want).abs() < 0.01 * want.abs(),
                "entry ({i},{j}): {got} vs {want}"
            );
        }
    }
    assert!(densities.residual_inf.iter().all(|&r| r < 1e-10));
    assert!(densities.condition_estimate < 1e6);
}

#[test]
fn kelvin_oracle_frozen_values() {
    // regression constants from the image iteration, cross-checked against
    // the bispherical series
    let kelvin = analytic::two_sphere_capacitance(0.2, 0.2, 1.0, 1e-15).unwrap();
    assert!((kelvin.matrix[(0, 0)] - 2.62276291698461428).abs() < 1e-10);
    assert!((kelvin.matrix[(0, 1)] - (-0.525504738415446426)).abs() < 1e-10);
    let c11 = analytic::equal_spheres_self_coefficient(0.2, 1.0);
    let c12 = analytic::equal_spheres_mutual_coefficient(0.2, 1.0);
    assert!((kelvin.matrix[(0, 0)] - c11).abs() < 1e-10);
    assert!((kelvin.matrix[(0, 1)] - c12).abs() < 1e-10);
}

#[test]
fn densities_obey_mirror_symmetry() {
    let mesh = build_system_mesh(&symmetric_dimer(), 2).unwrap();
    let s = assemble_single_layer(&mesh).unwrap();
    let densities = solve_densities(&s, &mesh).unwrap();
    let mut worst: f64 = 0.0;
    for (i, p) in mesh.panels.iter().enumerate() {
        if p.component != 0 {
            continue;
        }
        let mirrored = Vector3::new(p.centroid.x, p.centroid.y, -p.centroid.z);
        let (j, dist) = mesh
            .panels
            .iter()
            .enumerate()
            .filter(|(_, q)| q.component == 1)
            .map(|(j, q)| (j, (q.centroid - mirrored).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert!(dist < 1e-12, "no mirror panel for {i}");
        worst = worst.max((densities.values[(i, 0)] - densities.values[(j, 1)]).abs());
    }
    assert!(worst < 1e-10, "mirror defect {worst}");
}

#[test]
fn capacitance_structure_on_a_trimer() {
    let system = ResonatorSystem::new(
        vec![
            SphereSpec::new(Vector3::new(-1.0, 0.0, 0.0), 0.25),
            SphereSpec::new(Vector3::new(0.3, 0.8, 0.0), 0.2),
            SphereSpec::new(Vector3::new(0.9, -0.6, 0.3), 0.3),
        ],
        1.0,
        1.0,
        1e-3,
        Complex64::new(0.0, 0.0),
    )
    .unwrap();
    let (c, _) = capacitance_at(&system, 2);
    let scale = c[(0, 0)].abs();
    // symmetry, sign structure, diagonal dominance flavor
    for i in 0..3 {
        assert!(c[(i, i)] > 0.0);
        let mut row_sum = 0.0;
        for j in 0..3 {
            if i != j {
                assert!(c[(i, j)] < 0.0, "off-diagonal ({i},{j}) not negative");
                assert!((c[(i, j)] - c[(j, i)]).abs() < 1e-3 * scale);
            }
            row_sum += c[(i, j)];
        }
        assert!(row_sum > -1e-6 * scale, "row {i} sum {row_sum}");
    }
    // positive definiteness via symmetrized eigenvalues
    let sym = (c.clone() + c.transpose()) * 0.5;
    let eigs = sym.symmetric_eigenvalues();
    assert!(eigs.iter().all(|&l| l > 0.0), "{eigs:?}");
}

#[test]
fn capacitance_cauchy_in_refinement() {
    let system = symmetric_dimer();
    let mut sets = Vec::new();
    for refinement in 1..=3 {
        sets.push(capacitance_at(&system, refinement).0);
    }
    let diff = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((a[(i, j)] - b[(i, j)]).abs());
            }
        }
        d
    };
    let d01 = diff(&sets[0], &sets[1]);
    let d12 = diff(&sets[1], &sets[2]);
    assert!(d12 < d01 / 2.0, "differences not contracting: {d01} then {d12}");
}

#[test]
fn generalized_capacitance_scalings() {
    let system = monomer(0.2);
    let (c, _) = capacitance_at(&system, 2);
    let cap = generalized_capacitance(c.clone(), &system);
    let volume = 4.0 / 3.0 * std::f64::consts::PI * 0.008;
    assert!((cap.volumes[0] - volume).abs() < 1e-15);
    assert!((cap.cgen[(0, 0)] - c[(0, 0)] / volume).abs() < 1e-10);

    // doubling cr quadruples Cgen
    let system2 = ResonatorSystem::new(
        vec![SphereSpec::new(Vector3::zeros(), 0.2)],
        1.0,
        2.0,
        1e-3,
        Complex64::new(0.0, 0.0),
    )
    .unwrap();
    let cap2 = generalized_capacitance(c, &system2);
    assert!((cap2.cgen[(0, 0)] - 4.0 * cap.cgen[(0, 0)]).abs() < 1e-10 * cap.cgen[(0, 0)].abs());
}

#[test]
fn equal_spheres_give_equal_diagonal_cgen() {
    let (c, _) = capacitance_at(&symmetric_dimer(), 2);
    let cap = generalized_capacitance(c, &symmetric_dimer());
    assert!((cap.cgen[(0, 0)] - cap.cgen[(1, 1)]).abs() < 1e-6 * cap.cgen[(0, 0)]);
    assert!((cap.c[(0, 1)] - cap.c[(1, 0)]).abs() < 1e-6 * cap.c[(0, 0)]);
    assert!(cap.c[(0, 1)] < 0.0);
}
