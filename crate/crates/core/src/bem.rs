//! Collocation panel method for the zeroth-order single layer potential.
//!
//! The kernel is the static Green's function G(x,y) = −1/(4π|x−y|). Densities
//! are piecewise constant per panel and collocated at panel centroids. Solving
//! S ψ_j = 1_{B_j} yields the equilibrium densities whose weighted panel sums
//! assemble the capacitance matrix.

use crate::geometry::{ResonatorSystem, SurfaceMesh};
use crate::quadrature::TriangleRule;
use faer::linalg::solvers::Solve;
use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BemError {
    #[error("panel {index} is degenerate (area {area:.3e})")]
    DegeneratePanel { index: usize, area: f64 },
    #[error("single layer matrix is ill-conditioned (estimate {estimate:.3e} > {limit:.3e})")]
    IllConditioned { estimate: f64, limit: f64 },
    #[error("densities were solved on a different mesh ({solved} panels vs {mesh})")]
    MeshMismatch { solved: usize, mesh: usize },
}

/// Kernel sign convention carried by the assembled matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelConvention {
    /// G(x,y) = −1/(4π|x−y|); all self-interaction entries are negative.
    NegativeGreen,
}

/// Dense collocation matrix of the single layer potential, one row and column
/// per panel, row-major.
#[derive(Debug, Clone)]
pub struct SingleLayerMatrix {
    data: Vec<f64>,
    n: usize,
    pub convention: KernelConvention,
}

impl SingleLayerMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    fn as_faer(&self) -> faer::MatRef<'_, f64> {
        faer::MatRef::from_row_major_slice(&self.data, self.n, self.n)
    }

    /// y = S x at the collocation points.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            y[i] = row.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        }
        y
    }
}

#[derive(Debug, Clone)]
pub struct AssemblyOptions {
    /// Quadrature applied on source panels for off-diagonal entries.
    pub rule: TriangleRule,
    /// Recursive 4-way source-panel subdivisions applied when target and
    /// source centroids are closer than `near_threshold` times the summed
    /// panel diameters. Zero disables near-field refinement.
    pub near_subdivisions: u32,
    pub near_threshold: f64,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            rule: TriangleRule::degree5(),
            near_subdivisions: 2,
            near_threshold: 2.0,
        }
    }
}

/// Potential of a unit constant density on a flat triangle, evaluated at an
/// in-plane point p that does not lie on any edge line:
/// I = ∫_T dσ(y)/|p−y|, computed edge-wise from the in-plane divergence
/// identity div((y−p)/|y−p|) = 1/|y−p|.
pub fn flat_triangle_potential(p: &Vector3<f64>, v: &[Vector3<f64>; 3], normal: &Vector3<f64>) -> f64 {
    let mut total = 0.0;
    for e in 0..3 {
        let a = v[e];
        let b = v[(e + 1) % 3];
        let u = (b - a).normalize();
        let outward = u.cross(normal);
        let d = (a - p).dot(&outward);
        let t1 = (a - p).dot(&u);
        let t2 = (b - p).dot(&u);
        let r1 = (a - p).norm();
        let r2 = (b - p).norm();
        total += d * ((t2 + r2) / (t1 + r1)).ln();
    }
    total
}

fn panel_diameter(v: &[Vector3<f64>; 3]) -> f64 {
    (v[1] - v[0])
        .norm()
        .max((v[2] - v[1]).norm())
        .max((v[0] - v[2]).norm())
}

/// ∫_T dσ(y)/|x−y| by the fixed rule, with optional recursive subdivision.
fn panel_newton_potential(
    x: &Vector3<f64>,
    v: &[Vector3<f64>; 3],
    area: f64,
    rule: &TriangleRule,
    depth: u32,
) -> f64 {
    if depth == 0 {
        let mut acc = 0.0;
        for (b, w) in rule.points.iter().zip(&rule.weights) {
            let y = b[0] * v[0] + b[1] * v[1] + b[2] * v[2];
            acc += w / (x - y).norm();
        }
        return area * acc;
    }
    let m01 = (v[0] + v[1]) / 2.0;
    let m12 = (v[1] + v[2]) / 2.0;
    let m20 = (v[2] + v[0]) / 2.0;
    let quarter = area / 4.0;
    panel_newton_potential(x, &[v[0], m01, m20], quarter, rule, depth - 1)
        + panel_newton_potential(x, &[m01, v[1], m12], quarter, rule, depth - 1)
        + panel_newton_potential(x, &[m20, m12, v[2]], quarter, rule, depth - 1)
        + panel_newton_potential(x, &[m01, m12, m20], quarter, rule, depth - 1)
}

pub fn assemble_single_layer(mesh: &SurfaceMesh) -> Result<SingleLayerMatrix, BemError> {
    assemble_single_layer_with(mesh, &AssemblyOptions::default())
}

pub fn assemble_single_layer_with(
    mesh: &SurfaceMesh,
    options: &AssemblyOptions,
) -> Result<SingleLayerMatrix, BemError> {
    let n = mesh.panel_count();
    for (i, p) in mesh.panels.iter().enumerate() {
        if !(p.area > 0.0) {
            return Err(BemError::DegeneratePanel {
                index: i,
                area: p.area,
            });
        }
    }
    let vertices: Vec<[Vector3<f64>; 3]> = mesh.panels.iter().map(|p| mesh.panel_vertices(p)).collect();
    let diameters: Vec<f64> = vertices.iter().map(panel_diameter).collect();
    let inv4pi = 1.0 / (4.0 * std::f64::consts::PI);

    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(row, out)| {
        let x = mesh.panels[row].centroid;
        for col in 0..n {
            let potential = if col == row {
                flat_triangle_potential(&x, &vertices[row], &mesh.panels[row].normal)
            } else {
                let near = (x - mesh.panels[col].centroid).norm()
                    < options.near_threshold * (diameters[row] + diameters[col]);
                let depth = if near { options.near_subdivisions } else { 0 };
                panel_newton_potential(&x, &vertices[col], mesh.panels[col].area, &options.rule, depth)
            };
            out[col] = -inv4pi * potential;
        }
    });

    Ok(SingleLayerMatrix {
        data,
        n,
        convention: KernelConvention::NegativeGreen,
    })
}

/// Equilibrium densities ψ_j with S ψ_j = 1 on component j and 0 elsewhere,
/// one column per component, plus direct-solver diagnostics.
#[derive(Debug, Clone)]
pub struct DensitySet {
    /// n_panels × N.
    pub values: DMatrix<f64>,
    /// Per-component residual ∞-norms of S ψ_j − 1_{B_j}.
    pub residual_inf: Vec<f64>,
    /// One-norm condition estimate of the collocation matrix.
    pub condition_estimate: f64,
    pub panel_count: usize,
}

const CONDITION_LIMIT: f64 = 1e12;

pub fn solve_densities(s: &SingleLayerMatrix, mesh: &SurfaceMesh) -> Result<DensitySet, BemError> {
    let n = s.len();
    assert_eq!(n, mesh.panel_count(), "matrix and mesh disagree");
    let ncomp = mesh.component_count;

    let a = s.as_faer().to_owned();
    let lu = a.partial_piv_lu();

    let norm1 = matrix_norm1(s);
    let inv_norm1 = hager_inverse_norm1(&lu, n);
    let condition_estimate = norm1 * inv_norm1;
    if condition_estimate > CONDITION_LIMIT {
        return Err(BemError::IllConditioned {
            estimate: condition_estimate,
            limit: CONDITION_LIMIT,
        });
    }

    let mut rhs = faer::Mat::<f64>::zeros(n, ncomp);
    for (i, p) in mesh.panels.iter().enumerate() {
        rhs[(i, p.component)] = 1.0;
    }
    let x = lu.solve(&rhs);

    let mut values = DMatrix::zeros(n, ncomp);
    for j in 0..ncomp {
        for i in 0..n {
            values[(i, j)] = x[(i, j)];
        }
    }
    let mut residual_inf = vec![0.0f64; ncomp];
    for j in 0..ncomp {
        let col = DVector::from_iterator(n, (0..n).map(|i| values[(i, j)]));
        let sx = s.apply(&col);
        for (i, p) in mesh.panels.iter().enumerate() {
            let b = if p.component == j { 1.0 } else { 0.0 };
            residual_inf[j] = residual_inf[j].max((sx[i] - b).abs());
        }
    }

    Ok(DensitySet {
        values,
        residual_inf,
        condition_estimate,
        panel_count: n,
    })
}

fn matrix_norm1(s: &SingleLayerMatrix) -> f64 {
    let n = s.len();
    let mut best: f64 = 0.0;
    for col in 0..n {
        let mut sum = 0.0;
        for row in 0..n {
            sum += s.entry(row, col).abs();
        }
        best = best.max(sum);
    }
    best
}

/// Hager's one-norm estimator for ‖A⁻¹‖₁ driven by LU solves.
fn hager_inverse_norm1(lu: &faer::linalg::solvers::PartialPivLu<f64>, n: usize) -> f64 {
    let mut x = faer::Mat::<f64>::from_fn(n, 1, |_, _| 1.0 / n as f64);
    let mut estimate: f64 = 0.0;
    for _ in 0..5 {
        let mut y = x.clone();
        lu.solve_in_place(y.as_mut());
        estimate = (0..n).map(|i| y[(i, 0)].abs()).sum();
        let mut xi = faer::Mat::<f64>::from_fn(n, 1, |i, _| if y[(i, 0)] >= 0.0 { 1.0 } else { -1.0 });
        lu.solve_transpose_in_place(xi.as_mut());
        let (mut jmax, mut zmax) = (0, 0.0);
        let mut ztx = 0.0;
        for i in 0..n {
            let z = xi[(i, 0)].abs();
            ztx += xi[(i, 0)] * x[(i, 0)];
            if z > zmax {
                zmax = z;
                jmax = i;
            }
        }
        if zmax <= ztx {
            break;
        }
        x = faer::Mat::<f64>::from_fn(n, 1, |i, _| if i == jmax { 1.0 } else { 0.0 });
    }
    estimate
}

/// Capacitance from densities: C_{l,j} = −Σ_{panels p in component l} area_p ψ_j(p).
/// The boundary-flux definition reduces to this because the potential of ψ_j
/// is constant inside every component.
pub fn capacitance_matrix(densities: &DensitySet, mesh: &SurfaceMesh) -> Result<DMatrix<f64>, BemError> {
    if densities.panel_count != mesh.panel_count() {
        return Err(BemError::MeshMismatch {
            solved: densities.panel_count,
            mesh: mesh.panel_count(),
        });
    }
    let ncomp = mesh.component_count;
    let mut c = DMatrix::zeros(ncomp, ncomp);
    for j in 0..ncomp {
        for (i, p) in mesh.panels.iter().enumerate() {
            c[(p.component, j)] -= p.area * densities.values[(i, j)];
        }
    }
    Ok(c)
}

/// Capacitance matrix together with the volume and material scalings and the
/// generalized matrix Cgen = Vmat · Vvol · C.
#[derive(Debug, Clone)]
pub struct CapacitanceSet {
    pub c: DMatrix<f64>,
    pub volumes: Vec<f64>,
    pub vvol: DMatrix<f64>,
    pub vmat: DMatrix<f64>,
    pub cgen: DMatrix<f64>,
}

pub fn generalized_capacitance(c: DMatrix<f64>, system: &ResonatorSystem) -> CapacitanceSet {
    let n = system.len();
    assert_eq!(c.nrows(), n, "capacitance size does not match system");
    let volumes = system.volumes();
    let vvol = DMatrix::from_diagonal(&DVector::from_iterator(n, volumes.iter().map(|v| 1.0 / v)));
    let vmat = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        system.cr().iter().map(|cr| cr * cr),
    ));
    let cgen = &vmat * &vvol * &c;
    CapacitanceSet {
        c,
        volumes,
        vvol,
        vmat,
        cgen,
    }
}

/// Full pipeline: mesh → single layer → densities → CapacitanceSet.
pub fn capacitance_pipeline(
    system: &ResonatorSystem,
    refinement: u32,
) -> Result<CapacitanceSet, crate::Error> {
    let mesh = crate::geometry::build_system_mesh(system, refinement)?;
    let s = assemble_single_layer(&mesh)?;
    let densities = solve_densities(&s, &mesh)?;
    let c = capacitance_matrix(&densities, &mesh)?;
    Ok(generalized_capacitance(c, system))
}
