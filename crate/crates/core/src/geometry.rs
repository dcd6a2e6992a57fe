//! Sphere collections and triangulated boundary meshes for the panel solver.
//!
//! Resonators are open balls; their boundaries are discretized as icospheres
//! (subdivided icosahedra with vertices projected onto the sphere). Panels are
//! flat triangles carrying exact flat-triangle centroids and areas.

use nalgebra::Vector3;
use num_complex::Complex64;
use thiserror::Error;

/// Hard ceiling on mesh subdivision depth (20·4^6 ≈ 82k panels per sphere).
pub const DEFAULT_MAX_REFINEMENT: u32 = 6;

/// Default gap/min-radius ratio below which a system is reported as not
/// well separated. The panel method degrades for closer spheres.
pub const DEFAULT_SEPARATION_THRESHOLD: f64 = 0.1;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("sphere {index}: radius must be positive, got {radius}")]
    NonPositiveRadius { index: usize, radius: f64 },
    #[error("system must contain at least one sphere")]
    Empty,
    #[error("spheres {first} and {second} overlap or touch (gap {gap:.6e})")]
    Overlap {
        first: usize,
        second: usize,
        gap: f64,
    },
    #[error("refinement {requested} exceeds maximum {max}")]
    RefinementBudget { requested: u32, max: u32 },
    #[error("{name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("expected {expected} per-component values for {name}, got {got}")]
    ComponentCountMismatch {
        name: &'static str,
        expected: usize,
        got: usize,
    },
}

/// A single spherical resonator: an open ball given by center and radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSpec {
    pub center: Vector3<f64>,
    pub radius: f64,
}

impl SphereSpec {
    pub fn new(center: Vector3<f64>, radius: f64) -> Self {
        Self { center, radius }
    }

    /// Exact ball volume (4/3)πr³. Volumes are always taken analytically,
    /// never from the mesh.
    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.radius.powi(3)
    }
}

/// A finite system of disjoint spherical resonators with material parameters:
/// exterior wave speed `c0`, interior wave speeds `cr` (per component),
/// contrast `delta` and nonlinearity coefficient `beta`.
#[derive(Debug, Clone)]
pub struct ResonatorSystem {
    spheres: Vec<SphereSpec>,
    c0: f64,
    cr: Vec<f64>,
    delta: f64,
    beta: Complex64,
    separation_threshold: f64,
}

impl ResonatorSystem {
    /// Builds a system with a shared interior wave speed. Fails if any radius
    /// is non-positive or any pair of spheres overlaps or touches.
    pub fn new(
        spheres: Vec<SphereSpec>,
        c0: f64,
        cr: f64,
        delta: f64,
        beta: Complex64,
    ) -> Result<Self, GeometryError> {
        let n = spheres.len();
        let cr = vec![cr; n];
        Self::with_component_cr(spheres, c0, cr, delta, beta)
    }

    /// As [`ResonatorSystem::new`] but with one interior wave speed per component.
    pub fn with_component_cr(
        spheres: Vec<SphereSpec>,
        c0: f64,
        cr: Vec<f64>,
        delta: f64,
        beta: Complex64,
    ) -> Result<Self, GeometryError> {
        if spheres.is_empty() {
            return Err(GeometryError::Empty);
        }
        for (i, s) in spheres.iter().enumerate() {
            if !(s.radius > 0.0) {
                return Err(GeometryError::NonPositiveRadius {
                    index: i,
                    radius: s.radius,
                });
            }
        }
        if !(c0 > 0.0) {
            return Err(GeometryError::NonPositiveParameter {
                name: "c0",
                value: c0,
            });
        }
        if cr.len() != spheres.len() {
            return Err(GeometryError::ComponentCountMismatch {
                name: "cr",
                expected: spheres.len(),
                got: cr.len(),
            });
        }
        for &c in &cr {
            if !(c > 0.0) {
                return Err(GeometryError::NonPositiveParameter {
                    name: "cr",
                    value: c,
                });
            }
        }
        if !(delta >= 0.0) {
            return Err(GeometryError::NonPositiveParameter {
                name: "delta",
                value: delta,
            });
        }
        for i in 0..spheres.len() {
            for j in (i + 1)..spheres.len() {
                let gap = pair_gap(&spheres[i], &spheres[j]);
                if gap <= 0.0 {
                    return Err(GeometryError::Overlap {
                        first: i,
                        second: j,
                        gap,
                    });
                }
            }
        }
        Ok(Self {
            spheres,
            c0,
            cr,
            delta,
            beta,
            separation_threshold: DEFAULT_SEPARATION_THRESHOLD,
        })
    }

    pub fn with_separation_threshold(mut self, threshold: f64) -> Self {
        self.separation_threshold = threshold;
        self
    }

    pub fn spheres(&self) -> &[SphereSpec] {
        &self.spheres
    }

    pub fn len(&self) -> usize {
        self.spheres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty()
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Per-component interior wave speeds.
    pub fn cr(&self) -> &[f64] {
        &self.cr
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    pub fn separation_threshold(&self) -> f64 {
        self.separation_threshold
    }

    /// Exact component volumes.
    pub fn volumes(&self) -> Vec<f64> {
        self.spheres.iter().map(SphereSpec::volume).collect()
    }
}

fn pair_gap(a: &SphereSpec, b: &SphereSpec) -> f64 {
    (a.center - b.center).norm() - a.radius - b.radius
}

/// Well-separatedness report; `pass` is true iff every gap is positive and
/// every gap/min-radius ratio meets the system's threshold. A single sphere
/// passes vacuously.
#[derive(Debug, Clone)]
pub struct SeparationReport {
    pub min_gap: Option<f64>,
    pub min_ratio: Option<f64>,
    pub worst_pair: Option<(usize, usize)>,
    pub threshold: f64,
    pub pass: bool,
}

pub fn validate_separation(system: &ResonatorSystem) -> SeparationReport {
    let spheres = system.spheres();
    let threshold = system.separation_threshold();
    let mut min_gap = None;
    let mut min_ratio = None;
    let mut worst_pair = None;
    for i in 0..spheres.len() {
        for j in (i + 1)..spheres.len() {
            let gap = pair_gap(&spheres[i], &spheres[j]);
            let ratio = gap / spheres[i].radius.min(spheres[j].radius);
            if min_ratio.map_or(true, |r| ratio < r) {
                min_ratio = Some(ratio);
                worst_pair = Some((i, j));
            }
            if min_gap.map_or(true, |g| gap < g) {
                min_gap = Some(gap);
            }
        }
    }
    let pass = match (min_gap, min_ratio) {
        (Some(g), Some(r)) => g > 0.0 && r >= threshold,
        _ => true,
    };
    SeparationReport {
        min_gap,
        min_ratio,
        worst_pair,
        threshold,
        pass,
    }
}

/// A flat triangular panel. Vertex indices refer to the owning mesh; the
/// winding is counter-clockwise seen from outside, so the normal computed
/// from the winding points away from the owning sphere's center.
#[derive(Debug, Clone)]
pub struct Panel {
    pub vertices: [usize; 3],
    pub centroid: Vector3<f64>,
    pub area: f64,
    pub normal: Vector3<f64>,
    /// Zero-based component index.
    pub component: usize,
}

/// Triangulated boundary of a resonator system, component-major and in
/// deterministic subdivision order.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub panels: Vec<Panel>,
    pub refinement: u32,
    pub component_count: usize,
}

impl SurfaceMesh {
    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    pub fn panel_vertices(&self, p: &Panel) -> [Vector3<f64>; 3] {
        [
            self.vertices[p.vertices[0]],
            self.vertices[p.vertices[1]],
            self.vertices[p.vertices[2]],
        ]
    }

    /// Sum of flat panel areas belonging to one component.
    pub fn component_area(&self, component: usize) -> f64 {
        self.panels
            .iter()
            .filter(|p| p.component == component)
            .map(|p| p.area)
            .sum()
    }

    /// Area-weighted mean of panel centroids of one component.
    pub fn component_centroid(&self, component: usize) -> Vector3<f64> {
        let mut acc = Vector3::zeros();
        let mut area = 0.0;
        for p in self.panels.iter().filter(|p| p.component == component) {
            acc += p.area * p.centroid;
            area += p.area;
        }
        acc / area
    }

    /// Longest edge over all panels; the natural mesh-size parameter.
    pub fn max_edge_length(&self) -> f64 {
        let mut h: f64 = 0.0;
        for p in &self.panels {
            let v = self.panel_vertices(p);
            for e in 0..3 {
                h = h.max((v[(e + 1) % 3] - v[e]).norm());
            }
        }
        h
    }
}

const GOLDEN: f64 = 1.618033988749894848;

/// The twelve icosahedron vertices on the unit sphere. The set is closed
/// under coordinate sign flips, so meshes of mirror-placed spheres are exact
/// mirror images of each other as panel sets.
fn icosahedron_vertices() -> Vec<Vector3<f64>> {
    let s = 1.0 / (1.0 + GOLDEN * GOLDEN).sqrt();
    let a = s;
    let b = s * GOLDEN;
    vec![
        Vector3::new(-a, b, 0.0),
        Vector3::new(a, b, 0.0),
        Vector3::new(-a, -b, 0.0),
        Vector3::new(a, -b, 0.0),
        Vector3::new(0.0, -a, b),
        Vector3::new(0.0, a, b),
        Vector3::new(0.0, -a, -b),
        Vector3::new(0.0, a, -b),
        Vector3::new(b, 0.0, -a),
        Vector3::new(b, 0.0, a),
        Vector3::new(-b, 0.0, -a),
        Vector3::new(-b, 0.0, a),
    ]
}

fn icosahedron_faces() -> Vec<[usize; 3]> {
    vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ]
}

/// Unit icosphere: `refinement` rounds of 4-way midpoint subdivision with new
/// vertices projected back to the sphere. Construction is fully deterministic.
fn unit_icosphere(refinement: u32) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let mut vertices = icosahedron_vertices();
    let mut faces = icosahedron_faces();
    for _ in 0..refinement {
        let mut midpoints: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        let mut midpoint = |i: usize, j: usize, vertices: &mut Vec<Vector3<f64>>| {
            let key = (i.min(j), i.max(j));
            *midpoints.entry(key).or_insert_with(|| {
                let m = ((vertices[i] + vertices[j]) / 2.0).normalize();
                vertices.push(m);
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let m01 = midpoint(f[0], f[1], &mut vertices);
            let m12 = midpoint(f[1], f[2], &mut vertices);
            let m20 = midpoint(f[2], f[0], &mut vertices);
            next.push([f[0], m01, m20]);
            next.push([m01, f[1], m12]);
            next.push([m20, m12, f[2]]);
            next.push([m01, m12, m20]);
        }
        faces = next;
    }
    (vertices, faces)
}

/// Meshes a single sphere as one component with `20·4^refinement` panels.
pub fn build_sphere_mesh(sphere: &SphereSpec, refinement: u32) -> Result<SurfaceMesh, GeometryError> {
    build_sphere_mesh_with_max(sphere, refinement, DEFAULT_MAX_REFINEMENT)
}

pub fn build_sphere_mesh_with_max(
    sphere: &SphereSpec,
    refinement: u32,
    max_refinement: u32,
) -> Result<SurfaceMesh, GeometryError> {
    if refinement > max_refinement {
        return Err(GeometryError::RefinementBudget {
            requested: refinement,
            max: max_refinement,
        });
    }
    if !(sphere.radius > 0.0) {
        return Err(GeometryError::NonPositiveRadius {
            index: 0,
            radius: sphere.radius,
        });
    }
    let (unit_vertices, faces) = unit_icosphere(refinement);
    let vertices: Vec<Vector3<f64>> = unit_vertices
        .iter()
        .map(|v| sphere.center + sphere.radius * v)
        .collect();
    let mut panels = Vec::with_capacity(faces.len());
    for f in &faces {
        let mut idx = *f;
        let mut cross = (vertices[idx[1]] - vertices[idx[0]]).cross(&(vertices[idx[2]] - vertices[idx[0]]));
        let centroid = (vertices[idx[0]] + vertices[idx[1]] + vertices[idx[2]]) / 3.0;
        // Keep the winding outward-facing.
        if cross.dot(&(centroid - sphere.center)) < 0.0 {
            idx.swap(1, 2);
            cross = -cross;
        }
        let area = 0.5 * cross.norm();
        panels.push(Panel {
            vertices: idx,
            centroid,
            area,
            normal: cross / cross.norm(),
            component: 0,
        });
    }
    Ok(SurfaceMesh {
        vertices,
        panels,
        refinement,
        component_count: 1,
    })
}

/// Meshes every resonator of the system and concatenates the per-sphere
/// meshes, component-major, with component labels preserved.
pub fn build_system_mesh(
    system: &ResonatorSystem,
    refinement: u32,
) -> Result<SurfaceMesh, GeometryError> {
    let spheres = system.spheres();
    for i in 0..spheres.len() {
        for j in (i + 1)..spheres.len() {
            let gap = pair_gap(&spheres[i], &spheres[j]);
            if gap <= 0.0 {
                return Err(GeometryError::Overlap {
                    first: i,
                    second: j,
                    gap,
                });
            }
        }
    }
    let mut vertices = Vec::new();
    let mut panels = Vec::new();
    for (c, sphere) in spheres.iter().enumerate() {
        let part = build_sphere_mesh(sphere, refinement)?;
        let offset = vertices.len();
        vertices.extend(part.vertices);
        panels.extend(part.panels.into_iter().map(|mut p| {
            p.vertices = [
                p.vertices[0] + offset,
                p.vertices[1] + offset,
                p.vertices[2] + offset,
            ];
            p.component = c;
            p
        }));
    }
    Ok(SurfaceMesh {
        vertices,
        panels,
        refinement,
        component_count: spheres.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit_sphere() -> SphereSpec {
        SphereSpec::new(Vector3::zeros(), 1.0)
    }

    #[test]
    fn icosahedron_counts() {
        let mesh = build_sphere_mesh(&unit_sphere(), 0).unwrap();
        assert_eq!(mesh.panel_count(), 20);
        assert_eq!(mesh.vertices.len(), 12);
    }

    #[test]
    fn refinement_three_panel_count() {
        let mesh = build_sphere_mesh(&unit_sphere(), 3).unwrap();
        assert_eq!(mesh.panel_count(), 1280);
    }

    #[test]
    fn refinement_four_area_close_to_sphere() {
        // flat-panel deficit at refinement 4, measured against analytic 4π
        let mesh = build_sphere_mesh(&unit_sphere(), 4).unwrap();
        let area = mesh.component_area(0);
        let deficit = (4.0 * PI - area) / (4.0 * PI);
        assert!(deficit > 0.0);
        assert!(deficit < 1.25e-3, "deficit {deficit}");
    }

    #[test]
    fn area_increases_with_refinement_and_stays_below_sphere() {
        let sphere = SphereSpec::new(Vector3::new(0.3, -0.1, 2.0), 0.7);
        let exact = 4.0 * PI * sphere.radius * sphere.radius;
        let mut last = 0.0;
        for refinement in 0..=5 {
            let mesh = build_sphere_mesh(&sphere, refinement).unwrap();
            let area = mesh.component_area(0);
            assert!(area > last, "area not increasing at refinement {refinement}");
            assert!(area < exact);
            last = area;
        }
    }

    #[test]
    fn normals_point_outward_and_areas_positive() {
        let sphere = SphereSpec::new(Vector3::new(1.0, 2.0, -0.5), 0.4);
        let mesh = build_sphere_mesh(&sphere, 2).unwrap();
        for p in &mesh.panels {
            assert!(p.area > 0.0);
            assert!(p.normal.dot(&(p.centroid - sphere.center)) > 0.0);
            assert_relative_eq!(p.normal.norm(), 1.0, epsilon = 1e-14);
            // winding consistent with stored normal
            let v = mesh.panel_vertices(p);
            let cross = (v[1] - v[0]).cross(&(v[2] - v[0]));
            assert!(cross.dot(&p.normal) > 0.0);
        }
    }

    #[test]
    fn weighted_centroid_recovers_center() {
        let sphere = SphereSpec::new(Vector3::new(-2.0, 0.5, 1.25), 0.3);
        let mesh = build_sphere_mesh(&sphere, 3).unwrap();
        let c = mesh.component_centroid(0);
        assert!((c - sphere.center).norm() <= 1e-12 * sphere.radius);
    }

    #[test]
    fn mesh_construction_is_deterministic() {
        let sphere = SphereSpec::new(Vector3::new(0.1, 0.2, 0.3), 0.9);
        let a = build_sphere_mesh(&sphere, 3).unwrap();
        let b = build_sphere_mesh(&sphere, 3).unwrap();
        assert_eq!(a.vertices.len(), b.vertices.len());
        for (va, vb) in a.vertices.iter().zip(&b.vertices) {
            assert_eq!(va.x.to_bits(), vb.x.to_bits());
            assert_eq!(va.y.to_bits(), vb.y.to_bits());
            assert_eq!(va.z.to_bits(), vb.z.to_bits());
        }
        for (pa, pb) in a.panels.iter().zip(&b.panels) {
            assert_eq!(pa.vertices, pb.vertices);
            assert_eq!(pa.area.to_bits(), pb.area.to_bits());
        }
    }

    #[test]
    fn refinement_budget_enforced() {
        let err = build_sphere_mesh(&unit_sphere(), 7).unwrap_err();
        assert!(matches!(err, GeometryError::RefinementBudget { .. }));
    }

    fn symmetric_dimer() -> ResonatorSystem {
        let spheres = vec![
            SphereSpec::new(Vector3::new(0.0, 0.0, -0.5), 0.2),
            SphereSpec::new(Vector3::new(0.0, 0.0, 0.5), 0.2),
        ];
        ResonatorSystem::new(spheres, 1.0, 1.0, 1e-3, Complex64::new(0.0, 0.0)).unwrap()
    }

    #[test]
    fn dimer_mesh_counts_and_labels() {
        let mesh = build_system_mesh(&symmetric_dimer(), 2).unwrap();
        assert_eq!(mesh.panel_count(), 640);
        assert_eq!(mesh.component_count, 2);
        assert!(mesh.panels[..320].iter().all(|p| p.component == 0));
        assert!(mesh.panels[320..].iter().all(|p| p.component == 1));
    }

    #[test]
    fn single_sphere_system_is_one_component() {
        let sys = ResonatorSystem::new(
            vec![SphereSpec::new(Vector3::zeros(), 0.2)],
            1.0,
            1.0,
            1e-3,
            Complex64::new(0.0, 0.0),
        )
        .unwrap();
        let mesh = build_system_mesh(&sys, 1).unwrap();
        assert!(mesh.panels.iter().all(|p| p.component == 0));
        assert_eq!(mesh.component_count, 1);
    }

    #[test]
    fn touching_spheres_rejected() {
        let spheres = vec![
            SphereSpec::new(Vector3::zeros(), 1.0),
            SphereSpec::new(Vector3::new(2.0, 0.0, 0.0), 1.0),
        ];
        let err = ResonatorSystem::new(spheres, 1.0, 1.0, 1e-3, Complex64::new(0.0, 0.0))
            .unwrap_err();
        match err {
            GeometryError::Overlap { first, second, .. } => {
                assert_eq!((first, second), (0, 1));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn separation_report_reference_dimer() {
        let report = validate_separation(&symmetric_dimer());
        assert_relative_eq!(report.min_gap.unwrap(), 0.6, epsilon = 1e-14);
        assert_relative_eq!(report.min_ratio.unwrap(), 3.0, epsilon = 1e-13);
        assert!(report.pass);
    }

    #[test]
    fn separation_report_close_pair_fails() {
        let spheres = vec![
            SphereSpec::new(Vector3::zeros(), 0.2),
            SphereSpec::new(Vector3::new(0.41, 0.0, 0.0), 0.2),
        ];
        let sys =
            ResonatorSystem::new(spheres, 1.0, 1.0, 1e-3, Complex64::new(0.0, 0.0)).unwrap();
        let report = validate_separation(&sys);
        assert_relative_eq!(report.min_gap.unwrap(), 0.01, epsilon = 1e-12);
        assert_relative_eq!(report.min_ratio.unwrap(), 0.05, epsilon = 1e-10);
        assert!(!report.pass);
    }

    #[test]
    fn separation_report_monomer_vacuous() {
        let sys = ResonatorSystem::new(
            vec![SphereSpec::new(Vector3::zeros(), 0.2)],
            1.0,
            1.0,
            1e-3,
            Complex64::new(0.0, 0.0),
        )
        .unwrap();
        let report = validate_separation(&sys);
        assert!(report.pass);
        assert!(report.min_gap.is_none());
    }
}
