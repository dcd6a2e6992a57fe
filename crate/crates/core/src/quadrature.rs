//! Fixed-order quadrature rules on the reference triangle.
//!
//! Points are barycentric, weights sum to one; integrals over a physical
//! triangle are `area * Σ w_k f(y_k)`.

#[derive(Debug, Clone)]
pub struct TriangleRule {
    /// Barycentric coordinates (w.r.t. the three vertices).
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Centroid rule, exact for linear integrands.
    pub fn degree1() -> Self {
        Self {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![1.0],
        }
    }

    /// Classical 7-point rule, exact for polynomials of degree 5.
    pub fn degree5() -> Self {
        let s15 = 15f64.sqrt();
        let a1 = (6.0 - s15) / 21.0;
        let a2 = (6.0 + s15) / 21.0;
        let w0 = 9.0 / 40.0;
        let w1 = (155.0 - s15) / 1200.0;
        let w2 = (155.0 + s15) / 1200.0;
        let mut points = vec![[1.0 / 3.0; 3]];
        let mut weights = vec![w0];
        for (a, w) in [(a1, w1), (a2, w2)] {
            let b = 1.0 - 2.0 * a;
            points.push([b, a, a]);
            points.push([a, b, a]);
            points.push([a, a, b]);
            weights.push(w);
            weights.push(w);
            weights.push(w);
        }
        Self { points, weights }
    }
}
