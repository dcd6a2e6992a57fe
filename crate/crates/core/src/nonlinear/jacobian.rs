//! Exact realified Jacobians. The cubic map q ↦ |q|²q and the Kerr factor
//! |ω|²ω are not complex-differentiable, so all derivatives are taken with
//! respect to the real and imaginary parts separately.

use super::{cubic, FreqVar, Model, NonlinearParams};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// One real unknown of the realified system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeParam {
    ReQ(usize),
    ImQ(usize),
    ReFreq,
    ImFreq,
}

/// All 2N+2 unknowns in state-vector order (Re q, Im q, Re f, Im f).
pub fn all_params(n: usize) -> Vec<FreeParam> {
    let mut params = Vec::with_capacity(2 * n + 2);
    params.extend((0..n).map(FreeParam::ReQ));
    params.extend((0..n).map(FreeParam::ImQ));
    params.push(FreeParam::ReFreq);
    params.push(FreeParam::ImFreq);
    params
}

/// ∂(|z|²z)/∂x and ∂(|z|²z)/∂y for z = x + iy.
fn cubic_partials(z: Complex64) -> (Complex64, Complex64) {
    let (x, y) = (z.re, z.im);
    let dx = Complex64::new(3.0 * x * x + y * y, 2.0 * x * y);
    let dy = Complex64::new(2.0 * x * y, x * x + 3.0 * y * y);
    (dx, dy)
}

/// Complex partial derivative of the residual with respect to one real unknown.
fn residual_partial(
    q: &DVector<Complex64>,
    freq: FreqVar,
    p: &NonlinearParams,
    param: FreeParam,
) -> DVector<Complex64> {
    let n = p.dim();
    let i = Complex64::new(0.0, 1.0);
    let beta_cr2 = p.beta * (p.cr * p.cr);
    match p.model {
        Model::LeadingOrder => {
            let w = freq.omega_sq();
            match param {
                FreeParam::ReQ(j) | FreeParam::ImQ(j) => {
                    let (dgx, dgy) = cubic_partials(q[j]);
                    let (unit, dg) = match param {
                        FreeParam::ReQ(_) => (Complex64::new(1.0, 0.0), dgx),
                        _ => (i, dgy),
                    };
                    let mut col = DVector::from_fn(n, |r, _| p.cgen_complex()[(r, j)] * unit);
                    col[j] += -w * unit + w * beta_cr2 * dg;
                    col
                }
                FreeParam::ReFreq | FreeParam::ImFreq => {
                    let unit = if param == FreeParam::ReFreq { Complex64::new(1.0, 0.0) } else { i };
                    (cubic(q) * beta_cr2 - q) * unit
                }
            }
        }
        Model::KerrPencil => {
            let omega = match freq {
                FreqVar::Omega(w) => w,
                FreqVar::OmegaSq(w) => w.sqrt(),
            };
            let h = omega.norm_sqr() * omega;
            match param {
                FreeParam::ReQ(j) | FreeParam::ImQ(j) => {
                    let m = p.kerr_matrix(omega);
                    let (dgx, dgy) = cubic_partials(q[j]);
                    let (unit, dg) = match param {
                        FreeParam::ReQ(_) => (Complex64::new(1.0, 0.0), dgx),
                        _ => (i, dgy),
                    };
                    let mut col = DVector::from_fn(n, |r, _| m[(r, j)] * unit);
                    col[j] += h * i * beta_cr2 * dg;
                    col
                }
                FreeParam::ReFreq | FreeParam::ImFreq => {
                    let (a, b) = (omega.re, omega.im);
                    // pencil part is analytic in ω: ∂M/∂ω = 2ωI + sign·δ(i/4πc₀)K
                    let danalytic = q * (2.0 * omega)
                        + p.coupling_complex() * q
                            * (p.pencil_sign * p.delta * i
                                / (4.0 * std::f64::consts::PI * p.c0));
                    let (dh, unit) = match param {
                        FreeParam::ReFreq => (
                            Complex64::new(3.0 * a * a + b * b, 2.0 * a * b),
                            Complex64::new(1.0, 0.0),
                        ),
                        _ => (Complex64::new(2.0 * a * b, a * a + 3.0 * b * b), i),
                    };
                    danalytic * unit + cubic(q) * (dh * i * beta_cr2)
                }
            }
        }
    }
}

/// Realified Jacobian: rows are (Re R, Im R), columns the chosen unknowns.
pub fn realified_jacobian(
    q: &DVector<Complex64>,
    freq: FreqVar,
    p: &NonlinearParams,
    params: &[FreeParam],
) -> DMatrix<f64> {
    let n = p.dim();
    let mut jac = DMatrix::zeros(2 * n, params.len());
    for (col, &param) in params.iter().enumerate() {
        let partial = residual_partial(q, freq, p, param);
        for r in 0..n {
            jac[(r, col)] = partial[r].re;
            jac[(n + r, col)] = partial[r].im;
        }
    }
    jac
}

/// Full 2N × (2N+2) Jacobian in state-vector order.
pub fn jacobian_full(q: &DVector<Complex64>, freq: FreqVar, p: &NonlinearParams) -> DMatrix<f64> {
    realified_jacobian(q, freq, p, &all_params(p.dim()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinear::residual;

    fn finite_difference_column(
        q: &DVector<Complex64>,
        freq: FreqVar,
        p: &NonlinearParams,
        param: FreeParam,
        h: f64,
    ) -> DVector<Complex64> {
        let perturb = |sign: f64| -> DVector<Complex64> {
            let mut qp = q.clone();
            let mut fp = freq;
            match param {
                FreeParam::ReQ(j) => qp[j] += Complex64::new(sign * h, 0.0),
                FreeParam::ImQ(j) => qp[j] += Complex64::new(0.0, sign * h),
                FreeParam::ReFreq => {
                    fp = freq.with_value(freq.value() + Complex64::new(sign * h, 0.0))
                }
                FreeParam::ImFreq => {
                    fp = freq.with_value(freq.value() + Complex64::new(0.0, sign * h))
                }
            }
            residual(&qp, fp, p)
        };
        (perturb(1.0) - perturb(-1.0)) / Complex64::new(2.0 * h, 0.0)
    }

    fn check_model(p: &NonlinearParams, freq: FreqVar, q: DVector<Complex64>) {
        let scale = q.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1.0);
        let h = 1e-6 * scale;
        for param in all_params(p.dim()) {
            let exact = residual_partial(&q, freq, p, param);
            let fd = finite_difference_column(&q, freq, p, param, h);
            let denom = exact.norm().max(1e-8);
            assert!(
                (exact - fd).norm() / denom < 1e-6,
                "mismatch for {param:?}"
            );
        }
    }

    #[test]
    fn leading_order_matches_finite_differences() {
        let cgen = DMatrix::from_row_slice(2, 2, &[78.0, -15.0, -15.0, 78.0]);
        let p = NonlinearParams::leading_order(cgen, 1.3, Complex64::new(0.4, -89.0));
        let q = DVector::from_vec(vec![Complex64::new(0.31, -0.12), Complex64::new(-0.05, 0.44)]);
        check_model(&p, FreqVar::OmegaSq(Complex64::new(61.0, -3.5)), q);
    }

    #[test]
    fn kerr_pencil_matches_finite_differences() {
        let cgen = DMatrix::from_row_slice(2, 2, &[78.0, -15.0, -15.0, 78.0]);
        let c = DMatrix::from_row_slice(2, 2, &[2.62, -0.52, -0.52, 2.62]);
        let p = NonlinearParams::kerr_pencil(cgen, c, 1.0, Complex64::new(0.0, -89.0), 1.0, 1e-3, 1.0);
        let q = DVector::from_vec(vec![Complex64::new(0.31, -0.12), Complex64::new(-0.05, 0.44)]);
        check_model(&p, FreqVar::Omega(Complex64::new(0.25, -0.01)), q);
    }

    #[test]
    fn cubic_block_vanishes_at_zero() {
        let cgen = DMatrix::from_row_slice(2, 2, &[78.0, -15.0, -15.0, 78.0]);
        let p = NonlinearParams::leading_order(cgen.clone(), 1.0, Complex64::new(0.0, -89.0));
        let p0 = NonlinearParams::leading_order(cgen, 1.0, Complex64::new(0.0, 0.0));
        let q = DVector::from_element(2, Complex64::new(0.0, 0.0));
        let freq = FreqVar::OmegaSq(Complex64::new(50.0, 0.0));
        let with_beta = jacobian_full(&q, freq, &p);
        let without = jacobian_full(&q, freq, &p0);
        assert!((with_beta - without).norm() < 1e-14);
    }

    #[test]
    fn beta_zero_jacobian_is_block_linear() {
        // with β = 0 the q-block must be exactly the realified linear pencil
        let cgen = DMatrix::from_row_slice(2, 2, &[78.0, -15.0, -15.0, 78.0]);
        let p = NonlinearParams::leading_order(cgen.clone(), 1.0, Complex64::new(0.0, 0.0));
        let q = DVector::from_vec(vec![Complex64::new(0.3, 0.2), Complex64::new(0.1, -0.4)]);
        let w = Complex64::new(55.0, 1.5);
        let jac = jacobian_full(&q, FreqVar::OmegaSq(w), &p);
        for j in 0..2 {
            for r in 0..2 {
                let a = Complex64::new(cgen[(r, j)], 0.0) - if r == j { w } else { Complex64::new(0.0, 0.0) };
                assert!((jac[(r, j)] - a.re).abs() < 1e-13);
                assert!((jac[(2 + r, j)] - a.im).abs() < 1e-13);
                // Im-q columns are i times the same complex column
                assert!((jac[(r, 2 + j)] + a.im).abs() < 1e-13);
                assert!((jac[(2 + r, 2 + j)] - a.re).abs() < 1e-13);
            }
        }
    }
}
