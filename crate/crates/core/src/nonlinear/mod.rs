//! The leading-order nonlinear resonance system and the Kerr pencil:
//! residual evaluation, gauge handling, Newton solves, pseudo-arclength
//! continuation and seeded multistart sweeps that discover the
//! nonlinearity-induced solution families.

mod continuation;
mod jacobian;
mod multistart;
mod newton;

pub use continuation::{continue_branch, Branch, BranchOrigin, StepControl, Termination};
pub use jacobian::{jacobian_full, realified_jacobian, FreeParam};
pub use multistart::{multistart_sweep, MultistartOptions, SweepResult, SweepSolution};
pub use newton::{newton_solve, Constraint, Gauge, NewtonOptions, NewtonReport};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("initial vector is zero; the gauge row would be singular")]
    DegenerateStart,
    #[error("Newton did not converge within {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("augmented Jacobian is singular")]
    SingularJacobian,
    #[error("continuation seed has residual {residual:.3e}, above tolerance {tol:.3e}")]
    SeedNotConverged { residual: f64, tol: f64 },
    #[error("operation requires a two-component system, got {n}")]
    RequiresDimer { n: usize },
    #[error(transparent)]
    Spectral(#[from] crate::linear::SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// Cgen·q − ω²(q − β·cr²·|q|²⊙q) = 0; the frequency unknown is ω².
    LeadingOrder,
    /// (ω²I − δCgen + sign·ωδ(i/4πc₀)·CgenJC)q + |ω|²ω·iβ·cr²·|q|²⊙q = 0;
    /// the frequency unknown is ω, with the root branch tracked by
    /// continuity from the seed.
    KerrPencil,
}

/// Immutable problem data shared by all nonlinear solves.
#[derive(Debug, Clone)]
pub struct NonlinearParams {
    pub cgen: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub cr: f64,
    pub beta: Complex64,
    pub c0: f64,
    pub delta: f64,
    pub model: Model,
    pub pencil_sign: f64,
    cgen_c: DMatrix<Complex64>,
    coupling_c: DMatrix<Complex64>,
}

impl NonlinearParams {
    pub fn leading_order(cgen: DMatrix<f64>, cr: f64, beta: Complex64) -> Self {
        let n = cgen.nrows();
        Self::build(cgen, DMatrix::zeros(n, n), cr, beta, 1.0, 0.0, Model::LeadingOrder, 1.0)
    }

    pub fn kerr_pencil(
        cgen: DMatrix<f64>,
        c: DMatrix<f64>,
        cr: f64,
        beta: Complex64,
        c0: f64,
        delta: f64,
        pencil_sign: f64,
    ) -> Self {
        assert!(delta > 0.0, "the Kerr pencil needs a positive contrast");
        Self::build(cgen, c, cr, beta, c0, delta, Model::KerrPencil, pencil_sign)
    }

    fn build(
        cgen: DMatrix<f64>,
        c: DMatrix<f64>,
        cr: f64,
        beta: Complex64,
        c0: f64,
        delta: f64,
        model: Model,
        pencil_sign: f64,
    ) -> Self {
        let n = cgen.nrows();
        assert_eq!(cgen.ncols(), n);
        assert_eq!(c.nrows(), n);
        let cgen_c = crate::linear::to_complex(&cgen);
        let cc = crate::linear::to_complex(&c);
        let ones = DMatrix::from_element(n, n, Complex64::new(1.0, 0.0));
        let coupling_c = &cgen_c * ones * &cc;
        Self {
            cgen,
            c,
            cr,
            beta,
            c0,
            delta,
            model,
            pencil_sign,
            cgen_c,
            coupling_c,
        }
    }

    pub fn dim(&self) -> usize {
        self.cgen.nrows()
    }

    pub(crate) fn cgen_complex(&self) -> &DMatrix<Complex64> {
        &self.cgen_c
    }

    pub(crate) fn coupling_complex(&self) -> &DMatrix<Complex64> {
        &self.coupling_c
    }

    /// Pencil part of the Kerr residual: ω²I − δCgen + sign·ωδ(i/4πc₀)·CgenJC.
    pub(crate) fn kerr_matrix(&self, omega: Complex64) -> DMatrix<Complex64> {
        let n = self.dim();
        let i = Complex64::new(0.0, 1.0);
        let mut m = DMatrix::from_diagonal_element(n, n, omega * omega);
        m -= self.cgen_complex() * Complex64::new(self.delta, 0.0);
        m += self.coupling_complex()
            * (omega * self.delta * self.pencil_sign * i / (4.0 * std::f64::consts::PI * self.c0));
        m
    }
}

/// The frequency unknown in its model-specific form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FreqVar {
    OmegaSq(Complex64),
    Omega(Complex64),
}

impl FreqVar {
    pub fn omega_sq(&self) -> Complex64 {
        match *self {
            FreqVar::OmegaSq(w) => w,
            FreqVar::Omega(w) => w * w,
        }
    }

    pub fn value(&self) -> Complex64 {
        match *self {
            FreqVar::OmegaSq(w) | FreqVar::Omega(w) => w,
        }
    }

    pub(crate) fn with_value(&self, v: Complex64) -> FreqVar {
        match self {
            FreqVar::OmegaSq(_) => FreqVar::OmegaSq(v),
            FreqVar::Omega(_) => FreqVar::Omega(v),
        }
    }

    /// Natural frequency variable for a model, converting via the principal
    /// square root when needed.
    pub fn for_model(model: Model, omega_sq: Complex64) -> FreqVar {
        match model {
            Model::LeadingOrder => FreqVar::OmegaSq(omega_sq),
            Model::KerrPencil => FreqVar::Omega(omega_sq.sqrt()),
        }
    }
}

/// Component-wise cubic term |q|²⊙q.
pub(crate) fn cubic(q: &DVector<Complex64>) -> DVector<Complex64> {
    q.map(|x| x.norm_sqr() * x)
}

/// Residual of the active model at (q, frequency).
pub fn residual(q: &DVector<Complex64>, freq: FreqVar, p: &NonlinearParams) -> DVector<Complex64> {
    match p.model {
        Model::LeadingOrder => {
            let w = freq.omega_sq();
            let lin = p.cgen_complex() * q;
            let nl = q - cubic(q) * (p.beta * (p.cr * p.cr));
            lin - nl * w
        }
        Model::KerrPencil => {
            let omega = match freq {
                FreqVar::Omega(w) => w,
                FreqVar::OmegaSq(w) => w.sqrt(),
            };
            let i = Complex64::new(0.0, 1.0);
            let m = p.kerr_matrix(omega);
            let h = omega.norm_sqr() * omega;
            &m * q + cubic(q) * (h * i * p.beta * (p.cr * p.cr))
        }
    }
}

pub fn residual_inf_norm(q: &DVector<Complex64>, freq: FreqVar, p: &NonlinearParams) -> f64 {
    residual(q, freq, p)
        .iter()
        .map(|x| x.norm())
        .fold(0.0, f64::max)
}

/// One gauge-canonical solution of the nonlinear system.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    /// Largest-magnitude entry real and nonnegative.
    pub q: DVector<Complex64>,
    pub omega_sq: Complex64,
    /// The tracked square root; present for the Kerr pencil only.
    pub omega: Option<Complex64>,
    /// Residual ∞-norm recomputed after canonicalization.
    pub residual_norm: f64,
    /// Euclidean norm of q.
    pub amplitude: f64,
}

impl BranchPoint {
    pub(crate) fn freq_var(&self) -> FreqVar {
        match self.omega {
            Some(w) => FreqVar::Omega(w),
            None => FreqVar::OmegaSq(self.omega_sq),
        }
    }

    pub(crate) fn from_state(
        mut q: DVector<Complex64>,
        freq: FreqVar,
        p: &NonlinearParams,
    ) -> Self {
        crate::linear::canonical_phase(&mut q);
        let residual_norm = residual_inf_norm(&q, freq, p);
        let amplitude = q.dotc(&q).re.sqrt();
        let (omega_sq, omega) = match freq {
            FreqVar::OmegaSq(w) => (w, None),
            FreqVar::Omega(w) => (w * w, Some(w)),
        };
        BranchPoint {
            q,
            omega_sq,
            omega,
            residual_norm,
            amplitude,
        }
    }
}

/// Phase-invariant distance between two solutions: the gauge-minimal
/// q-distance plus a relative ω² mismatch.
pub fn gauge_distance(a: &BranchPoint, b: &BranchPoint) -> f64 {
    let dq = gauge_distance_q(&a.q, &b.q);
    let dw = (a.omega_sq - b.omega_sq).norm() / (1.0 + a.omega_sq.norm().max(b.omega_sq.norm()));
    dq + dw
}

/// min over θ of ‖e^{iθ}·a − b‖.
pub fn gauge_distance_q(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    let na = a.dotc(a).re;
    let nb = b.dotc(b).re;
    let cross = a.dotc(b).norm();
    (na + nb - 2.0 * cross).max(0.0).sqrt()
}

/// Entry swap for two-component systems. For mirror-symmetric dimers the
/// swapped point solves the same system with the same ω² and conjugate
/// phase ratio. The residual is recomputed against `p`.
pub fn swap_solution(point: &BranchPoint, p: &NonlinearParams) -> Result<BranchPoint, SolveError> {
    if point.q.len() != 2 {
        return Err(SolveError::RequiresDimer { n: point.q.len() });
    }
    let swapped = DVector::from_vec(vec![point.q[1], point.q[0]]);
    Ok(BranchPoint::from_state(swapped, point.freq_var(), p))
}

/// Unit-modulus phase of q₁/q₂, or `None` when either entry vanishes
/// (rendered as a neutral color downstream).
pub fn branch_phase_ratio(point: &BranchPoint) -> Option<Complex64> {
    if point.q.len() != 2 {
        return None;
    }
    let tiny = 1e-14 * point.amplitude.max(f64::MIN_POSITIVE);
    let (q1, q2) = (point.q[0], point.q[1]);
    if q1.norm() <= tiny || q2.norm() <= tiny {
        return None;
    }
    let ratio = q1 / q2;
    Some(ratio / ratio.norm())
}
