//! Damped Newton solves of the gauge-fixed, constraint-augmented realified
//! system.

use super::jacobian::jacobian_full;
use super::{residual, BranchPoint, FreqVar, NonlinearParams, SolveError};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    /// Residual ∞-norm tolerance on the augmented system.
    pub tol: f64,
    pub max_iterations: usize,
    /// Armijo halvings per iteration.
    pub max_damping: usize,
    /// Condition estimate above which a near-bifurcation warning is attached.
    pub condition_warning: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iterations: 100,
            max_damping: 40,
            condition_warning: 1e13,
        }
    }
}

/// Phase-fixing row removing the global gauge freedom.
#[derive(Debug, Clone, Copy)]
pub enum Gauge {
    /// Im q_k = 0 (k defaults to the largest-magnitude entry of the start).
    FixPhase { index: Option<usize> },
    /// Re q_k = value; useful when a component is pinned externally.
    FixComponent { index: usize, value: f64 },
}

/// Closing row making the augmented system square.
#[derive(Debug, Clone)]
pub enum Constraint {
    /// ‖q‖₂ = s.
    FixedAmplitude(f64),
    /// Frequency held at its initial value; q alone is solved
    /// (consistent overdetermined system, handled by normal equations).
    FixedFreq,
    /// Pseudo-arclength: tangent · (z − z_predicted) = 0.
    Arclength {
        predicted: DVector<f64>,
        tangent: DVector<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub iterations: usize,
    pub condition_estimate: f64,
    pub near_bifurcation: bool,
}

/// Realified state [Re q, Im q, Re f, Im f].
pub(crate) fn pack_state(q: &DVector<Complex64>, freq: FreqVar) -> DVector<f64> {
    let n = q.len();
    let mut z = DVector::zeros(2 * n + 2);
    for j in 0..n {
        z[j] = q[j].re;
        z[n + j] = q[j].im;
    }
    let f = freq.value();
    z[2 * n] = f.re;
    z[2 * n + 1] = f.im;
    z
}

pub(crate) fn unpack_state(z: &DVector<f64>, template: FreqVar) -> (DVector<Complex64>, FreqVar) {
    let n = (z.len() - 2) / 2;
    let q = DVector::from_fn(n, |j, _| Complex64::new(z[j], z[n + j]));
    let freq = template.with_value(Complex64::new(z[2 * n], z[2 * n + 1]));
    (q, freq)
}

/// Rotate the global phase of the q-part of a state by e^{iθ}.
pub(crate) fn rotate_state(z: &mut DVector<f64>, theta: f64) {
    let n = (z.len() - 2) / 2;
    let (c, s) = (theta.cos(), theta.sin());
    for j in 0..n {
        let (x, y) = (z[j], z[n + j]);
        z[j] = c * x - s * y;
        z[n + j] = s * x + c * y;
    }
}

fn gauge_index(gauge: &Gauge, q: &DVector<Complex64>) -> usize {
    match gauge {
        Gauge::FixPhase { index: Some(k) } => *k,
        Gauge::FixPhase { index: None } => {
            let mut k = 0;
            let mut best = -1.0;
            for (i, x) in q.iter().enumerate() {
                let m = x.norm();
                if m > best {
                    best = m;
                    k = i;
                }
            }
            k
        }
        Gauge::FixComponent { index, .. } => *index,
    }
}

fn gauge_value(gauge: &Gauge, k: usize, z: &DVector<f64>, n: usize) -> f64 {
    match gauge {
        Gauge::FixPhase { .. } => z[n + k],
        Gauge::FixComponent { value, .. } => z[k] - value,
    }
}

fn gauge_gradient(gauge: &Gauge, k: usize, n: usize) -> DVector<f64> {
    let mut g = DVector::zeros(2 * n + 2);
    match gauge {
        Gauge::FixPhase { .. } => g[n + k] = 1.0,
        Gauge::FixComponent { .. } => g[k] = 1.0,
    }
    g
}

fn constraint_value(constraint: &Constraint, z: &DVector<f64>, n: usize) -> f64 {
    match constraint {
        Constraint::FixedAmplitude(s) => {
            let norm_sq: f64 = (0..2 * n).map(|i| z[i] * z[i]).sum();
            // normalized to a distance scale so tolerances are comparable
            (norm_sq - s * s) / (2.0 * s.max(f64::MIN_POSITIVE))
        }
        Constraint::FixedFreq => 0.0,
        Constraint::Arclength { predicted, tangent } => tangent.dot(&(z - predicted)),
    }
}

fn constraint_gradient(constraint: &Constraint, z: &DVector<f64>, n: usize) -> DVector<f64> {
    match constraint {
        Constraint::FixedAmplitude(s) => {
            let mut g = DVector::zeros(2 * n + 2);
            for i in 0..2 * n {
                g[i] = z[i] / s.max(f64::MIN_POSITIVE);
            }
            g
        }
        Constraint::FixedFreq => DVector::zeros(2 * n + 2),
        Constraint::Arclength { tangent, .. } => tangent.clone(),
    }
}

fn augmented_residual(
    z: &DVector<f64>,
    template: FreqVar,
    p: &NonlinearParams,
    gauge: &Gauge,
    k: usize,
    constraint: &Constraint,
) -> DVector<f64> {
    let n = p.dim();
    let (q, freq) = unpack_state(z, template);
    let r = residual(&q, freq, p);
    let mut f = DVector::zeros(2 * n + 2);
    for i in 0..n {
        f[i] = r[i].re;
        f[n + i] = r[i].im;
    }
    f[2 * n] = gauge_value(gauge, k, z, n);
    f[2 * n + 1] = constraint_value(constraint, z, n);
    f
}

fn augmented_jacobian(
    z: &DVector<f64>,
    template: FreqVar,
    p: &NonlinearParams,
    gauge: &Gauge,
    k: usize,
    constraint: &Constraint,
) -> DMatrix<f64> {
    let n = p.dim();
    let (q, freq) = unpack_state(z, template);
    let top = jacobian_full(&q, freq, p);
    let mut jac = DMatrix::zeros(2 * n + 2, 2 * n + 2);
    jac.view_mut((0, 0), (2 * n, 2 * n + 2)).copy_from(&top);
    jac.row_mut(2 * n).copy_from(&gauge_gradient(gauge, k, n).transpose());
    jac.row_mut(2 * n + 1)
        .copy_from(&constraint_gradient(constraint, z, n).transpose());
    jac
}

/// Damped Newton on the augmented square system. The output is
/// gauge-canonicalized and its residual re-verified from scratch.
pub fn newton_solve(
    init_q: &DVector<Complex64>,
    init_freq: FreqVar,
    p: &NonlinearParams,
    gauge: Gauge,
    constraint: Constraint,
    options: &NewtonOptions,
) -> Result<(BranchPoint, NewtonReport), SolveError> {
    let n = p.dim();
    assert_eq!(init_q.len(), n);
    if init_q.iter().all(|x| x.norm() == 0.0) {
        return Err(SolveError::DegenerateStart);
    }
    if let Constraint::FixedFreq = constraint {
        return newton_fixed_freq(init_q, init_freq, p, gauge, options);
    }

    let k = gauge_index(&gauge, init_q);
    let mut z = pack_state(init_q, init_freq);
    // start exactly on the phase gauge
    if let Gauge::FixPhase { .. } = gauge {
        let qk = Complex64::new(z[k], z[n + k]);
        if qk.norm() > 0.0 {
            rotate_state(&mut z, -qk.arg());
        }
    }

    let mut f = augmented_residual(&z, init_freq, p, &gauge, k, &constraint);
    let mut fnorm = f.norm();
    let mut last_jac: Option<DMatrix<f64>> = None;

    for iter in 0..options.max_iterations {
        if f.amax() < options.tol {
            let (q, freq) = unpack_state(&z, init_freq);
            let point = BranchPoint::from_state(q, freq, p);
            if point.residual_norm >= options.tol {
                return Err(SolveError::NoConvergence {
                    iterations: iter,
                    residual: point.residual_norm,
                });
            }
            let jac = last_jac
                .unwrap_or_else(|| augmented_jacobian(&z, init_freq, p, &gauge, k, &constraint));
            let condition_estimate = condition_2norm(&jac);
            return Ok((
                point,
                NewtonReport {
                    iterations: iter,
                    condition_estimate,
                    near_bifurcation: condition_estimate > options.condition_warning,
                },
            ));
        }

        let jac = augmented_jacobian(&z, init_freq, p, &gauge, k, &constraint);
        let lu = jac.clone().lu();
        let step = lu
            .solve(&(-&f))
            .ok_or(SolveError::SingularJacobian)?;
        last_jac = Some(jac);

        // Armijo backtracking with halving
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=options.max_damping {
            let trial = &z + &step * t;
            let ftrial = augmented_residual(&trial, init_freq, p, &gauge, k, &constraint);
            if ftrial.norm() <= (1.0 - 1e-4 * t) * fnorm {
                z = trial;
                f = ftrial;
                fnorm = f.norm();
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(SolveError::NoConvergence {
                iterations: iter + 1,
                residual: f.amax(),
            });
        }
    }
    Err(SolveError::NoConvergence {
        iterations: options.max_iterations,
        residual: f.amax(),
    })
}

/// Frequency held fixed: 2N residual rows plus the gauge row on 2N unknowns,
/// consistent at solutions; solved by Gauss-Newton normal equations.
fn newton_fixed_freq(
    init_q: &DVector<Complex64>,
    freq: FreqVar,
    p: &NonlinearParams,
    gauge: Gauge,
    options: &NewtonOptions,
) -> Result<(BranchPoint, NewtonReport), SolveError> {
    let n = p.dim();
    let k = gauge_index(&gauge, init_q);
    let mut q = init_q.clone();
    if let Gauge::FixPhase { .. } = gauge {
        if q[k].norm() > 0.0 {
            let rot = Complex64::from_polar(1.0, -q[k].arg());
            q *= rot;
        }
    }

    let eval = |q: &DVector<Complex64>| -> DVector<f64> {
        let r = residual(q, freq, p);
        let mut f = DVector::zeros(2 * n + 1);
        for i in 0..n {
            f[i] = r[i].re;
            f[n + i] = r[i].im;
        }
        f[2 * n] = match gauge {
            Gauge::FixPhase { .. } => q[k].im,
            Gauge::FixComponent { value, .. } => q[k].re - value,
        };
        f
    };

    let mut f = eval(&q);
    let mut fnorm = f.norm();
    for iter in 0..options.max_iterations {
        if f.amax() < options.tol {
            let point = BranchPoint::from_state(q, freq, p);
            return Ok((
                point,
                NewtonReport {
                    iterations: iter,
                    condition_estimate: f64::NAN,
                    near_bifurcation: false,
                },
            ));
        }
        let params = super::jacobian::all_params(n);
        let jq = super::realified_jacobian(&q, freq, p, &params[..2 * n]);
        let mut jac = DMatrix::zeros(2 * n + 1, 2 * n);
        jac.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&jq);
        match gauge {
            Gauge::FixPhase { .. } => jac[(2 * n, n + k)] = 1.0,
            Gauge::FixComponent { .. } => jac[(2 * n, k)] = 1.0,
        }
        let jt = jac.transpose();
        let normal = &jt * &jac;
        let rhs = &jt * &f;
        let step = normal
            .lu()
            .solve(&(-rhs))
            .ok_or(SolveError::SingularJacobian)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=options.max_damping {
            let mut trial = q.clone();
            for j in 0..n {
                trial[j] += Complex64::new(t * step[j], t * step[n + j]);
            }
            let ftrial = eval(&trial);
            if ftrial.norm() <= (1.0 - 1e-4 * t) * fnorm {
                q = trial;
                f = ftrial;
                fnorm = f.norm();
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(SolveError::NoConvergence {
                iterations: iter + 1,
                residual: f.amax(),
            });
        }
    }
    Err(SolveError::NoConvergence {
        iterations: options.max_iterations,
        residual: f.amax(),
    })
}

pub(crate) fn condition_2norm(m: &DMatrix<f64>) -> f64 {
    let svd = m.clone().svd(false, false);
    let max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let min = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
