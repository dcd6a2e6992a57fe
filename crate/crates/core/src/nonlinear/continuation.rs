//! Pseudo-arclength continuation of solution branches in the realified
//! unknowns (Re q, Im q, Re f, Im f).

use super::newton::{newton_solve, pack_state, rotate_state, unpack_state};
use super::{
    gauge_distance, jacobian_full, BranchPoint, Constraint, Gauge, NewtonOptions, NonlinearParams,
    SolveError,
};
use nalgebra::{DMatrix, DVector};

/// Why a branch stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    AmplitudeCap,
    /// Frequency ran away, which for real-β nonlinearities marks the
    /// closed-form pole.
    Pole,
    StepFailure,
    /// Returned to the seed in canonical coordinates.
    LoopClosure,
    MaxPoints,
}

/// Where a branch comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchOrigin {
    /// Continues from the scaled eigenvector of the given mode.
    LinearMode(usize),
    /// No β → 0 limit among the linear families.
    NonlinearityInduced,
}

impl std::fmt::Display for BranchOrigin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BranchOrigin::LinearMode(m) => write!(f, "linear_mode_{m}"),
            BranchOrigin::NonlinearityInduced => write!(f, "nonlinearity_induced"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub id: usize,
    pub origin: BranchOrigin,
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
    /// Near-bifurcation warnings raised by the corrector (point indices).
    pub warnings: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct StepControl {
    pub initial_ds: f64,
    pub min_ds: f64,
    pub max_ds: f64,
    pub max_points: usize,
    pub amplitude_cap: f64,
    /// |ω²| beyond which the branch is considered to have run into a pole.
    pub omega_sq_cap: f64,
    /// Canonical-coordinate distance to the seed that closes a loop.
    pub loop_tol: f64,
    /// +1 starts towards growing amplitude, −1 the other way.
    pub direction: f64,
    pub newton: NewtonOptions,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            initial_ds: 5e-3,
            min_ds: 1e-9,
            max_ds: 5e-2,
            max_points: 4000,
            amplitude_cap: 3.0,
            omega_sq_cap: 1e7,
            loop_tol: 1e-8,
            direction: 1.0,
            newton: NewtonOptions {
                tol: 1e-12,
                max_iterations: 25,
                ..NewtonOptions::default()
            },
        }
    }
}

/// Tangent as the nullspace of the gauge-augmented Jacobian (2N+1 rows,
/// 2N+2 unknowns) at a regular point.
fn nullspace_tangent(
    z: &DVector<f64>,
    template: super::FreqVar,
    p: &NonlinearParams,
    gauge_k: usize,
) -> Result<DVector<f64>, SolveError> {
    let n = p.dim();
    let (q, freq) = unpack_state(z, template);
    let top = jacobian_full(&q, freq, p);
    // padded square so the full SVD carries the nullspace direction
    let mut jac = DMatrix::zeros(2 * n + 2, 2 * n + 2);
    jac.view_mut((0, 0), (2 * n, 2 * n + 2)).copy_from(&top);
    jac[(2 * n, n + gauge_k)] = 1.0;
    let svd = jac.svd(false, true);
    let vt = svd.v_t.ok_or(SolveError::SingularJacobian)?;
    let mut row = 0;
    let mut smallest = f64::INFINITY;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s < smallest {
            smallest = *s;
            row = i;
        }
    }
    let mut t = DVector::from_fn(2 * n + 2, |i, _| vt[(row, i)]);
    let norm = t.norm();
    if norm == 0.0 {
        return Err(SolveError::SingularJacobian);
    }
    t /= norm;
    Ok(t)
}

/// Traces the branch through `seed` by secant-predictor pseudo-arclength
/// steps with an adaptive step length (halve on corrector failure, grow ×1.3
/// after three easy successes).
pub fn continue_branch(
    seed: &BranchPoint,
    origin: BranchOrigin,
    p: &NonlinearParams,
    step: &StepControl,
) -> Result<Branch, SolveError> {
    // seeds solved at the default 1e-11 contract are acceptable even when
    // the corrector runs tighter
    let seed_tol = step.newton.tol.max(1e-11);
    if !(seed.residual_norm < seed_tol) {
        return Err(SolveError::SeedNotConverged {
            residual: seed.residual_norm,
            tol: seed_tol,
        });
    }
    let n = p.dim();
    let template = seed.freq_var();
    let mut gauge_k = argmax_component(&seed.q);
    let mut z = pack_state(&seed.q, template);
    let mut tangent = nullspace_tangent(&z, template, p, gauge_k)?;
    // head towards growing amplitude, falling back to growing Re f
    let amp_dir: f64 = (0..2 * n).map(|i| z[i] * tangent[i]).sum();
    if amp_dir < 0.0 || (amp_dir.abs() < 1e-12 && tangent[2 * n] < 0.0) {
        tangent = -tangent;
    }
    tangent *= step.direction.signum();

    let mut points = vec![seed.clone()];
    let mut warnings = Vec::new();
    let mut ds = step.initial_ds;
    let mut easy_streak = 0usize;
    let termination;

    'outer: loop {
        if points.len() >= step.max_points {
            termination = Termination::MaxPoints;
            break;
        }
        let predicted = &z + &tangent * ds;
        let (pred_q, pred_freq) = unpack_state(&predicted, template);
        let solve = newton_solve(
            &pred_q,
            pred_freq,
            p,
            Gauge::FixPhase {
                index: Some(gauge_k),
            },
            Constraint::Arclength {
                predicted: predicted.clone(),
                tangent: tangent.clone(),
            },
            &step.newton,
        );
        match solve {
            Ok((point, report)) => {
                let z_new = pack_state_preserving_gauge(&point, template, gauge_k);
                let secant = &z_new - &z;
                let secant_norm = secant.norm();
                if secant_norm > 0.0 {
                    tangent = secant / secant_norm;
                }
                z = z_new;
                if report.near_bifurcation {
                    warnings.push(points.len());
                }
                points.push(point.clone());

                if point.amplitude > step.amplitude_cap {
                    termination = Termination::AmplitudeCap;
                    break 'outer;
                }
                if point.omega_sq.norm() > step.omega_sq_cap {
                    termination = Termination::Pole;
                    break 'outer;
                }
                if points.len() > 6 && gauge_distance(&point, seed) < step.loop_tol {
                    termination = Termination::LoopClosure;
                    break 'outer;
                }

                // keep the gauge component dominant
                let (q, _) = unpack_state(&z, template);
                let kmax = argmax_component(&q);
                if kmax != gauge_k && q[gauge_k].norm() < 0.5 * q[kmax].norm() {
                    let theta = -q[kmax].arg();
                    rotate_state(&mut z, theta);
                    rotate_tangent(&mut tangent, theta, n);
                    gauge_k = kmax;
                }

                if report.iterations <= 4 {
                    easy_streak += 1;
                    if easy_streak >= 3 {
                        ds = (ds * 1.3).min(step.max_ds);
                        easy_streak = 0;
                    }
                } else {
                    easy_streak = 0;
                }
            }
            Err(SolveError::DegenerateStart) => {
                return Err(SolveError::DegenerateStart);
            }
            Err(_) => {
                easy_streak = 0;
                ds *= 0.5;
                if ds < step.min_ds {
                    termination = Termination::StepFailure;
                    break;
                }
            }
        }
    }

    Ok(Branch {
        id: 0,
        origin,
        points,
        termination,
        warnings,
    })
}

fn argmax_component(q: &DVector<num_complex::Complex64>) -> usize {
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

/// Pack a canonicalized point back into the running gauge frame: rotate so
/// the gauge component is real nonnegative (the canonical form already is if
/// the gauge component is the argmax; otherwise re-align to the frame).
fn pack_state_preserving_gauge(
    point: &BranchPoint,
    template: super::FreqVar,
    gauge_k: usize,
) -> DVector<f64> {
    let mut q = point.q.clone();
    if q[gauge_k].norm() > 0.0 {
        let rot = num_complex::Complex64::from_polar(1.0, -q[gauge_k].arg());
        q *= rot;
    }
    pack_state(&q, template.with_value(point.freq_var().value()))
}

fn rotate_tangent(t: &mut DVector<f64>, theta: f64, n: usize) {
    let (c, s) = (theta.cos(), theta.sin());
    for j in 0..n {
        let (x, y) = (t[j], t[n + j]);
        t[j] = c * x - s * y;
        t[n + j] = s * x + c * y;
    }
}
