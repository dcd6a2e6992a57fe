//! Seeded multistart sweeps over an amplitude grid: Newton from each scaled
//! linear eigenvector plus reproducible random starts, followed by
//! gauge-aware deduplication and origin labeling.

use super::continuation::BranchOrigin;
use super::newton::newton_solve;
use super::{
    gauge_distance_q, BranchPoint, Constraint, FreqVar, Gauge, Model, NewtonOptions,
    NonlinearParams, SolveError,
};
use crate::linear::eigensystem;
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct MultistartOptions {
    pub newton: NewtonOptions,
    /// Combined gauge metric below which two converged points are the same
    /// solution.
    pub dedup_tol: f64,
    /// Unit-direction distance within which a solution is attributed to a
    /// linear eigenvector family.
    pub origin_tol: f64,
    /// A solution at one amplitude level is "new" (a fresh seed) when no
    /// solution of the previous level matches it in direction and frequency.
    pub chain_direction_tol: f64,
    pub chain_freq_rel_tol: f64,
}

impl Default for MultistartOptions {
    fn default() -> Self {
        Self {
            // tighter than the 1e-11 emission gate so swapped and re-derived
            // copies of a solution stay under it as well
            newton: NewtonOptions {
                tol: 1e-12,
                ..NewtonOptions::default()
            },
            dedup_tol: 1e-6,
            origin_tol: 0.2,
            chain_direction_tol: 0.2,
            chain_freq_rel_tol: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSolution {
    pub point: BranchPoint,
    pub origin: BranchOrigin,
    /// Index into the amplitude grid.
    pub level: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub amplitudes: Vec<f64>,
    /// Deduplicated, canonically sorted solutions per amplitude level.
    pub levels: Vec<Vec<SweepSolution>>,
    /// Birth points of distinct families: all level-0 solutions plus any
    /// later solution not chained to the previous level.
    pub seeds: Vec<SweepSolution>,
    pub failed_starts: usize,
}

impl SweepResult {
    pub fn solutions_at(&self, level: usize) -> &[SweepSolution] {
        &self.levels[level]
    }

    /// First amplitude level whose solution count reaches `count`.
    pub fn first_level_with_count(&self, count: usize) -> Option<usize> {
        self.levels.iter().position(|l| l.len() >= count)
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
    let mut v = DVector::from_fn(n, |_, _| {
        Complex64::new(standard_normal(rng), standard_normal(rng))
    });
    let norm = v.dotc(&v).re.sqrt();
    if norm > 0.0 {
        v /= Complex64::new(norm, 0.0);
    } else {
        v[0] = Complex64::new(1.0, 0.0);
    }
    v
}

/// Initial frequency guess for a start vector: a Rayleigh quotient of the
/// linearized system, mapped to the model's frequency variable.
fn initial_freq(q: &DVector<Complex64>, p: &NonlinearParams) -> FreqVar {
    let num = q.dotc(&(p.cgen_complex() * q));
    let den = q.dotc(q);
    let west = num / den;
    match p.model {
        Model::LeadingOrder => FreqVar::OmegaSq(west),
        Model::KerrPencil => FreqVar::Omega((west * p.delta).sqrt()),
    }
}

fn sort_key(point: &BranchPoint) -> Vec<f64> {
    let mut key = vec![point.omega_sq.re, point.omega_sq.im];
    for x in point.q.iter() {
        key.push(x.re);
        key.push(x.im);
    }
    key
}

fn same_solution(a: &BranchPoint, b: &BranchPoint, tol: f64) -> bool {
    let dq = gauge_distance_q(&a.q, &b.q);
    let dw = (a.omega_sq - b.omega_sq).norm() / (1.0 + a.omega_sq.norm().max(b.omega_sq.norm()));
    dq <= tol * a.amplitude.max(b.amplitude).max(1.0) && dw <= tol
}

/// Sweeps the amplitude grid. At every positive amplitude s, Newton runs with
/// a fixed-amplitude constraint from each scaled eigenvector s·v̂ and from
/// `starts` seeded random directions of norm s; converged points are
/// canonicalized, deduplicated modulo gauge, sorted deterministically and
/// labeled by origin. Failed starts are counted, not fatal.
pub fn multistart_sweep(
    p: &NonlinearParams,
    amplitudes: &[f64],
    starts: usize,
    rng_seed: u64,
    options: &MultistartOptions,
) -> Result<SweepResult, SolveError> {
    let n = p.dim();
    let eig = eigensystem(&p.cgen)?;
    let eig_dirs: Vec<DVector<Complex64>> = eig.right.clone();

    let mut levels: Vec<Vec<SweepSolution>> = Vec::with_capacity(amplitudes.len());
    let mut seeds: Vec<SweepSolution> = Vec::new();
    let mut failed_starts = 0usize;

    for (level, &s) in amplitudes.iter().enumerate() {
        if s <= 0.0 {
            levels.push(Vec::new());
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rng.set_stream(level as u64 + 1);

        let mut starts_list: Vec<(DVector<Complex64>, FreqVar)> = Vec::new();
        for (mode, dir) in eig_dirs.iter().enumerate() {
            let q0 = dir * Complex64::new(s, 0.0);
            let freq = match p.model {
                Model::LeadingOrder => FreqVar::OmegaSq(eig.eigenvalues[mode]),
                Model::KerrPencil => FreqVar::Omega((eig.eigenvalues[mode] * p.delta).sqrt()),
            };
            starts_list.push((q0, freq));
        }
        // warm starts: follow every family already found at the previous level
        if let Some(prev) = levels.iter().rev().find(|l| !l.is_empty()) {
            for sol in prev.iter() {
                let scale = s / sol.point.amplitude.max(f64::MIN_POSITIVE);
                let q0 = &sol.point.q * Complex64::new(scale, 0.0);
                starts_list.push((q0, sol.point.freq_var()));
            }
        }
        for _ in 0..starts {
            let q0 = random_direction(&mut rng, n) * Complex64::new(s, 0.0);
            let freq = initial_freq(&q0, p);
            starts_list.push((q0, freq));
        }

        let mut found: Vec<BranchPoint> = Vec::new();
        for (q0, freq) in starts_list {
            match newton_solve(
                &q0,
                freq,
                p,
                Gauge::FixPhase { index: None },
                Constraint::FixedAmplitude(s),
                &options.newton,
            ) {
                Ok((point, _)) => found.push(point),
                Err(_) => failed_starts += 1,
            }
        }

        found.sort_by(|a, b| {
            sort_key(a)
                .partial_cmp(&sort_key(b))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut distinct: Vec<BranchPoint> = Vec::new();
        for point in found {
            if !distinct
                .iter()
                .any(|d| same_solution(d, &point, options.dedup_tol))
            {
                distinct.push(point);
            }
        }

        let solutions: Vec<SweepSolution> = distinct
            .into_iter()
            .map(|point| {
                let origin = label_origin(&point, &eig_dirs, options.origin_tol);
                SweepSolution {
                    point,
                    origin,
                    level,
                }
            })
            .collect();

        // seeds: everything at the first populated level, plus points with no match below
        let first_populated = levels.iter().all(|l| l.is_empty());
        for sol in &solutions {
            let is_new = if first_populated {
                true
            } else {
                let prev = levels.iter().rev().find(|l| !l.is_empty());
                match prev {
                    None => true,
                    Some(prev) => !prev.iter().any(|other| {
                        chained(&sol.point, &other.point, options)
                    }),
                }
            };
            if is_new {
                seeds.push(sol.clone());
            }
        }
        levels.push(solutions);
    }

    Ok(SweepResult {
        amplitudes: amplitudes.to_vec(),
        levels,
        seeds,
        failed_starts,
    })
}

fn label_origin(
    point: &BranchPoint,
    eig_dirs: &[DVector<Complex64>],
    origin_tol: f64,
) -> BranchOrigin {
    let qhat = &point.q / Complex64::new(point.amplitude.max(f64::MIN_POSITIVE), 0.0);
    let mut best = (f64::INFINITY, 0usize);
    for (mode, dir) in eig_dirs.iter().enumerate() {
        let d = gauge_distance_q(&qhat, dir);
        if d < best.0 {
            best = (d, mode);
        }
    }
    if best.0 < origin_tol {
        BranchOrigin::LinearMode(best.1)
    } else {
        BranchOrigin::NonlinearityInduced
    }
}

/// Same family across adjacent amplitude levels: close in direction and not
/// wildly different in frequency.
fn chained(a: &BranchPoint, b: &BranchPoint, options: &MultistartOptions) -> bool {
    let ahat = &a.q / Complex64::new(a.amplitude.max(f64::MIN_POSITIVE), 0.0);
    let bhat = &b.q / Complex64::new(b.amplitude.max(f64::MIN_POSITIVE), 0.0);
    let ddir = gauge_distance_q(&ahat, &bhat);
    let dw = (a.omega_sq - b.omega_sq).norm() / (1.0 + a.omega_sq.norm().max(b.omega_sq.norm()));
    ddir <= options.chain_direction_tol && dw <= options.chain_freq_rel_tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn dimer_test_params(beta: Complex64) -> NonlinearParams {
        let cgen = DMatrix::from_row_slice(2, 2, &[78.0, -15.0, -15.0, 78.0]);
        NonlinearParams::leading_order(cgen, 1.0, beta)
    }

    #[test]
    fn small_amplitude_finds_exactly_two_families() {
        let p = dimer_test_params(Complex64::new(0.0, -89.0));
        let sweep =
            multistart_sweep(&p, &[0.05], 24, 7, &MultistartOptions::default()).unwrap();
        assert_eq!(sweep.levels[0].len(), 2, "{:#?}", sweep.levels[0]);
        let origins: Vec<_> = sweep.levels[0].iter().map(|s| s.origin).collect();
        assert!(origins.contains(&BranchOrigin::LinearMode(0)));
        assert!(origins.contains(&BranchOrigin::LinearMode(1)));
    }

    #[test]
    fn sweep_is_deterministic_for_fixed_seed() {
        let p = dimer_test_params(Complex64::new(0.0, -89.0));
        let amps = [0.05, 0.1];
        let a = multistart_sweep(&p, &amps, 16, 42, &MultistartOptions::default()).unwrap();
        let b = multistart_sweep(&p, &amps, 16, 42, &MultistartOptions::default()).unwrap();
        assert_eq!(a.levels.len(), b.levels.len());
        for (la, lb) in a.levels.iter().zip(&b.levels) {
            assert_eq!(la.len(), lb.len());
            for (sa, sb) in la.iter().zip(lb) {
                assert_eq!(sa.point.omega_sq.re.to_bits(), sb.point.omega_sq.re.to_bits());
                assert_eq!(sa.point.omega_sq.im.to_bits(), sb.point.omega_sq.im.to_bits());
                for (xa, xb) in sa.point.q.iter().zip(sb.point.q.iter()) {
                    assert_eq!(xa.re.to_bits(), xb.re.to_bits());
                    assert_eq!(xa.im.to_bits(), xb.im.to_bits());
                }
            }
        }
    }

    #[test]
    fn zero_amplitude_levels_are_skipped() {
        let p = dimer_test_params(Complex64::new(0.0, -89.0));
        let sweep =
            multistart_sweep(&p, &[0.0, 0.05], 8, 7, &MultistartOptions::default()).unwrap();
        assert!(sweep.levels[0].is_empty());
        assert_eq!(sweep.levels[1].len(), 2);
    }
}
