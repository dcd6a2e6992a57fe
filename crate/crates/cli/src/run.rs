//! Experiment orchestration: capacitance pipelines, linear asymptotics,
//! branch sweeps with CSV/SVG emission, and the bundled figure
//! reproduction with its pass/fail manifest.

use crate::config::{ConfigError, ExperimentConfig, ModelChoice};
use crate::csvio::{g17, Csv};
use crate::svg::{branch_color, phase_color, Plot};
use nalgebra::DVector;
use num_complex::Complex64;
use std::path::Path;
use subwave_core::analytic;
use subwave_core::bem::{self, CapacitanceSet};
use subwave_core::geometry;
use subwave_core::linear::{self, EigenSystem, SignConvention};
use subwave_core::nonlinear::{
    self, Branch, BranchOrigin, BranchPoint, MultistartOptions, NonlinearParams, StepControl,
    SweepResult,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorkbenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] subwave_core::Error),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{failed} of {total} acceptance checks failed")]
    Acceptance { failed: usize, total: usize },
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

impl WorkbenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            WorkbenchError::Config(_) => 1,
            WorkbenchError::Acceptance { .. } => 3,
            _ => 2,
        }
    }
}

impl From<geometry::GeometryError> for WorkbenchError {
    fn from(e: geometry::GeometryError) -> Self {
        WorkbenchError::Core(e.into())
    }
}
impl From<bem::BemError> for WorkbenchError {
    fn from(e: bem::BemError) -> Self {
        WorkbenchError::Core(e.into())
    }
}
impl From<linear::SpectralError> for WorkbenchError {
    fn from(e: linear::SpectralError) -> Self {
        WorkbenchError::Core(e.into())
    }
}
impl From<nonlinear::SolveError> for WorkbenchError {
    fn from(e: nonlinear::SolveError) -> Self {
        WorkbenchError::Core(e.into())
    }
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<(), WorkbenchError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn echo_config(cfg: &ExperimentConfig, out: &Path) -> Result<(), WorkbenchError> {
    write_out(out, "resolved.cfg", &cfg.echo())
}

/// Capacitance set at one refinement, straight through the pipeline.
pub fn capacitance_for(
    cfg: &ExperimentConfig,
    refinement: u32,
) -> Result<CapacitanceSet, WorkbenchError> {
    let system = cfg.to_system()?;
    Ok(bem::capacitance_pipeline(&system, refinement)?)
}

/// `capmat`: capacitance matrices with a refinement-ladder convergence
/// record, dumped as CSV.
pub fn run_capmat(cfg: &ExperimentConfig, out: &Path) -> Result<CapacitanceSet, WorkbenchError> {
    echo_config(cfg, out)?;
    let system = cfg.to_system()?;
    let report = geometry::validate_separation(&system);
    if !report.pass {
        eprintln!(
            "warning: system is not well separated (min gap {:?}, ratio {:?})",
            report.min_gap, report.min_ratio
        );
    }
    let lo = 2.min(cfg.refinement);
    let ladder: Vec<u32> = (lo..=cfg.refinement).collect();
    let mut sets = Vec::new();
    for &r in &ladder {
        sets.push((r, bem::capacitance_pipeline(&system, r)?));
    }
    let (_, last) = sets.last().expect("ladder is nonempty");
    let cap = last.clone();

    if cfg.emit_csv {
        let n = cap.c.nrows();
        let mut csv = Csv::new(&["name", "i", "j", "value"]);
        for i in 0..n {
            for j in 0..n {
                csv.row(&["c".into(), i.to_string(), j.to_string(), g17(cap.c[(i, j)])]);
            }
        }
        for i in 0..n {
            for j in 0..n {
                csv.row(&[
                    "cgen".into(),
                    i.to_string(),
                    j.to_string(),
                    g17(cap.cgen[(i, j)]),
                ]);
            }
        }
        for (i, v) in cap.volumes.iter().enumerate() {
            csv.row(&["volume".into(), i.to_string(), "0".into(), g17(*v)]);
        }
        for w in sets.windows(2) {
            let (r0, ref a) = w[0];
            let (r1, ref b) = w[1];
            let mut diff: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    diff = diff.max((a.c[(i, j)] - b.c[(i, j)]).abs());
                    scale = scale.max(b.c[(i, j)].abs());
                }
            }
            let _ = r0;
            csv.row(&[
                "conv_max_abs_diff_c".into(),
                r1.to_string(),
                "0".into(),
                g17(diff),
            ]);
            csv.row(&[
                "conv_max_rel_diff_c".into(),
                r1.to_string(),
                "0".into(),
                g17(diff / scale),
            ]);
        }
        write_out(out, "capmat.csv", &csv.finish())?;
    }
    Ok(cap)
}

/// Per-mode output of the linear pipeline.
#[derive(Debug, Clone)]
pub struct LinearMode {
    pub mode: usize,
    pub lambda: Complex64,
    pub omega0: Complex64,
    pub omega1: Option<Complex64>,
    pub slope_with_omega1: f64,
    pub slope_without_omega1: f64,
    pub degenerate: bool,
}

pub struct LinearRun {
    pub modes: Vec<LinearMode>,
    pub convention: Option<SignConvention>,
    pub eig: EigenSystem,
    pub cap: CapacitanceSet,
}

/// `linear`: eigenvalues of Cgen, leading/first-order coefficients and
/// pencil order-study slopes per mode.
pub fn run_linear(cfg: &ExperimentConfig, out: &Path) -> Result<LinearRun, WorkbenchError> {
    let cap = capacitance_for(cfg, cfg.refinement)?;
    run_linear_with(cfg, out, cap)
}

/// As [`run_linear`] with a precomputed capacitance set.
pub fn run_linear_with(
    cfg: &ExperimentConfig,
    out: &Path,
    cap: CapacitanceSet,
) -> Result<LinearRun, WorkbenchError> {
    echo_config(cfg, out)?;
    let eig = linear::eigensystem(&cap.cgen)?;
    let convention = match linear::resolve_sign_conventions(&cap.c, &cap.cgen, cfg.c0) {
        Ok(c) => Some(c),
        Err(linear::SpectralError::DegenerateEigenvalue { .. }) => None,
        Err(e) => return Err(e.into()),
    };

    let mut modes = Vec::new();
    for mode in 0..eig.len() {
        let degenerate = eig.is_degenerate(mode);
        let lambda = eig.eigenvalues[mode];
        let omega0 = lambda.sqrt();
        let (omega1, slope_with, slope_without) = match (&convention, degenerate) {
            (Some(conv), false) => {
                let w1 = linear::omega1_linear(
                    &cap.c,
                    &cap.cgen,
                    cfg.c0,
                    &eig,
                    mode,
                    conv.omega1_sign,
                )?;
                let with = linear::pencil_order_slope(
                    &cap.c,
                    &cap.cgen,
                    cfg.c0,
                    conv.pencil_sign,
                    |d| omega0 * d.sqrt() + w1 * d,
                );
                let without = linear::pencil_order_slope(
                    &cap.c,
                    &cap.cgen,
                    cfg.c0,
                    conv.pencil_sign,
                    |d| omega0 * d.sqrt(),
                );
                (Some(w1), with, without)
            }
            _ => (None, f64::NAN, f64::NAN),
        };
        modes.push(LinearMode {
            mode,
            lambda,
            omega0,
            omega1,
            slope_with_omega1: slope_with,
            slope_without_omega1: slope_without,
            degenerate,
        });
    }

    if cfg.emit_csv {
        let mut csv = Csv::new(&[
            "mode",
            "lambda_re",
            "lambda_im",
            "omega0_re",
            "omega0_im",
            "omega1_re",
            "omega1_im",
            "pencil_sign",
            "omega1_sign",
            "slope_with_omega1",
            "slope_without_omega1",
            "degenerate",
        ]);
        for m in &modes {
            let (p, w) = convention
                .as_ref()
                .map(|c| (c.pencil_sign, c.omega1_sign))
                .unwrap_or((f64::NAN, f64::NAN));
            csv.row(&[
                m.mode.to_string(),
                g17(m.lambda.re),
                g17(m.lambda.im),
                g17(m.omega0.re),
                g17(m.omega0.im),
                g17(m.omega1.map(|v| v.re).unwrap_or(f64::NAN)),
                g17(m.omega1.map(|v| v.im).unwrap_or(f64::NAN)),
                g17(p),
                g17(w),
                g17(m.slope_with_omega1),
                g17(m.slope_without_omega1),
                m.degenerate.to_string(),
            ]);
        }
        write_out(out, "linear.csv", &csv.finish())?;
    }
    Ok(LinearRun {
        modes,
        convention,
        eig,
        cap,
    })
}

/// Gauge distance from a point to the nearest point of a traced branch.
fn distance_to_branch(point: &BranchPoint, branch: &Branch) -> f64 {
    branch
        .points
        .iter()
        .map(|p| nonlinear::gauge_distance(point, p))
        .fold(f64::INFINITY, f64::min)
}

const ABSORB_TOL: f64 = 0.03;
const MERGE_TOL: f64 = 0.03;

/// Branches assembled from sweep seeds: each unabsorbed seed is traced both
/// ways; segments that run onto an already-traced branch are trimmed at the
/// contact point.
pub fn assemble_branches(
    p: &NonlinearParams,
    sweep: &SweepResult,
    amplitude_max: f64,
) -> Result<Vec<Branch>, WorkbenchError> {
    let first_level = sweep.levels.iter().position(|l| !l.is_empty());
    let mut seeds: Vec<&nonlinear::SweepSolution> = sweep.seeds.iter().collect();
    seeds.sort_by_key(|s| {
        (
            matches!(s.origin, BranchOrigin::NonlinearityInduced),
            s.level,
        )
    });

    let mut branches: Vec<Branch> = Vec::new();
    for seed in seeds {
        let scale = seed.point.amplitude.max(1.0);
        if branches
            .iter()
            .any(|b| distance_to_branch(&seed.point, b) < ABSORB_TOL * scale)
        {
            continue;
        }
        let step = |direction: f64| StepControl {
            amplitude_cap: amplitude_max,
            direction,
            ..StepControl::default()
        };
        let fwd = nonlinear::continue_branch(&seed.point, seed.origin, p, &step(1.0))?;
        let mut points = trim_merged(fwd.points, &branches);
        let mut warnings = fwd.warnings;
        if Some(seed.level) != first_level {
            let bwd = nonlinear::continue_branch(&seed.point, seed.origin, p, &step(-1.0))?;
            let trimmed = trim_merged(bwd.points, &branches);
            let mut rev: Vec<BranchPoint> = trimmed.into_iter().skip(1).collect();
            rev.reverse();
            let shift = rev.len();
            rev.extend(points);
            points = rev;
            for w in &mut warnings {
                *w += shift;
            }
        }
        branches.push(Branch {
            id: branches.len(),
            origin: seed.origin,
            points,
            termination: fwd.termination,
            warnings,
        });
    }
    Ok(branches)
}

/// Cut a traced point list at its first contact with existing branches,
/// keeping the contact point itself.
fn trim_merged(points: Vec<BranchPoint>, branches: &[Branch]) -> Vec<BranchPoint> {
    if branches.is_empty() {
        return points;
    }
    let mut cut = points.len();
    for (i, pt) in points.iter().enumerate().skip(1) {
        let scale = pt.amplitude.max(1.0);
        if branches
            .iter()
            .any(|b| distance_to_branch(pt, b) < MERGE_TOL * scale)
        {
            cut = i + 1;
            break;
        }
    }
    points.into_iter().take(cut).collect()
}

pub struct BranchesRun {
    pub branches: Vec<Branch>,
    pub sweep: SweepResult,
    pub eig: EigenSystem,
    pub cap: CapacitanceSet,
    pub csv: String,
}

/// `branches`: multistart sweep plus continuation per seed, emitting the
/// result table and the two figure SVGs.
pub fn run_branches(cfg: &ExperimentConfig, out: &Path) -> Result<BranchesRun, WorkbenchError> {
    let cap = capacitance_for(cfg, cfg.refinement)?;
    run_branches_with(cfg, out, cap)
}

/// As [`run_branches`] with a precomputed capacitance set.
pub fn run_branches_with(
    cfg: &ExperimentConfig,
    out: &Path,
    cap: CapacitanceSet,
) -> Result<BranchesRun, WorkbenchError> {
    echo_config(cfg, out)?;
    if cfg.model == ModelChoice::Linear {
        return Err(ConfigError::Semantic {
            field: "model".into(),
            message: "the branches command needs model = leading_order or kerr_pencil".into(),
        }
        .into());
    }
    for s in &cfg.spheres {
        if let Some(cr) = s.cr {
            if cr != cfg.cr {
                return Err(ConfigError::Semantic {
                    field: "cr".into(),
                    message: "the nonlinear models use one shared cr for all components".into(),
                }
                .into());
            }
        }
    }
    let params = match cfg.model {
        ModelChoice::LeadingOrder => {
            NonlinearParams::leading_order(cap.cgen.clone(), cfg.cr, cfg.beta)
        }
        ModelChoice::KerrPencil => {
            let conv = linear::resolve_sign_conventions(&cap.c, &cap.cgen, cfg.c0)?;
            NonlinearParams::kerr_pencil(
                cap.cgen.clone(),
                cap.c.clone(),
                cfg.cr,
                cfg.beta,
                cfg.c0,
                cfg.delta,
                conv.pencil_sign,
            )
        }
        ModelChoice::Linear => unreachable!(),
    };
    let eig = linear::eigensystem(&cap.cgen)?;
    let grid = cfg.amplitude_grid();
    let sweep = nonlinear::multistart_sweep(
        &params,
        &grid,
        cfg.starts,
        cfg.seed,
        &MultistartOptions::default(),
    )?;
    if sweep.seeds.is_empty() {
        return Err(WorkbenchError::Numerical(
            "no multistart seed converged; increase `starts` or widen the amplitude grid".into(),
        ));
    }
    let branches = assemble_branches(&params, &sweep, cfg.amplitude_max)?;

    let csv = branches_csv(&branches, params.dim());
    if cfg.emit_csv {
        write_out(out, "branches.csv", &csv)?;
    }
    if cfg.emit_svg {
        let (modes_svg, freq_svg) = branch_figures(&branches, &eig, cfg.amplitude_max);
        write_out(out, "modes.svg", &modes_svg)?;
        write_out(out, "frequencies.svg", &freq_svg)?;
    }
    Ok(BranchesRun {
        branches,
        sweep,
        eig,
        cap,
        csv,
    })
}

/// The result table: one row per branch point, sorted by (branch, amplitude).
pub fn branches_csv(branches: &[Branch], n: usize) -> String {
    let mut header: Vec<String> = vec!["branch_id".into(), "origin".into(), "amplitude".into()];
    for i in 1..=n {
        header.push(format!("abs_q{i}"));
    }
    header.extend([
        "phase_ratio_arg".into(),
        "re_omega0".into(),
        "im_omega0".into(),
        "residual_norm".into(),
    ]);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header_refs);

    for branch in branches {
        let mut order: Vec<usize> = (0..branch.points.len()).collect();
        order.sort_by(|&a, &b| {
            branch.points[a]
                .amplitude
                .partial_cmp(&branch.points[b].amplitude)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for idx in order {
            let pt = &branch.points[idx];
            let omega0 = point_omega(pt);
            let mut row: Vec<String> = vec![
                branch.id.to_string(),
                branch.origin.to_string(),
                g17(pt.amplitude),
            ];
            for i in 0..n {
                row.push(g17(pt.q[i].norm()));
            }
            let phase = if n == 2 {
                nonlinear::branch_phase_ratio(pt).map(|r| r.arg())
            } else {
                None
            };
            row.push(phase.map(g17).unwrap_or_else(|| "nan".into()));
            row.push(g17(omega0.re));
            row.push(g17(omega0.im));
            row.push(g17(pt.residual_norm));
            csv.row(&row);
        }
    }
    csv.finish()
}

/// Leading frequency of a branch point: the tracked root for the Kerr pencil,
/// the principal square root of ω² otherwise.
pub fn point_omega(pt: &BranchPoint) -> Complex64 {
    pt.omega.unwrap_or_else(|| pt.omega_sq.sqrt())
}

/// The pair of figure plots: |q₂| against |q₁| colored by the phase of
/// q₁/q₂, and the leading frequencies in the complex plane colored by
/// branch id. Dashed overlays show the β = 0 linear families.
pub fn branch_figures(
    branches: &[Branch],
    eig: &EigenSystem,
    amplitude_max: f64,
) -> (String, String) {
    let mut qmax: f64 = 0.0;
    for b in branches {
        for pt in &b.points {
            for x in pt.q.iter() {
                qmax = qmax.max(x.norm());
            }
        }
    }
    qmax = qmax.max(1e-6);
    let mut modes = Plot::new(
        "solution families",
        "|q1|",
        "|q2|",
        (0.0, qmax),
        (0.0, qmax),
    );
    // dashed linear families
    for dir in &eig.right {
        if dir.len() < 2 {
            continue;
        }
        let end = (
            amplitude_max * dir[0].norm(),
            amplitude_max * dir[1].norm(),
        );
        modes.polyline(&[(0.0, 0.0), end], "black", 1.2, Some("6 4"));
    }
    // single-component systems collapse onto the diagonal
    let coords = |pt: &BranchPoint| {
        let x = pt.q[0].norm();
        let y = if pt.q.len() >= 2 { pt.q[1].norm() } else { x };
        (x, y)
    };
    for b in branches {
        if b.points.len() < 2 {
            for pt in &b.points {
                let (x, y) = coords(pt);
                modes.marker(x, y, "black", 2.0);
            }
            continue;
        }
        let pts: Vec<(f64, f64)> = b.points.iter().map(coords).collect();
        let colors: Vec<String> = b
            .points
            .windows(2)
            .map(|w| {
                let arg = nonlinear::branch_phase_ratio(&w[0]).map(|r| r.arg());
                phase_color(arg)
            })
            .collect();
        modes.colored_segments(&pts, &colors, 2.0);
    }
    let modes_svg = modes.render();

    let mut wlo = (f64::INFINITY, f64::INFINITY);
    let mut whi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for b in branches {
        for pt in &b.points {
            let w = point_omega(pt);
            wlo = (wlo.0.min(w.re), wlo.1.min(w.im));
            whi = (whi.0.max(w.re), whi.1.max(w.im));
        }
    }
    for lam in &eig.eigenvalues {
        let w = lam.sqrt();
        wlo = (wlo.0.min(w.re), wlo.1.min(w.im));
        whi = (whi.0.max(w.re), whi.1.max(w.im));
    }
    let mut freq = Plot::new(
        "leading frequencies",
        "Re omega0",
        "Im omega0",
        (wlo.0, whi.0),
        (wlo.1, whi.1),
    );
    for (i, lam) in eig.eigenvalues.iter().enumerate() {
        let w = lam.sqrt();
        freq.marker(w.re, w.im, &branch_color(i), 3.5);
    }
    for b in branches {
        let pts: Vec<(f64, f64)> = b
            .points
            .iter()
            .map(|pt| {
                let w = point_omega(pt);
                (w.re, w.im)
            })
            .collect();
        freq.polyline(&pts, &branch_color(b.id), 2.0, None);
    }
    (modes_svg, freq.render())
}

/// Divergence of the traced families from the linear picture, used for the
/// asymmetric-dimer splitting checks.
#[derive(Debug, Clone)]
pub struct SplitReport {
    /// First-level solutions have per-family distinct |q1|, |q2|.
    pub low_amplitude_separated: bool,
    /// Smallest amplitude reached by a nonlinearity-induced branch (the fold).
    pub fold_amplitude: Option<f64>,
    /// Amplitude where the branch seeded from the lowest mode leaves its
    /// eigenvector direction by more than 0.1 in gauge distance.
    pub departure_amplitude: Option<f64>,
}

pub fn detect_split(branches: &[Branch], eig: &EigenSystem, sweep: &SweepResult) -> SplitReport {
    let low_amplitude_separated = sweep
        .levels
        .iter()
        .find(|l| !l.is_empty())
        .map(|level| {
            level.iter().all(|sol| {
                let q = &sol.point.q;
                q.len() == 2 && (q[0].norm() - q[1].norm()).abs() > 0.02 * sol.point.amplitude
            })
        })
        .unwrap_or(false);

    let fold_amplitude = branches
        .iter()
        .filter(|b| b.origin == BranchOrigin::NonlinearityInduced)
        .flat_map(|b| b.points.iter().map(|pt| pt.amplitude))
        .fold(None, |acc: Option<f64>, a| {
            Some(acc.map_or(a, |m| m.min(a)))
        });

    let departure_amplitude = branches
        .iter()
        .find(|b| b.origin == BranchOrigin::LinearMode(0))
        .and_then(|b| {
            let dir = &eig.right[0];
            b.points
                .iter()
                .find(|pt| {
                    let qhat = &pt.q / Complex64::new(pt.amplitude.max(f64::MIN_POSITIVE), 0.0);
                    nonlinear::gauge_distance_q(&qhat, dir) > 0.1
                })
                .map(|pt| pt.amplitude)
        });

    SplitReport {
        low_amplitude_separated,
        fold_amplitude,
        departure_amplitude,
    }
}

/// Frozen regression constants for the bundled dimer configurations,
/// measured once on this implementation at refinement 4 with the bundled
/// seeds, then pinned.
pub mod regression {
    /// First level of the default 200-point grid on [0, 3] where the
    /// symmetric dimer sweep finds a third gauge-distinct solution.
    pub const R20_THIRD_BRANCH_LEVEL: usize = 7;
    /// Allowed drift, in grid steps.
    pub const LEVEL_TOL: usize = 2;
    /// Fold amplitude of the nonlinearity-induced family, symmetric dimer.
    pub const R20_FOLD_AMPLITUDE: f64 = 0.10092;
    /// Fold amplitudes for the asymmetric dimers (r2 = 0.21, 0.22).
    pub const R21_FOLD_AMPLITUDE: f64 = 0.10651;
    pub const R22_FOLD_AMPLITUDE: f64 = 0.10985;
    /// Departure amplitudes of the lowest-mode family for the asymmetric
    /// dimers (gauge direction distance > 0.1 from the eigenvector).
    pub const R21_DEPARTURE_AMPLITUDE: f64 = 0.07611;
    pub const R22_DEPARTURE_AMPLITUDE: f64 = 0.06542;
    /// Amplitude tolerance corresponding to ±2 grid steps of the default grid.
    pub const AMPLITUDE_TOL: f64 = 0.0302;
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub config: String,
    pub pass: bool,
    pub detail: String,
}

pub struct FigureReport {
    pub checks: Vec<CheckResult>,
    pub manifest: String,
}

pub const DIMER_R20_CONFIG: &str = include_str!("../configs/dimer_r20.cfg");
pub const DIMER_R21_CONFIG: &str = include_str!("../configs/dimer_r21.cfg");
pub const DIMER_R22_CONFIG: &str = include_str!("../configs/dimer_r22.cfg");

/// `reproduce-figures`: runs the three bundled dimer configurations, writes
/// per-configuration CSVs and SVGs plus a manifest of acceptance checks, and
/// fails with a nonzero status if any check fails.
pub fn reproduce_figures(
    out: &Path,
    refinement_override: Option<u32>,
    seed_override: Option<u64>,
) -> Result<FigureReport, WorkbenchError> {
    let mut checks = Vec::new();
    let configs = [
        ("dimer_r20", DIMER_R20_CONFIG),
        ("dimer_r21", DIMER_R21_CONFIG),
        ("dimer_r22", DIMER_R22_CONFIG),
    ];
    for (name, text) in configs {
        let mut cfg = crate::config::parse_config(text).map_err(|e| {
            WorkbenchError::Numerical(format!("bundled config {name}: {e}"))
        })?;
        if let Some(r) = refinement_override {
            cfg.refinement = r;
        }
        if let Some(s) = seed_override {
            cfg.seed = s;
        }
        let sub = out.join(name);
        run_config_checks(&cfg, name, &sub, &mut checks)?;
    }

    let mut manifest = Csv::new(&["check", "config", "status", "detail"]);
    let mut failed = 0;
    for c in &checks {
        if !c.pass {
            failed += 1;
        }
        manifest.row(&[
            c.name.clone(),
            c.config.clone(),
            if c.pass { "pass".into() } else { "fail".into() },
            c.detail.replace(',', ";"),
        ]);
    }
    let manifest = manifest.finish();
    write_out(out, "manifest.csv", &manifest)?;
    if failed > 0 {
        return Err(WorkbenchError::Acceptance {
            failed,
            total: checks.len(),
        });
    }
    Ok(FigureReport { checks, manifest })
}

fn push_check(
    checks: &mut Vec<CheckResult>,
    name: &str,
    config: &str,
    pass: bool,
    detail: String,
) {
    checks.push(CheckResult {
        name: name.to_string(),
        config: config.to_string(),
        pass,
        detail,
    });
}

fn run_config_checks(
    cfg: &ExperimentConfig,
    name: &str,
    out: &Path,
    checks: &mut Vec<CheckResult>,
) -> Result<(), WorkbenchError> {
    let symmetric = name == "dimer_r20";

    let cap = run_capmat(cfg, out)?;
    let lin = run_linear_with(cfg, out, cap.clone())?;
    let run = run_branches_with(cfg, out, cap)?;

    // capacitance against the Kelvin image-charge reference
    let r1 = cfg.spheres[0].radius;
    let r2 = cfg.spheres[1].radius;
    let d = (cfg.spheres[0].center - cfg.spheres[1].center).norm();
    let oracle = analytic::two_sphere_capacitance(r1, r2, d, 1e-13)
        .map_err(|e| WorkbenchError::Numerical(e.to_string()))?;
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let got = run.cap.c[(i, j)];
            let want = oracle.matrix[(i, j)];
            worst = worst.max((got - want).abs() / want.abs());
        }
    }
    push_check(
        checks,
        "capacitance_vs_image_charges",
        name,
        worst <= 5e-3,
        format!("max entrywise relative error {worst:.3e} (limit 5e-3)"),
    );

    // eigenstructure of the symmetric dimer
    if symmetric {
        let e = &run.eig;
        let sym = DVector::from_vec(vec![
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ]);
        let anti = DVector::from_vec(vec![
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            Complex64::new(-std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ]);
        let angle0 = nonlinear::gauge_distance_q(&e.right[0], &sym);
        let angle1 = nonlinear::gauge_distance_q(&e.right[1], &anti);
        let real_positive = e
            .eigenvalues
            .iter()
            .all(|l| l.re > 0.0 && l.im.abs() <= 1e-12 * l.re);
        push_check(
            checks,
            "symmetric_eigvector_structure",
            name,
            angle0 < 1e-6 && angle1 < 1e-6 && real_positive,
            format!("alignment distances {angle0:.2e}, {angle1:.2e}; real positive: {real_positive}"),
        );
    }

    // pencil order study on the fundamental mode
    let slopes_ok = lin
        .modes
        .first()
        .map(|m| {
            (1.9..=2.1).contains(&m.slope_with_omega1)
                && (1.4..=1.6).contains(&m.slope_without_omega1)
        })
        .unwrap_or(false);
    push_check(
        checks,
        "pencil_asymptotic_order",
        name,
        slopes_ok,
        lin.modes
            .first()
            .map(|m| {
                format!(
                    "slope with {:.3} without {:.3}",
                    m.slope_with_omega1, m.slope_without_omega1
                )
            })
            .unwrap_or_default(),
    );

    if symmetric {
        // closed-form families
        let mut worst: f64 = 0.0;
        let mut counted = 0usize;
        for b in run
            .branches
            .iter()
            .filter(|b| matches!(b.origin, BranchOrigin::LinearMode(_)))
        {
            let mode = match b.origin {
                BranchOrigin::LinearMode(m) => m,
                _ => unreachable!(),
            };
            let lambda = run.eig.eigenvalues[mode].re;
            for pt in b.points.iter().filter(|pt| pt.amplitude <= 2.0) {
                let a = pt.q[0].norm();
                let defect = (pt.omega_sq
                    * (Complex64::new(1.0, 0.0) - cfg.beta * (cfg.cr * cfg.cr * a * a))
                    - Complex64::new(lambda, 0.0))
                .norm()
                    / lambda;
                worst = worst.max(defect);
                counted += 1;
            }
        }
        push_check(
            checks,
            "closed_form_families",
            name,
            counted > 100 && worst < 1e-8,
            format!("{counted} points, worst relative defect {worst:.3e} (limit 1e-8)"),
        );

        // swap symmetry of every deduplicated sweep solution
        let params = NonlinearParams::leading_order(run.cap.cgen.clone(), cfg.cr, cfg.beta);
        let mut worst_residual: f64 = 0.0;
        let mut worst_phase: f64 = 0.0;
        let mut total = 0usize;
        for level in &run.sweep.levels {
            for sol in level {
                let swapped = nonlinear::swap_solution(&sol.point, &params)?;
                worst_residual = worst_residual.max(swapped.residual_norm);
                if let (Some(a), Some(b)) = (
                    nonlinear::branch_phase_ratio(&sol.point),
                    nonlinear::branch_phase_ratio(&swapped),
                ) {
                    worst_phase = worst_phase.max((a * b - Complex64::new(1.0, 0.0)).norm());
                }
                total += 1;
            }
        }
        push_check(
            checks,
            "swap_symmetry",
            name,
            total > 0 && worst_residual < 1e-11 && worst_phase < 1e-10,
            format!(
                "{total} solutions, worst swapped residual {worst_residual:.3e}, worst phase defect {worst_phase:.3e}"
            ),
        );

        // solution counts: exactly 2 at amplitude 0.05, three and more above
        // the frozen threshold level
        let small = nonlinear::multistart_sweep(
            &params,
            &[0.05],
            cfg.starts,
            cfg.seed,
            &MultistartOptions::default(),
        )?;
        let count_small = small.levels[0].len();
        let third_level = run.sweep.first_level_with_count(3);
        let level_ok = third_level.map_or(false, |l| {
            l.abs_diff(regression::R20_THIRD_BRANCH_LEVEL) <= regression::LEVEL_TOL
        });
        push_check(
            checks,
            "third_branch_counts",
            name,
            count_small == 2 && level_ok,
            format!(
                "count at 0.05: {count_small} (want 2); first level with 3+: {third_level:?} (frozen {} ± {})",
                regression::R20_THIRD_BRANCH_LEVEL,
                regression::LEVEL_TOL
            ),
        );

        let split = detect_split(&run.branches, &run.eig, &run.sweep);
        let fold_ok = split.fold_amplitude.map_or(false, |a| {
            (a - regression::R20_FOLD_AMPLITUDE).abs() <= regression::AMPLITUDE_TOL
        });
        push_check(
            checks,
            "third_branch_fold",
            name,
            fold_ok,
            format!(
                "fold amplitude {:?} (frozen {} ± {})",
                split.fold_amplitude,
                regression::R20_FOLD_AMPLITUDE,
                regression::AMPLITUDE_TOL
            ),
        );

        // byte-identical rerun
        let rerun = run_branches_with(cfg, &out.join("determinism_probe"), run.cap.clone())?;
        push_check(
            checks,
            "seeded_determinism",
            name,
            rerun.csv == run.csv,
            format!(
                "branches.csv identical across reruns: {}",
                rerun.csv == run.csv
            ),
        );
        std::fs::remove_dir_all(out.join("determinism_probe")).ok();
    } else {
        let split = detect_split(&run.branches, &run.eig, &run.sweep);
        let (frozen_fold, frozen_dep) = if name == "dimer_r21" {
            (
                regression::R21_FOLD_AMPLITUDE,
                regression::R21_DEPARTURE_AMPLITUDE,
            )
        } else {
            (
                regression::R22_FOLD_AMPLITUDE,
                regression::R22_DEPARTURE_AMPLITUDE,
            )
        };
        let fold_ok = split
            .fold_amplitude
            .map_or(false, |a| (a - frozen_fold).abs() <= regression::AMPLITUDE_TOL);
        let dep_ok = split
            .departure_amplitude
            .map_or(false, |a| (a - frozen_dep).abs() <= regression::AMPLITUDE_TOL);
        push_check(
            checks,
            "asymmetric_splitting",
            name,
            split.low_amplitude_separated && fold_ok && dep_ok,
            format!(
                "separated: {}; fold {:?} (frozen {frozen_fold} ± {tol}); departure {:?} (frozen {frozen_dep} ± {tol})",
                split.low_amplitude_separated,
                split.fold_amplitude,
                split.departure_amplitude,
                tol = regression::AMPLITUDE_TOL
            ),
        );
    }
    Ok(())
}
