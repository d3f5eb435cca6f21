//! Band-structure sweeps along the path and the self-convergence study.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{build_index_set, Vec3};
use crate::materials::PermittivityModel;
use crate::path::{path_wavevector, resolve_tau, PathError, PathSpec, Segment, TauPolicy};
use crate::quadratic::{EtaEigenpair, QuadraticOptions, QuadraticSolver, SolverError};
use crate::standard::{StandardError, StandardSolver};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Standard(#[from] StandardError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("no accepted real wave vector found at order {0}")]
    NoBandFound(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointFlag {
    /// Output of the fixed-`k` solver.
    Standard,
    /// Accepted, real, inside the segment.
    Physical,
    /// Accepted with `|Im λ| > im_tol`.
    Complex,
    /// Accepted and real but outside the segment window.
    Outside,
    /// Failed the residual or multiplier checks.
    Spurious,
}

impl PointFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::Physical => "physical",
            Self::Complex => "complex",
            Self::Outside => "outside",
            Self::Spurious => "spurious",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "standard" => Self::Standard,
            "physical" => Self::Physical,
            "complex" => Self::Complex,
            "outside" => Self::Outside,
            "spurious" => Self::Spurious,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointSource {
    Standard,
    Quadratic,
}

/// One emitted point; `η` and the diagnostics are present only for
/// quadratic points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint {
    pub alpha: f64,
    pub k: Vec3,
    pub omega: f64,
    pub eta: Option<Complex64>,
    pub residual: Option<f64>,
    pub p_norm: Option<f64>,
    pub s_abs: Option<f64>,
    pub flag: PointFlag,
}

impl BandPoint {
    pub fn omega_over_2pi(&self) -> f64 {
        self.omega / (2.0 * PI)
    }

    pub fn source(&self) -> PointSource {
        if self.flag == PointFlag::Standard {
            PointSource::Standard
        } else {
            PointSource::Quadratic
        }
    }
}

/// Lowest `nbands` frequencies at every path sample.
pub fn sweep_standard(solver: &StandardSolver, path: &PathSpec, nbands: usize) -> Result<Vec<BandPoint>, SweepError> {
    let rows: Result<Vec<Vec<BandPoint>>, SweepError> = path
        .samples()
        .into_par_iter()
        .map(|(_, alpha, _)| {
            let k = path_wavevector(alpha)?;
            let modes = solver.solve(&k, nbands)?;
            Ok(modes
                .into_iter()
                .map(|m| BandPoint {
                    alpha,
                    k,
                    omega: m.omega,
                    eta: None,
                    residual: None,
                    p_norm: None,
                    s_abs: None,
                    flag: PointFlag::Standard,
                })
                .collect())
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub tau_policy: TauPolicy,
    /// Tolerance on the segment window `[−margin, length + margin]`.
    pub path_margin: f64,
    /// Move the shift to the centre of the window in `η` (keeping its imaginary part).
    pub recenter_shift: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            tau_policy: TauPolicy::Auto,
            path_margin: 1e-6,
            recenter_shift: true,
        }
    }
}

pub fn classify_pair(pair: &EtaEigenpair, segment: &Segment, im_tol: f64, margin: f64) -> PointFlag {
    if !pair.accepted {
        PointFlag::Spurious
    } else if pair.lambda.im.abs() > im_tol {
        PointFlag::Complex
    } else if !segment.contains(pair.lambda.re, margin) {
        PointFlag::Outside
    } else {
        PointFlag::Physical
    }
}

fn pair_point(pair: &EtaEigenpair, segment: &Segment, omega: f64, flag: PointFlag) -> BandPoint {
    BandPoint {
        alpha: segment.offset + pair.lambda.re,
        k: pair.k.map(|z| z.re),
        omega,
        eta: Some(pair.eta),
        residual: Some(pair.residual),
        p_norm: Some(pair.p_norm),
        s_abs: Some(pair.s_abs),
        flag,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFailure {
    pub omega: f64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct QuadraticSweep {
    pub points: Vec<BandPoint>,
    pub failures: Vec<SweepFailure>,
    pub warnings: Vec<String>,
    /// `τ` used at each frequency, in grid order.
    pub taus: Vec<(f64, f64)>,
}

/// Result of one frequency of a quadratic sweep.
type OmegaOutcome = Result<(Vec<BandPoint>, Vec<String>, f64), String>;

fn sweep_one(solver: &QuadraticSolver, segment: &Segment, omega: f64, opts: &SweepOptions) -> OmegaOutcome {
    let (tau, fallback) = resolve_tau(&opts.tau_policy, segment, omega, solver.model()).map_err(|e| e.to_string())?;
    let mut warnings = Vec::new();
    if fallback {
        warnings.push(format!(
            "{}: no admissible tau at omega={omega}; using tau={tau}",
            segment.name
        ));
    }
    let split = segment.split(tau).map_err(|e| e.to_string())?;
    let mut qopts = *solver.options();
    if opts.recenter_shift {
        qopts.shift = Complex64::new(0.5 * segment.length - tau, qopts.shift.im);
    }
    let local = solver.with_options(qopts);
    let sol = local.solve(omega, &split).map_err(|e| e.to_string())?;
    warnings.extend(sol.warnings.iter().filter(|w| !w.contains("not admissible")).cloned());
    let points = sol
        .pairs
        .iter()
        .map(|p| {
            let flag = classify_pair(p, segment, qopts.im_tol, opts.path_margin);
            pair_point(p, segment, omega, flag)
        })
        .collect();
    Ok((points, warnings, sol.split.tau()))
}

/// Fixed-frequency solves along one segment. Failures at individual
/// frequencies are recorded and the sweep continues.
pub fn sweep_quadratic(
    solver: &QuadraticSolver,
    segment: &Segment,
    omegas: &[f64],
    opts: &SweepOptions,
) -> QuadraticSweep {
    let outcomes: Vec<OmegaOutcome> = omegas
        .par_iter()
        .map(|&omega| sweep_one(solver, segment, omega, opts))
        .collect();
    let mut out = QuadraticSweep::default();
    for (omega, outcome) in omegas.iter().zip(outcomes) {
        match outcome {
            Ok((points, warnings, tau)) => {
                out.points.extend(points);
                out.warnings.extend(warnings);
                out.taus.push((*omega, tau));
            }
            Err(message) => out.failures.push(SweepFailure { omega: *omega, message }),
        }
    }
    out
}

/// `n` frequencies evenly spaced in `ω/2π` over `[lo, hi]`.
pub fn omega_grid(lo_over_2pi: f64, hi_over_2pi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![2.0 * PI * lo_over_2pi];
    }
    (0..n)
        .map(|i| 2.0 * PI * (lo_over_2pi + (hi_over_2pi - lo_over_2pi) * i as f64 / (n - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub order: usize,
    pub dofs: usize,
    pub k: Vec3,
    pub rel_error: f64,
}

/// Relative error of the computed wave vector nearest `k_ref` at fixed
/// `omega_ref`, for each basis order. `k_ref` must lie on `segment`.
pub fn convergence_study(
    model: &PermittivityModel,
    segment: &Segment,
    k_ref: &Vec3,
    omega_ref: f64,
    orders: &[usize],
    qopts: &QuadraticOptions,
    tau_policy: &TauPolicy,
) -> Result<Vec<ConvergenceRow>, SweepError> {
    let (tau, _) = resolve_tau(tau_policy, segment, omega_ref, model)?;
    let split = segment.split(tau).map_err(PathError::from)?;
    let lambda_ref: f64 = (0..3).map(|j| (k_ref[j] - segment.alpha0[j]) * segment.alpha_hat[j]).sum();
    let k_norm = k_ref.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut rows = Vec::with_capacity(orders.len());
    for &order in orders {
        let basis = build_index_set(order);
        let mut opts = *qopts;
        opts.shift = Complex64::new(lambda_ref - tau, qopts.shift.im);
        let solver = QuadraticSolver::new(model, &basis, opts)?;
        let sol = solver.solve(omega_ref, &split)?;
        let best = sol
            .pairs
            .iter()
            .filter(|p| p.accepted && p.lambda.im.abs() <= opts.im_tol)
            .map(|p| {
                let k = p.k.map(|z| z.re);
                let err = (0..3).map(|j| (k[j] - k_ref[j]).powi(2)).sum::<f64>().sqrt();
                (k, err)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(SweepError::NoBandFound(order))?;
        rows.push(ConvergenceRow {
            order,
            dofs: 7 * basis.len() + 1,
            k: best.0,
            rel_error: best.1 / k_norm,
        });
    }
    Ok(rows)
}
