//! Independent reference computations used by the tests and the `validate`
//! command. Nothing in the solver path calls into this module.

use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{add, dot, mode_vector, norm, PlaneWaveSet, Vec3, WaveVectorSplit};
use crate::materials::PermittivityModel;
use crate::path::{resolve_tau, PathSpec, TauPolicy};
use crate::quadratic::{QuadraticOptions, QuadraticSolver};
use crate::standard::{StandardError, StandardSolver};
use crate::sweep::SweepError;

/// Largest pencil the dense oracle accepts.
pub const DENSE_ORACLE_MAX_DIM: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("dimension {0} exceeds the dense oracle limit")]
    DimensionTooLarge(usize),
    #[error("QZ iteration failed")]
    QzFailure,
    #[error("permittivity model depends on frequency")]
    NotFrequencyIndependent,
    #[error(transparent)]
    Sweep(#[from] SweepError),
}

impl From<StandardError> for OracleError {
    fn from(e: StandardError) -> Self {
        match e {
            StandardError::NotFrequencyIndependent => OracleError::NotFrequencyIndependent,
            other => OracleError::Sweep(other.into()),
        }
    }
}

/// Groups nearly equal values, summing multiplicities.
fn merge<T: Copy>(mut items: Vec<(T, usize)>, key: impl Fn(&T) -> (f64, f64), tol: f64) -> Vec<(T, usize)> {
    items.sort_by(|a, b| {
        let (ka, kb) = (key(&a.0), key(&b.0));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    let mut out: Vec<(T, usize)> = Vec::new();
    for (v, m) in items {
        if let Some(last) = out.last_mut() {
            let (a, b) = (key(&last.0), key(&v));
            let scale = a.0.abs().max(a.1.abs()).max(1.0);
            if (a.0 - b.0).abs() <= tol * scale && (a.1 - b.1).abs() <= tol * scale {
                last.1 += m;
                continue;
            }
        }
        out.push((v, m));
    }
    out
}

/// `ω = |k + I| / √ε` for every mode, two polarizations each, merged and sorted.
pub fn analytic_omegas(eps: f64, k: &Vec3, basis: &PlaneWaveSet) -> Vec<(f64, usize)> {
    let items = basis
        .modes()
        .iter()
        .map(|mode| (norm(&add(k, &mode_vector(*mode))) / eps.sqrt(), 2))
        .collect();
    merge(items, |w| (*w, 0.0), 1e-12)
}

/// Roots of `η² + 2η α̂·γ + |γ|² − εω² = 0` for every mode, two each.
pub fn analytic_etas(eps: f64, omega: f64, split: &WaveVectorSplit, basis: &PlaneWaveSet) -> Vec<(Complex64, usize)> {
    let ah = split.alpha_hat();
    let beta = split.beta();
    let mut items = Vec::new();
    for mode in basis.modes() {
        let g = add(&beta, &mode_vector(*mode));
        let b = dot(&ah, &g);
        let disc = b * b - dot(&g, &g) + eps * omega * omega;
        let root = Complex64::new(disc, 0.0).sqrt();
        items.push((Complex64::new(-b, 0.0) + root, 2));
        items.push((Complex64::new(-b, 0.0) - root, 2));
    }
    merge(items, |z| (z.re, z.im), 1e-10)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PencilEigenvalue {
    Finite(Complex64),
    Infinite,
}

impl PencilEigenvalue {
    pub fn finite(&self) -> Option<Complex64> {
        match self {
            Self::Finite(z) => Some(*z),
            Self::Infinite => None,
        }
    }
}

/// Generic point used to move the pencil away from its singular structure.
const MOBIUS_SHIFT: Complex64 = Complex64::new(0.371_213, 0.613_958);

/// Every eigenvalue of `A X = −η C X`.
///
/// QZ runs on the transformed pencil `−C X = μ (A + σC) X` with a fixed
/// generic `σ`, so `η = σ + 1/μ`. QZ applied to `(A, −C)` directly breaks
/// down on this problem (the large null space of `C` makes it return
/// `0/0` pairs); after the transform the infinite `η` become `μ = 0` and
/// are classified by `|μ| ≤ tol` after normalizing by the matrix norms.
/// The infinite part carries Jordan blocks of size three, which QZ spreads
/// to `|μ| ~ ε^(1/3)`, so `tol` around `1e-4` is needed to catch them.
pub fn dense_generalized_eig(
    a: &Mat<Complex64>,
    c: &Mat<Complex64>,
    tol: f64,
) -> Result<Vec<PencilEigenvalue>, OracleError> {
    let n = a.nrows();
    if n > DENSE_ORACLE_MAX_DIM {
        return Err(OracleError::DimensionTooLarge(n));
    }
    let neg_c = -c;
    let shifted = a + c * faer::Scale(MOBIUS_SHIFT);
    let nc = neg_c.norm_l2();
    let ns = shifted.norm_l2().max(f64::MIN_POSITIVE);
    if nc == 0.0 {
        return Ok(vec![PencilEigenvalue::Infinite; n]);
    }
    let g = neg_c.generalized_eigen(&shifted).map_err(|_| OracleError::QzFailure)?;
    let sa = g.S_a().column_vector();
    let sb = g.S_b().column_vector();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (num, den) = (sa[i] / nc, sb[i] / ns);
        if !(num.is_finite() && den.is_finite()) || (num.norm() == 0.0 && den.norm() == 0.0) {
            return Err(OracleError::QzFailure);
        }
        out.push(if num.norm() <= tol * den.norm() {
            PencilEigenvalue::Infinite
        } else {
            PencilEigenvalue::Finite(MOBIUS_SHIFT + sb[i] / sa[i])
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossRow {
    pub alpha: f64,
    pub k: Vec3,
    pub band: usize,
    pub omega: f64,
    pub k_computed: Option<Vec3>,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossReport {
    pub rows: Vec<CrossRow>,
    pub max_deviation: f64,
}

/// Standard-then-quadratic round trip: for each sample `α`, the lowest
/// `nbands` frequencies at `k(α)` are fed back into the quadratic solver on
/// the segment containing `k`, and the nearest accepted real wave vector is
/// compared with `k` in the max norm. The shift is placed at the `η` of the
/// input `k` so that iterative solves target it.
pub fn cross_consistency_report(
    model: &PermittivityModel,
    basis: &PlaneWaveSet,
    alphas: &[f64],
    nbands: usize,
    qopts: &QuadraticOptions,
) -> Result<CrossReport, OracleError> {
    let standard = StandardSolver::new(model, basis, qopts.grid)?;
    let quadratic = QuadraticSolver::new(model, basis, *qopts).map_err(SweepError::from)?;
    let path = PathSpec::gamma_x_m_r(1);
    let mut rows = Vec::new();
    for &alpha in alphas {
        let (s, lambda) = path.locate(alpha).map_err(SweepError::from)?;
        let seg = path.segment(s).map_err(SweepError::from)?;
        let k = crate::path::path_wavevector(alpha).map_err(SweepError::from)?;
        let modes = standard.solve(&k, nbands)?;
        for (band, mode) in modes.iter().enumerate() {
            let (tau, _) = resolve_tau(&TauPolicy::Auto, seg, mode.omega, model).map_err(SweepError::from)?;
            let split = seg.split(tau).map_err(|e| SweepError::from(crate::path::PathError::from(e)))?;
            let mut opts = *qopts;
            opts.shift = Complex64::new(lambda - split.tau(), qopts.shift.im);
            let sol = quadratic
                .with_options(opts)
                .solve(mode.omega, &split)
                .map_err(SweepError::from)?;
            let best = sol
                .pairs
                .iter()
                .filter(|p| p.accepted && p.lambda.im.abs() <= qopts.im_tol)
                .map(|p| {
                    let kc = p.k.map(|z| z.re);
                    let dev = (0..3).map(|j| (kc[j] - k[j]).abs()).fold(0.0, f64::max);
                    (kc, dev)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1));
            rows.push(CrossRow {
                alpha,
                k,
                band,
                omega: mode.omega,
                k_computed: best.map(|b| b.0),
                deviation: best.map(|b| b.1).unwrap_or(f64::INFINITY),
            });
        }
    }
    let max_deviation = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    Ok(CrossReport { rows, max_deviation })
}
