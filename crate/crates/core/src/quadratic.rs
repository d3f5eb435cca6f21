//! Fixed-`ω` problem for `η` through the linearized pencil `A X = −η C X`.
//!
//! Both methods work on the shift-inverted operator `K = −(A + σC)⁻¹ C`,
//! whose eigenvalues are `μ = 1/(η − σ)`. Null directions of `C` map to
//! `μ = 0` and are discarded; the remaining pairs carry multiplier
//! diagnostics so that solutions of the constrained problem (`p = 0`,
//! `s = 0`) can be told apart from artefacts of the pencil.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use log::warn;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::admissibility::{check_admissibility, AdmissibilityReport};
use crate::arnoldi::{arnoldi, ArnoldiError, ArnoldiOptions};
use crate::forms::{build_linearized_system, mat_apply, FieldCoefficients, FormsError, MixedBlockSystem, DEFAULT_M};
use crate::lattice::{CVec3, LatticeError, PlaneWaveSet, WaveVectorSplit};
use crate::materials::{MaterialError, PermittivityModel, RegionSpectra};

/// Default quadrature grid for the `1/ε` table.
pub const DEFAULT_GRID: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("A + shift*C is numerically singular (pivot ratio {0:e})")]
    SingularA(f64),
    #[error("Arnoldi converged only {0} eigenvalues")]
    ArnoldiNoConvergence(usize),
    #[error("split is not admissible at this frequency (margin {})", .0.margin)]
    Inadmissible(Box<AdmissibilityReport>),
    #[error("zero vector has no residual")]
    NotAVector,
    #[error("dense eigensolver failed: {0}")]
    EigenFailure(String),
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

impl From<ArnoldiError> for SolverError {
    fn from(e: ArnoldiError) -> Self {
        match e {
            ArnoldiError::NoConvergence(k) => SolverError::ArnoldiNoConvergence(k),
            other => SolverError::EigenFailure(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EtaMethod {
    Dense,
    Arnoldi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticOptions {
    /// Number of `η` wanted; `0` keeps every finite value (dense only).
    pub nev: usize,
    pub method: EtaMethod,
    pub shift: Complex64,
    pub m_weight: f64,
    pub im_tol: f64,
    pub diag_tol: f64,
    pub residual_tol: f64,
    /// `|μ| ≤ mu_cutoff · max|μ|` counts as an infinite `η`.
    pub mu_cutoff: f64,
    /// Smallest acceptable `min|U_ii| / max|U_ii|` of the LU factor.
    pub pivot_tol: f64,
    /// Step applied to `τ` when `A + σC` is singular.
    pub tau_step: f64,
    /// Refuse inadmissible splits instead of warning.
    pub require_admissible: bool,
    pub subspace: usize,
    pub arnoldi_tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
    pub grid: usize,
}

impl Default for QuadraticOptions {
    fn default() -> Self {
        let a = ArnoldiOptions::new(10);
        Self {
            nev: 10,
            method: EtaMethod::Dense,
            shift: Complex64::new(0.0, 0.0),
            m_weight: DEFAULT_M,
            im_tol: 1e-6,
            diag_tol: 1e-8,
            residual_tol: 1e-8,
            mu_cutoff: 1e-10,
            pivot_tol: 1e-13,
            tau_step: 1e-3,
            require_admissible: false,
            subspace: a.subspace,
            arnoldi_tol: a.tol,
            max_restarts: a.max_restarts,
            seed: a.seed,
            grid: DEFAULT_GRID,
        }
    }
}

impl QuadraticOptions {
    fn arnoldi_options(&self) -> ArnoldiOptions {
        let mut a = ArnoldiOptions::new(self.nev.max(1));
        a.subspace = self.subspace.max(a.nev + 1);
        a.tol = self.arnoldi_tol;
        a.max_restarts = self.max_restarts;
        a.seed = self.seed;
        a.negligible = self.mu_cutoff;
        a
    }
}

#[derive(Debug, Clone)]
pub struct EtaEigenpair {
    pub eta: Complex64,
    pub lambda: Complex64,
    pub k: CVec3,
    /// Eigenvector scaled to `‖u₁‖ = 1` (left unscaled when `u₁ = 0`).
    pub fields: FieldCoefficients,
    pub residual: f64,
    pub p_norm: f64,
    pub s_abs: f64,
    pub u2_gap: f64,
    /// Residual and multiplier checks all pass.
    pub accepted: bool,
}

impl EtaEigenpair {
    pub fn is_real(&self, im_tol: f64) -> bool {
        self.eta.im.abs() <= im_tol
    }
}

#[derive(Debug, Clone)]
pub struct QuadraticSolution {
    pub pairs: Vec<EtaEigenpair>,
    /// Split actually used (differs from the request after a `τ` step).
    pub split: WaveVectorSplit,
    pub admissibility: AdmissibilityReport,
    pub warnings: Vec<String>,
}

fn vnorm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖(A + ηC) X‖ / ‖X‖`.
pub fn residual(system: &MixedBlockSystem, eta: Complex64, x: &[Complex64]) -> Result<f64, SolverError> {
    let xn = vnorm(x);
    if x.len() != system.dim() {
        return Err(FormsError::DimensionMismatch {
            got: x.len(),
            want: system.dim(),
        }
        .into());
    }
    if xn == 0.0 {
        return Err(SolverError::NotAVector);
    }
    Ok(vnorm(&crate::forms::pencil_apply(system, eta, x)) / xn)
}

/// LU factorization of `A + σC` together with `C`, applying
/// `x ↦ −(A + σC)⁻¹ C x`.
pub struct ShiftInvert<'a> {
    lu: PartialPivLu<Complex64>,
    c: &'a Mat<Complex64>,
    shift: Complex64,
    pivot_ratio: f64,
}

impl<'a> ShiftInvert<'a> {
    pub fn new(system: &'a MixedBlockSystem, shift: Complex64, pivot_tol: f64) -> Result<Self, SolverError> {
        let n = system.dim();
        let m = Mat::<Complex64>::from_fn(n, n, |i, j| system.a[(i, j)] + shift * system.c[(i, j)]);
        let lu = m.partial_piv_lu();
        let u = lu.U();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let d = u[(i, i)].norm();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let pivot_ratio = if hi > 0.0 { lo / hi } else { 0.0 };
        if pivot_ratio.is_nan() || pivot_ratio <= pivot_tol {
            return Err(SolverError::SingularA(pivot_ratio));
        }
        Ok(Self {
            lu,
            c: &system.c,
            shift,
            pivot_ratio,
        })
    }

    pub fn shift(&self) -> Complex64 {
        self.shift
    }

    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let cx = mat_apply(self.c, x);
        let rhs = Mat::<Complex64>::from_fn(cx.len(), 1, |i, _| cx[i]);
        let y = self.lu.solve(&rhs);
        (0..cx.len()).map(|i| -y[(i, 0)]).collect()
    }

    /// Dense `K = −(A + σC)⁻¹ C`.
    pub fn dense(&self) -> Mat<Complex64> {
        let y = self.lu.solve(self.c);
        -y
    }
}

pub fn apply_shift_invert(
    system: &MixedBlockSystem,
    shift: Complex64,
    x: &[Complex64],
) -> Result<Vec<Complex64>, SolverError> {
    Ok(ShiftInvert::new(system, shift, 0.0)?.apply(x))
}

/// Diagnostics of a candidate pair of `system`.
pub fn make_pair(
    system: &MixedBlockSystem,
    eta: Complex64,
    x: &[Complex64],
    opts: &QuadraticOptions,
) -> Result<EtaEigenpair, SolverError> {
    let res = residual(system, eta, x)?;
    let mut fields = FieldCoefficients::from_vector(system.layout.modes, x)?;
    let u1n = fields.u1_norm();
    let (p_norm, s_abs, u2_gap) = if u1n > 0.0 {
        let inv = 1.0 / u1n;
        fields.u1.iter_mut().flatten().for_each(|z| *z *= inv);
        fields.u2.iter_mut().flatten().for_each(|z| *z *= inv);
        fields.p.iter_mut().for_each(|z| *z *= inv);
        fields.s *= inv;
        (fields.p_norm(), fields.s.norm(), fields.u2_gap(eta))
    } else {
        (f64::INFINITY, f64::INFINITY, f64::INFINITY)
    };
    let split = &system.meta.split;
    let accepted = res <= opts.residual_tol
        && p_norm <= opts.diag_tol
        && s_abs <= opts.diag_tol
        && u2_gap <= opts.diag_tol;
    Ok(EtaEigenpair {
        eta,
        lambda: split.lambda(eta),
        k: split.wave_vector(eta),
        fields,
        residual: res,
        p_norm,
        s_abs,
        u2_gap,
        accepted,
    })
}

/// Real pairs first, nearest the shift first; complex pairs by `|Im η|`
/// then distance to the shift.
pub fn sort_pairs(pairs: &mut [EtaEigenpair], shift: Complex64, im_tol: f64) {
    pairs.sort_by(|a, b| {
        let ra = a.is_real(im_tol);
        let rb = b.is_real(im_tol);
        rb.cmp(&ra).then_with(|| {
            let da = (a.eta - shift).norm();
            let db = (b.eta - shift).norm();
            if ra {
                da.total_cmp(&db)
            } else {
                a.eta.im.abs().total_cmp(&b.eta.im.abs()).then(da.total_cmp(&db))
            }
        })
    });
}

/// Eigenpairs `(μ, x)` of `K` with `|μ|` above the cutoff, decreasing `|μ|`.
fn transformed_pairs(
    si: &ShiftInvert<'_>,
    dim: usize,
    opts: &QuadraticOptions,
) -> Result<Vec<(Complex64, Vec<Complex64>)>, SolverError> {
    match opts.method {
        EtaMethod::Dense => {
            let k = si.dense();
            let evd = k.eigen().map_err(|e| SolverError::EigenFailure(format!("{e:?}")))?;
            let s = evd.S().column_vector();
            let u = evd.U();
            let top = (0..dim).map(|i| s[i].norm()).fold(0.0, f64::max);
            let mut idx: Vec<usize> = (0..dim).filter(|&i| s[i].norm() > opts.mu_cutoff * top).collect();
            idx.sort_by(|&a, &b| s[b].norm().total_cmp(&s[a].norm()).then(a.cmp(&b)));
            if opts.nev > 0 {
                idx.truncate(opts.nev);
            }
            Ok(idx
                .into_iter()
                .map(|i| (s[i], (0..dim).map(|r| u[(r, i)]).collect()))
                .collect())
        }
        EtaMethod::Arnoldi => {
            let res = arnoldi(|x| si.apply(x), dim, &opts.arnoldi_options())?;
            Ok(res
                .pairs
                .into_iter()
                .filter(|p| !p.negligible)
                .map(|p| (p.value, p.vector))
                .collect())
        }
    }
}

/// Solves an assembled system for `η` without any `τ` handling.
pub fn solve_system(system: &MixedBlockSystem, opts: &QuadraticOptions) -> Result<Vec<EtaEigenpair>, SolverError> {
    let si = ShiftInvert::new(system, opts.shift, opts.pivot_tol)?;
    let raw = transformed_pairs(&si, system.dim(), opts)?;
    let mut pairs = raw
        .into_iter()
        .map(|(mu, x)| make_pair(system, opts.shift + mu.inv(), &x, opts))
        .collect::<Result<Vec<_>, _>>()?;
    sort_pairs(&mut pairs, opts.shift, opts.im_tol);
    Ok(pairs)
}

/// Moves `τ` by `step` so that `β` moves into the zone interior along `α̂`.
fn stepped_split(split: &WaveVectorSplit, step: f64) -> Result<WaveVectorSplit, LatticeError> {
    let beta = split.beta();
    let ah = split.alpha_hat();
    let along: f64 = (0..3).map(|j| beta[j] * ah[j]).sum();
    let delta = if along > 0.0 { -step } else { step };
    split.with_tau(split.tau() + delta)
}

/// Quadratic solver for one model and basis; the region spectra of the
/// model are computed once and reused for every frequency.
#[derive(Debug, Clone)]
pub struct QuadraticSolver {
    model: PermittivityModel,
    basis: PlaneWaveSet,
    spectra: RegionSpectra,
    opts: QuadraticOptions,
}

impl QuadraticSolver {
    pub fn new(model: &PermittivityModel, basis: &PlaneWaveSet, opts: QuadraticOptions) -> Result<Self, SolverError> {
        let spectra = RegionSpectra::new(model, basis.order(), opts.grid)?;
        Ok(Self {
            model: *model,
            basis: basis.clone(),
            spectra,
            opts,
        })
    }

    pub fn options(&self) -> &QuadraticOptions {
        &self.opts
    }

    pub fn with_options(&self, opts: QuadraticOptions) -> Self {
        Self {
            opts,
            ..self.clone()
        }
    }

    pub fn basis(&self) -> &PlaneWaveSet {
        &self.basis
    }

    pub fn model(&self) -> &PermittivityModel {
        &self.model
    }

    pub fn system(&self, omega: f64, split: &WaveVectorSplit) -> Result<MixedBlockSystem, SolverError> {
        let table = self.spectra.table(&self.model, omega);
        Ok(build_linearized_system(
            &self.basis,
            split,
            omega,
            self.opts.m_weight,
            &table,
            &self.model.label(),
        )?)
    }

    pub fn solve(&self, omega: f64, split: &WaveVectorSplit) -> Result<QuadraticSolution, SolverError> {
        let mut warnings = Vec::new();
        let report = check_admissibility(split, omega, &self.model);
        if !report.ok {
            if self.opts.require_admissible {
                return Err(SolverError::Inadmissible(Box::new(report)));
            }
            let msg = format!(
                "split with tau={} is not admissible at omega={omega} (margin {:.3e}); proceeding",
                split.tau(),
                report.margin
            );
            warn!("{msg}");
            warnings.push(msg);
        }
        let system = self.system(omega, split)?;
        match solve_system(&system, &self.opts) {
            Ok(pairs) => Ok(QuadraticSolution {
                pairs,
                split: *split,
                admissibility: report,
                warnings,
            }),
            Err(SolverError::SingularA(ratio)) => {
                let moved = stepped_split(split, self.opts.tau_step)?;
                let msg = format!(
                    "A + shift*C singular (pivot ratio {ratio:.2e}) at omega={omega}; tau moved {} -> {}",
                    split.tau(),
                    moved.tau()
                );
                warn!("{msg}");
                warnings.push(msg);
                let system = self.system(omega, &moved)?;
                let pairs = solve_system(&system, &self.opts)?;
                Ok(QuadraticSolution {
                    pairs,
                    split: moved,
                    admissibility: check_admissibility(&moved, omega, &self.model),
                    warnings,
                })
            }
            Err(e) => Err(e),
        }
    }
}

pub fn solve_quadratic_eta(
    omega: f64,
    split: &WaveVectorSplit,
    model: &PermittivityModel,
    basis: &PlaneWaveSet,
    opts: &QuadraticOptions,
) -> Result<QuadraticSolution, SolverError> {
    QuadraticSolver::new(model, basis, *opts)?.solve(omega, split)
}
