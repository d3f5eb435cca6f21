//! Fixed-`k` problem for `ω²` on the divergence-free subspace.
//!
//! Each mode carries two transverse polarizations `e₁, e₂ ⊥ k + I`, so the
//! reduced matrix has size `2m` with an identity mass matrix:
//! `H_{(I',a),(I,b)} = κ(I' − I) ⟨N_{I'} e_{I',a}, N_I e_{I,b}⟩`.

use faer::{Mat, Side};
use num_complex::Complex64;
use thiserror::Error;

use crate::lattice::{
    add, curl_matrix, mat_vec, mode_vector, polarization_basis, CVec3, PlaneWaveSet, Vec3,
    ZERO_VECTOR_TOL,
};
use crate::materials::{InvEpsilonTable, MaterialError, PermittivityModel, RegionSpectra};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StandardError {
    #[error("permittivity model depends on frequency; freeze it first")]
    NotFrequencyIndependent,
    #[error("eigensolver failed: {0}")]
    EigenFailure(String),
    #[error("1/eps table lacks difference index {0:?}")]
    MissingCoefficient([i32; 3]),
    #[error(transparent)]
    Material(#[from] MaterialError),
}

#[derive(Debug, Clone)]
pub struct StandardMode {
    pub omega2: f64,
    pub omega: f64,
    /// Coefficients on the per-mode polarization pair, `2·pos + a`.
    pub coeffs: Vec<Complex64>,
}

/// Transverse polarizations of every mode at `k`. When `k + I` vanishes the
/// pair falls back to `(x̂, ŷ)`.
pub fn mode_polarizations(basis: &PlaneWaveSet, k: &Vec3) -> Vec<(Vec3, Vec3)> {
    basis
        .modes()
        .iter()
        .map(|mode| {
            let g = add(k, &mode_vector(*mode));
            polarization_basis(&g).unwrap_or(([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]))
        })
        .collect()
}

/// Hermitian reduced matrix `H` of size `2m`.
pub fn reduced_matrix(
    basis: &PlaneWaveSet,
    k: &Vec3,
    inv_eps: &InvEpsilonTable,
) -> Result<Mat<Complex64>, StandardError> {
    let m = basis.len();
    let pols = mode_polarizations(basis, k);
    let real = |v: &Vec3| v.map(|x| Complex64::new(x, 0.0));
    let curls: Vec<[CVec3; 2]> = basis
        .modes()
        .iter()
        .zip(&pols)
        .map(|(mode, (e1, e2))| {
            let g = add(k, &mode_vector(*mode));
            let n = curl_matrix(&g);
            [mat_vec(&n, &real(e1)), mat_vec(&n, &real(e2))]
        })
        .collect();
    let modes = basis.modes();
    let mut h = Mat::<Complex64>::zeros(2 * m, 2 * m);
    for (r, test) in modes.iter().enumerate() {
        for (c, trial) in modes.iter().enumerate() {
            let d = [test[0] - trial[0], test[1] - trial[1], test[2] - trial[2]];
            let kappa = inv_eps.get(d).ok_or(StandardError::MissingCoefficient(d))?;
            for a in 0..2 {
                for b in 0..2 {
                    let w1 = &curls[r][a];
                    let w2 = &curls[c][b];
                    let inner: Complex64 = (0..3).map(|j| w1[j].conj() * w2[j]).sum();
                    h[(2 * r + a, 2 * c + b)] = kappa * inner;
                }
            }
        }
    }
    Ok(h)
}

/// Smallest `nev` eigenvalues `ω² ≥ −tol` of the reduced problem, ascending.
pub fn solve_reduced(h: &Mat<Complex64>, nev: usize) -> Result<Vec<StandardMode>, StandardError> {
    let n = h.nrows();
    // symmetrize against round-off in the assembled entries
    let sym = Mat::<Complex64>::from_fn(n, n, |i, j| (h[(i, j)] + h[(j, i)].conj()) * 0.5);
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| StandardError::EigenFailure(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let scale = (0..n).map(|i| s[i].re.abs()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-10 * scale;
    let mut out = Vec::new();
    for i in 0..n {
        let w2 = s[i].re;
        if w2 < -tol {
            continue;
        }
        let w2 = w2.max(0.0);
        out.push(StandardMode {
            omega2: w2,
            omega: w2.sqrt(),
            coeffs: (0..n).map(|r| u[(r, i)]).collect(),
        });
        if out.len() == nev {
            break;
        }
    }
    Ok(out)
}

/// Reusable solver for one frequency-independent model and basis.
#[derive(Debug, Clone)]
pub struct StandardSolver {
    basis: PlaneWaveSet,
    table: InvEpsilonTable,
}

impl StandardSolver {
    pub fn new(
        model: &PermittivityModel,
        basis: &PlaneWaveSet,
        grid: usize,
    ) -> Result<Self, StandardError> {
        if !model.is_frequency_independent() {
            return Err(StandardError::NotFrequencyIndependent);
        }
        let table = RegionSpectra::new(model, basis.order(), grid)?.table(model, 0.0);
        Ok(Self {
            basis: basis.clone(),
            table,
        })
    }

    pub fn from_table(basis: &PlaneWaveSet, table: InvEpsilonTable) -> Self {
        Self {
            basis: basis.clone(),
            table,
        }
    }

    pub fn basis(&self) -> &PlaneWaveSet {
        &self.basis
    }

    pub fn solve(&self, k: &Vec3, nev: usize) -> Result<Vec<StandardMode>, StandardError> {
        let h = reduced_matrix(&self.basis, k, &self.table)?;
        solve_reduced(&h, nev)
    }
}

pub fn solve_standard(
    k: &Vec3,
    model: &PermittivityModel,
    basis: &PlaneWaveSet,
    nev: usize,
    grid: usize,
) -> Result<Vec<StandardMode>, StandardError> {
    StandardSolver::new(model, basis, grid)?.solve(k, nev)
}

/// True when some mode of the basis sits exactly at `k + I = 0`.
pub fn has_null_mode(basis: &PlaneWaveSet, k: &Vec3) -> bool {
    basis.modes().iter().any(|mode| {
        let g = add(k, &mode_vector(*mode));
        crate::lattice::norm(&g) <= ZERO_VECTOR_TOL
    })
}
