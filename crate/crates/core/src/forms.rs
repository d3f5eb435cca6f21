//! Galerkin blocks of the mixed sesquilinear forms in the plane-wave basis
//! and the linearized pencil `A X = −η C X`.
//!
//! Unknowns are ordered `X = (u₁ | u₂ | p | s)` with `u₁`, `u₂` stored as
//! `3·pos + component` and `p` as `pos`; test functions `(v₁ | v₂ | q | t)`
//! index rows the same way. A form `(F u, G v)` with `ε⁻¹` weight becomes the
//! row block `G_{I'}^H κ(I' − I) F_I` for test mode `I'` and unknown mode `I`.

use faer::Mat;
use num_complex::Complex64;
use thiserror::Error;

use crate::lattice::{
    adjoint, cnorm_sqr, curl_matrix, gamma_of, mat_mul, mat_vec, mode_vector, CMat3, CVec3,
    PlaneWaveSet, Vec3, WaveVectorSplit,
};
use crate::materials::InvEpsilonTable;

/// Default weight `M` of the auxiliary unknown.
pub const DEFAULT_M: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormsError {
    #[error("1/eps table lacks the coefficient for difference index {0:?}")]
    MissingCoefficient([i32; 3]),
    #[error("vector of length {got} does not match system dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn identity3(scale: f64) -> CMat3 {
    let mut m = [[zero(); 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(scale, 0.0);
    }
    m
}

/// Offsets of the four unknown groups for `m` modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub modes: usize,
}

impl Layout {
    pub fn new(modes: usize) -> Self {
        Self { modes }
    }
    pub fn u1(&self) -> usize {
        0
    }
    pub fn u2(&self) -> usize {
        3 * self.modes
    }
    pub fn p(&self) -> usize {
        6 * self.modes
    }
    pub fn s(&self) -> usize {
        7 * self.modes
    }
    pub fn dim(&self) -> usize {
        7 * self.modes + 1
    }
}

/// Coefficients of `(u₁, u₂, p, s)` on the plane-wave basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCoefficients {
    pub u1: Vec<CVec3>,
    pub u2: Vec<CVec3>,
    pub p: Vec<Complex64>,
    pub s: Complex64,
}

impl FieldCoefficients {
    pub fn from_vector(modes: usize, x: &[Complex64]) -> Result<Self, FormsError> {
        let layout = Layout::new(modes);
        if x.len() != layout.dim() {
            return Err(FormsError::DimensionMismatch {
                got: x.len(),
                want: layout.dim(),
            });
        }
        let vecs = |off: usize| {
            (0..modes)
                .map(|p| [x[off + 3 * p], x[off + 3 * p + 1], x[off + 3 * p + 2]])
                .collect::<Vec<_>>()
        };
        Ok(Self {
            u1: vecs(layout.u1()),
            u2: vecs(layout.u2()),
            p: x[layout.p()..layout.s()].to_vec(),
            s: x[layout.s()],
        })
    }

    pub fn to_vector(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(7 * self.p.len() + 1);
        out.extend(self.u1.iter().flatten());
        out.extend(self.u2.iter().flatten());
        out.extend(&self.p);
        out.push(self.s);
        out
    }

    pub fn u1_norm(&self) -> f64 {
        self.u1.iter().map(cnorm_sqr).sum::<f64>().sqrt()
    }

    pub fn p_norm(&self) -> f64 {
        self.p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖u₂ − η u₁‖`.
    pub fn u2_gap(&self, eta: Complex64) -> f64 {
        self.u1
            .iter()
            .zip(&self.u2)
            .map(|(a, b)| (0..3).map(|j| (b[j] - eta * a[j]).norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// Metadata recorded with an assembled system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMeta {
    pub split: WaveVectorSplit,
    pub omega: f64,
    pub m_weight: f64,
    pub order: usize,
    pub model: String,
}

#[derive(Debug, Clone)]
pub struct MixedBlockSystem {
    pub a: Mat<Complex64>,
    pub c: Mat<Complex64>,
    pub layout: Layout,
    pub meta: SystemMeta,
}

impl MixedBlockSystem {
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }
}

/// `S = i[α̂]×`, the symbol of `v ↦ iα̂ × v`.
pub fn cross_symbol(alpha_hat: &Vec3) -> CMat3 {
    curl_matrix(alpha_hat)
}

fn kappa(inv_eps: &InvEpsilonTable, test: [i32; 3], trial: [i32; 3]) -> Result<Complex64, FormsError> {
    let d = [test[0] - trial[0], test[1] - trial[1], test[2] - trial[2]];
    inv_eps.get(d).ok_or(FormsError::MissingCoefficient(d))
}

/// Block `(I', I) ↦ left(I') · κ(I' − I) · right(I)` over all mode pairs.
fn weighted_block(
    basis: &PlaneWaveSet,
    inv_eps: &InvEpsilonTable,
    left: &[CMat3],
    right: &[CMat3],
) -> Result<Mat<Complex64>, FormsError> {
    let m = basis.len();
    let modes = basis.modes();
    let mut out = Mat::<Complex64>::zeros(3 * m, 3 * m);
    for (row, test) in modes.iter().enumerate() {
        for (col, trial) in modes.iter().enumerate() {
            let k = kappa(inv_eps, *test, *trial)?;
            if k == zero() {
                continue;
            }
            let prod = mat_mul(&left[row], &right[col]);
            for i in 0..3 {
                for j in 0..3 {
                    out[(3 * row + i, 3 * col + j)] = prod[i][j] * k;
                }
            }
        }
    }
    Ok(out)
}

fn mode_diagonal(m: usize, block: &CMat3) -> Mat<Complex64> {
    let mut out = Mat::<Complex64>::zeros(3 * m, 3 * m);
    for p in 0..m {
        for i in 0..3 {
            for j in 0..3 {
                out[(3 * p + i, 3 * p + j)] = block[i][j];
            }
        }
    }
    out
}

fn curl_symbols(basis: &PlaneWaveSet, split: &WaveVectorSplit) -> Vec<CMat3> {
    basis
        .modes()
        .iter()
        .map(|mode| curl_matrix(&gamma_of(split, *mode)))
        .collect()
}

/// Blocks of `a₁`: `(ε⁻¹curl_β u₁, curl_β v₁) − ω²(u₁, v₁)`,
/// `(ε⁻¹ iα̂×u₂, curl_β v₁)` and `M(u₂, v₂)`.
#[derive(Debug, Clone)]
pub struct A1Blocks {
    pub u1_v1: Mat<Complex64>,
    pub u2_v1: Mat<Complex64>,
    pub u2_v2: Mat<Complex64>,
}

pub fn assemble_a1(
    basis: &PlaneWaveSet,
    split: &WaveVectorSplit,
    omega: f64,
    m_weight: f64,
    inv_eps: &InvEpsilonTable,
) -> Result<A1Blocks, FormsError> {
    let m = basis.len();
    let curls = curl_symbols(basis, split);
    let curls_h: Vec<CMat3> = curls.iter().map(adjoint).collect();
    let s = vec![cross_symbol(&split.alpha_hat()); m];
    let mut u1_v1 = weighted_block(basis, inv_eps, &curls_h, &curls)?;
    for i in 0..3 * m {
        u1_v1[(i, i)] -= Complex64::new(omega * omega, 0.0);
    }
    let u2_v1 = weighted_block(basis, inv_eps, &curls_h, &s)?;
    let u2_v2 = mode_diagonal(m, &identity3(m_weight));
    Ok(A1Blocks {
        u1_v1,
        u2_v1,
        u2_v2,
    })
}

/// Blocks of `a₂`: `(ε⁻¹ iα̂×u₂, iα̂×v₁)`, `(ε⁻¹curl_β u₁, iα̂×v₁)` and
/// `−M(u₁, v₂)`.
#[derive(Debug, Clone)]
pub struct A2Blocks {
    pub u2_v1: Mat<Complex64>,
    pub u1_v1: Mat<Complex64>,
    pub u1_v2: Mat<Complex64>,
}

pub fn assemble_a2(
    basis: &PlaneWaveSet,
    split: &WaveVectorSplit,
    alpha_hat: &Vec3,
    m_weight: f64,
    inv_eps: &InvEpsilonTable,
) -> Result<A2Blocks, FormsError> {
    let m = basis.len();
    let s = cross_symbol(alpha_hat);
    let s_h = vec![adjoint(&s); m];
    let s_r = vec![s; m];
    let curls = curl_symbols(basis, split);
    Ok(A2Blocks {
        u2_v1: weighted_block(basis, inv_eps, &s_h, &s_r)?,
        u1_v1: weighted_block(basis, inv_eps, &s_h, &curls)?,
        u1_v2: mode_diagonal(m, &identity3(-m_weight)),
    })
}

/// `b₁(p; V) = (∇_β p, v₁)`: column `iγ^I` against `v₁` on the same mode (3m × m).
pub fn assemble_b1(basis: &PlaneWaveSet, split: &WaveVectorSplit) -> Mat<Complex64> {
    let m = basis.len();
    let mut out = Mat::<Complex64>::zeros(3 * m, m);
    for (p, mode) in basis.modes().iter().enumerate() {
        let g = gamma_of(split, *mode);
        for j in 0..3 {
            out[(3 * p + j, p)] = Complex64::new(0.0, g[j]);
        }
    }
    out
}

/// `b₂(p; V) = (iα̂ p, v₁)`: column `iα̂` on every mode (3m × m).
pub fn assemble_b2(basis: &PlaneWaveSet, alpha_hat: &Vec3) -> Mat<Complex64> {
    let m = basis.len();
    let mut out = Mat::<Complex64>::zeros(3 * m, m);
    for p in 0..m {
        for j in 0..3 {
            out[(3 * p + j, p)] = Complex64::new(0.0, alpha_hat[j]);
        }
    }
    out
}

/// Couplings of the mean constraint: `(q, s)` hits only the constant mode of
/// `q`, and `(p, t)` only the constant mode of `p` (unit cell volume).
#[derive(Debug, Clone)]
pub struct C1Couplings {
    /// `m × 1`: rows `q`, column `s`.
    pub q_s: Mat<Complex64>,
    /// `1 × m`: row `t`, columns `p`.
    pub t_p: Mat<Complex64>,
}

pub fn assemble_c1(basis: &PlaneWaveSet) -> C1Couplings {
    let m = basis.len();
    let zero_pos = basis.zero_position();
    let mut q_s = Mat::<Complex64>::zeros(m, 1);
    let mut t_p = Mat::<Complex64>::zeros(1, m);
    q_s[(zero_pos, 0)] = one();
    t_p[(0, zero_pos)] = one();
    C1Couplings { q_s, t_p }
}

pub fn build_linearized_system(
    basis: &PlaneWaveSet,
    split: &WaveVectorSplit,
    omega: f64,
    m_weight: f64,
    inv_eps: &InvEpsilonTable,
    model: &str,
) -> Result<MixedBlockSystem, FormsError> {
    let m = basis.len();
    let layout = Layout::new(m);
    let n = layout.dim();
    let alpha_hat = split.alpha_hat();

    let a1 = assemble_a1(basis, split, omega, m_weight, inv_eps)?;
    let a2 = assemble_a2(basis, split, &alpha_hat, m_weight, inv_eps)?;
    let b1 = assemble_b1(basis, split);
    let b2 = assemble_b2(basis, &alpha_hat);
    let c1 = assemble_c1(basis);

    let (u1, u2, p, s) = (layout.u1(), layout.u2(), layout.p(), layout.s());
    let mut a = Mat::<Complex64>::zeros(n, n);
    let mut c = Mat::<Complex64>::zeros(n, n);

    a.as_mut().submatrix_mut(u1, u1, 3 * m, 3 * m).copy_from(&a1.u1_v1);
    a.as_mut().submatrix_mut(u1, u2, 3 * m, 3 * m).copy_from(&a1.u2_v1);
    a.as_mut().submatrix_mut(u2, u2, 3 * m, 3 * m).copy_from(&a1.u2_v2);
    a.as_mut().submatrix_mut(u1, p, 3 * m, m).copy_from(&b1);
    a.as_mut().submatrix_mut(p, u1, m, 3 * m).copy_from(b1.adjoint());
    a.as_mut().submatrix_mut(p, s, m, 1).copy_from(&c1.q_s);
    a.as_mut().submatrix_mut(s, p, 1, m).copy_from(&c1.t_p);

    c.as_mut().submatrix_mut(u1, u1, 3 * m, 3 * m).copy_from(&a2.u1_v1);
    c.as_mut().submatrix_mut(u1, u2, 3 * m, 3 * m).copy_from(&a2.u2_v1);
    c.as_mut().submatrix_mut(u2, u1, 3 * m, 3 * m).copy_from(&a2.u1_v2);
    c.as_mut().submatrix_mut(u1, p, 3 * m, m).copy_from(&b2);
    c.as_mut().submatrix_mut(p, u1, m, 3 * m).copy_from(b2.adjoint());

    Ok(MixedBlockSystem {
        a,
        c,
        layout,
        meta: SystemMeta {
            split: *split,
            omega,
            m_weight,
            order: basis.order(),
            model: model.to_string(),
        },
    })
}

/// Residual rows of the quadratic mixed problem at `(u₁, p, s, η)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticRows {
    pub v: Vec<CVec3>,
    pub q: Vec<Complex64>,
    pub t: Complex64,
}

impl QuadraticRows {
    pub fn norm(&self) -> f64 {
        let v: f64 = self.v.iter().map(cnorm_sqr).sum();
        let q: f64 = self.q.iter().map(|z| z.norm_sqr()).sum();
        (v + q + self.t.norm_sqr()).sqrt()
    }
}

/// Evaluates the quadratic mixed problem directly with the complex wave
/// vector `k = β + η α̂`, without going through the block matrices:
///
/// * `v`-rows: `N_{k,I'} Σ_I κ(I'−I) N_{k,I} u_I − ω² u_{I'} + i(k+I') p_{I'}`
/// * `q`-rows: `−i(k+I')·u_{I'} + s δ_{I'0}`
/// * `t`-row: `p₀`
#[allow(clippy::too_many_arguments)]
pub fn quadratic_form_rows(
    basis: &PlaneWaveSet,
    split: &WaveVectorSplit,
    omega: f64,
    inv_eps: &InvEpsilonTable,
    eta: Complex64,
    u1: &[CVec3],
    p: &[Complex64],
    s: Complex64,
) -> Result<QuadraticRows, FormsError> {
    let i = Complex64::new(0.0, 1.0);
    let beta = split.beta();
    let ah = split.alpha_hat();
    let shifted: Vec<CVec3> = basis
        .modes()
        .iter()
        .map(|mode| {
            let iv = mode_vector(*mode);
            [0, 1, 2].map(|j| eta * ah[j] + beta[j] + iv[j])
        })
        .collect();
    // i c × w for complex c
    let curl = |c: &CVec3, w: &CVec3| -> CVec3 {
        [
            i * (c[1] * w[2] - c[2] * w[1]),
            i * (c[2] * w[0] - c[0] * w[2]),
            i * (c[0] * w[1] - c[1] * w[0]),
        ]
    };
    let curled: Vec<CVec3> = shifted.iter().zip(u1).map(|(c, u)| curl(c, u)).collect();
    let modes = basis.modes();
    let mut v = Vec::with_capacity(modes.len());
    for (row, test) in modes.iter().enumerate() {
        let mut acc = [zero(); 3];
        for (col, trial) in modes.iter().enumerate() {
            let k = kappa(inv_eps, *test, *trial)?;
            for j in 0..3 {
                acc[j] += k * curled[col][j];
            }
        }
        let c = &shifted[row];
        let cc = curl(c, &acc);
        v.push([0, 1, 2].map(|j| cc[j] - u1[row][j] * (omega * omega) + i * c[j] * p[row]));
    }
    let zero_pos = basis.zero_position();
    let q = shifted
        .iter()
        .zip(u1)
        .enumerate()
        .map(|(pos, (c, u))| {
            let div = -i * (c[0] * u[0] + c[1] * u[1] + c[2] * u[2]);
            if pos == zero_pos {
                div + s
            } else {
                div
            }
        })
        .collect();
    Ok(QuadraticRows {
        v,
        q,
        t: p[zero_pos],
    })
}

/// `y = M x` for a dense complex matrix.
pub fn mat_apply(m: &Mat<Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![zero(); m.nrows()];
    for j in 0..m.ncols() {
        let xj = x[j];
        if xj == zero() {
            continue;
        }
        let col = m.col(j);
        for (o, a) in out.iter_mut().zip(col.iter()) {
            *o += a * xj;
        }
    }
    out
}

/// `(A + η C) X` as a flat vector.
pub fn pencil_apply(system: &MixedBlockSystem, eta: Complex64, x: &[Complex64]) -> Vec<Complex64> {
    let ax = mat_apply(&system.a, x);
    let cx = mat_apply(&system.c, x);
    ax.iter().zip(&cx).map(|(a, c)| a + eta * c).collect()
}

/// Per-mode curl of the `u₁` coefficients, `N_I u_I`.
pub fn curl_coefficients(basis: &PlaneWaveSet, split: &WaveVectorSplit, u: &[CVec3]) -> Vec<CVec3> {
    basis
        .modes()
        .iter()
        .zip(u)
        .map(|(mode, c)| mat_vec(&curl_matrix(&gamma_of(split, *mode)), c))
        .collect()
}
