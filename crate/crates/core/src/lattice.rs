//! Truncated plane-wave basis on the unit cell and the per-mode algebra of the
//! shifted operators `curl_β`, `div_β` and `∇_β`.
//!
//! A periodic field is written `w(x) = Σ_I exp(i I·x) C_I` with
//! `I = 2π(i₁, i₂, i₃)`. On each mode the shifted operators act through
//! `γ^I = β + I`: `curl_β` multiplies by `N_I = i[γ^I]×`, `∇_β` by `iγ^I`, and
//! `div_β` by `iγ^I·`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

pub type Vec3 = [f64; 3];
pub type CVec3 = [Complex64; 3];
pub type CMat3 = [[Complex64; 3]; 3];

/// Vectors shorter than this are treated as zero.
pub const ZERO_VECTOR_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("vector {0:?} is (numerically) zero")]
    ZeroVector(Vec3),
    #[error("direction {0:?} is not a unit vector")]
    NotUnit(Vec3),
    #[error("regularization vector {0:?} lies outside the first Brillouin zone")]
    OutsideBrillouinZone(Vec3),
}

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(s: f64, a: &Vec3) -> Vec3 {
    [s * a[0], s * a[1], s * a[2]]
}

/// Squared Hermitian norm of a complex 3-vector.
pub fn cnorm_sqr(a: &CVec3) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Bilinear (unconjugated) product of a real and a complex vector.
pub fn rdot(a: &Vec3, c: &CVec3) -> Complex64 {
    c[0] * a[0] + c[1] * a[1] + c[2] * a[2]
}

pub fn mat_vec(m: &CMat3, v: &CVec3) -> CVec3 {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for (r, row) in m.iter().enumerate() {
        out[r] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
    }
    out
}

pub fn mat_mul(a: &CMat3, b: &CMat3) -> CMat3 {
    let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn adjoint(a: &CMat3) -> CMat3 {
    let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

/// Truncated Fourier index set `{ 2π(i₁,i₂,i₃) : |i_j| ≤ order }`.
///
/// Modes are stored lexicographically in `(i₁, i₂, i₃)` so matrix layouts do
/// not depend on hashing or insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveSet {
    order: usize,
    modes: Vec<[i32; 3]>,
    mode_index: HashMap<[i32; 3], usize>,
}

impl PlaneWaveSet {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Integer labels `(i₁, i₂, i₃)` of every mode, in layout order.
    pub fn modes(&self) -> &[[i32; 3]] {
        &self.modes
    }

    pub fn position(&self, mode: [i32; 3]) -> Option<usize> {
        self.mode_index.get(&mode).copied()
    }

    /// Position of the constant mode `I = 0`.
    pub fn zero_position(&self) -> usize {
        self.mode_index[&[0, 0, 0]]
    }

    /// Reciprocal vector `I = 2π(i₁, i₂, i₃)` of the mode at `pos`.
    pub fn vector(&self, pos: usize) -> Vec3 {
        mode_vector(self.modes[pos])
    }
}

pub fn mode_vector(mode: [i32; 3]) -> Vec3 {
    [
        2.0 * PI * mode[0] as f64,
        2.0 * PI * mode[1] as f64,
        2.0 * PI * mode[2] as f64,
    ]
}

pub fn build_index_set(order: usize) -> PlaneWaveSet {
    let n = order as i32;
    let mut modes = Vec::with_capacity((2 * order + 1).pow(3));
    for i1 in -n..=n {
        for i2 in -n..=n {
            for i3 in -n..=n {
                modes.push([i1, i2, i3]);
            }
        }
    }
    let mode_index = modes.iter().enumerate().map(|(p, m)| (*m, p)).collect();
    PlaneWaveSet {
        order,
        modes,
        mode_index,
    }
}

/// Wave vector split `k = β + η α̂` with `β = α₀ + τ α̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveVectorSplit {
    alpha0: Vec3,
    alpha_hat: Vec3,
    tau: f64,
    beta: Vec3,
}

impl WaveVectorSplit {
    pub fn new(alpha0: Vec3, alpha_hat: Vec3, tau: f64) -> Result<Self, LatticeError> {
        if (norm(&alpha_hat) - 1.0).abs() > 1e-12 {
            return Err(LatticeError::NotUnit(alpha_hat));
        }
        let beta = add(&alpha0, &scale(tau, &alpha_hat));
        if beta.iter().any(|b| b.abs() > PI + 1e-12) {
            return Err(LatticeError::OutsideBrillouinZone(beta));
        }
        Ok(Self {
            alpha0,
            alpha_hat,
            tau,
            beta,
        })
    }

    pub fn alpha0(&self) -> Vec3 {
        self.alpha0
    }

    pub fn alpha_hat(&self) -> Vec3 {
        self.alpha_hat
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn beta(&self) -> Vec3 {
        self.beta
    }

    /// `λ = η + τ`.
    pub fn lambda(&self, eta: Complex64) -> Complex64 {
        eta + self.tau
    }

    /// Complex wave vector `k = α₀ + λ α̂` for a computed `η`.
    pub fn wave_vector(&self, eta: Complex64) -> CVec3 {
        let lambda = self.lambda(eta);
        [0, 1, 2].map(|j| lambda * self.alpha_hat[j] + self.alpha0[j])
    }

    /// Same direction and origin with a different `τ`.
    pub fn with_tau(&self, tau: f64) -> Result<Self, LatticeError> {
        Self::new(self.alpha0, self.alpha_hat, tau)
    }
}

pub fn gamma_of(split: &WaveVectorSplit, mode: [i32; 3]) -> Vec3 {
    add(&split.beta, &mode_vector(mode))
}

/// `N = i[γ]×`, so that `N C = iγ × C`.
pub fn curl_matrix(gamma: &Vec3) -> CMat3 {
    let i = Complex64::new(0.0, 1.0);
    let [g1, g2, g3] = *gamma;
    [
        [i * 0.0, -i * g3, i * g2],
        [i * g3, i * 0.0, -i * g1],
        [-i * g2, i * g1, i * 0.0],
    ]
}

/// Two real unit vectors spanning the plane orthogonal to `gamma`.
///
/// The first is Gram–Schmidt applied to the coordinate axis least aligned
/// with `gamma` (lowest index on ties); the second completes a right-handed
/// frame `(e₁, e₂, γ̂)`.
pub fn polarization_basis(gamma: &Vec3) -> Result<(Vec3, Vec3), LatticeError> {
    let len = norm(gamma);
    if len <= ZERO_VECTOR_TOL {
        return Err(LatticeError::ZeroVector(*gamma));
    }
    let unit = scale(1.0 / len, gamma);
    let axis = (0..3)
        .min_by(|&a, &b| unit[a].abs().total_cmp(&unit[b].abs()))
        .unwrap_or(0);
    let mut e1 = [0.0; 3];
    e1[axis] = 1.0;
    let proj = dot(&e1, &unit);
    let e1 = add(&e1, &scale(-proj, &unit));
    let e1 = scale(1.0 / norm(&e1), &e1);
    let e2 = cross(&unit, &e1);
    Ok((e1, e2))
}

/// Per-mode Helmholtz splitting `C = C_⊥ + (γ·C/|γ|²) γ`.
///
/// Returns `(transverse, gradient)`; the transverse part satisfies
/// `γ·C_⊥ = 0` on every mode.
#[allow(clippy::type_complexity)]
pub fn helmholtz_split(
    coeffs: &[CVec3],
    basis: &PlaneWaveSet,
    split: &WaveVectorSplit,
) -> Result<(Vec<CVec3>, Vec<CVec3>), LatticeError> {
    let mut transverse = Vec::with_capacity(coeffs.len());
    let mut gradient = Vec::with_capacity(coeffs.len());
    for (c, mode) in coeffs.iter().zip(basis.modes()) {
        let gamma = gamma_of(split, *mode);
        let g2 = dot(&gamma, &gamma);
        if g2.sqrt() <= ZERO_VECTOR_TOL {
            return Err(LatticeError::ZeroVector(gamma));
        }
        let coef = rdot(&gamma, c) / g2;
        let grad = [0, 1, 2].map(|j| coef * gamma[j]);
        transverse.push([0, 1, 2].map(|j| c[j] - grad[j]));
        gradient.push(grad);
    }
    Ok((transverse, gradient))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn split_beta(beta: Vec3) -> WaveVectorSplit {
        WaveVectorSplit::new(beta, [1.0, 0.0, 0.0], 0.0).unwrap()
    }

    #[test]
    fn index_set_counts() {
        let s0 = build_index_set(0);
        assert_eq!(s0.modes(), &[[0, 0, 0]]);
        let s1 = build_index_set(1);
        assert_eq!(s1.len(), 27);
        assert_eq!(s1.modes()[0], [-1, -1, -1]);
        assert_eq!(s1.vector(0), [-2.0 * PI; 3]);
        assert_eq!(build_index_set(2).len(), 125);
        assert_eq!(s1.modes()[s1.zero_position()], [0, 0, 0]);
    }

    #[test]
    fn index_set_is_lexicographic_and_stable() {
        let a = build_index_set(2);
        let b = build_index_set(2);
        assert_eq!(a.modes(), b.modes());
        assert!(a.modes().windows(2).all(|w| w[0] < w[1]));
        for (p, m) in a.modes().iter().enumerate() {
            assert_eq!(a.position(*m), Some(p));
        }
    }

    #[test]
    fn gamma_shifts() {
        let s = split_beta([PI, 0.0, 0.0]);
        assert_eq!(gamma_of(&s, [0, 0, 0]), [PI, 0.0, 0.0]);
        assert_eq!(gamma_of(&s, [-1, 0, 0]), [-PI, 0.0, 0.0]);
        let s = split_beta([PI, PI, 0.0]);
        assert_eq!(gamma_of(&s, [0, -1, 0]), [PI, -PI, 0.0]);
    }

    #[test]
    fn split_validation() {
        assert!(matches!(
            WaveVectorSplit::new([0.0; 3], [1.0, 1.0, 0.0], 0.0),
            Err(LatticeError::NotUnit(_))
        ));
        assert!(matches!(
            WaveVectorSplit::new([PI, 0.0, 0.0], [1.0, 0.0, 0.0], 0.5),
            Err(LatticeError::OutsideBrillouinZone(_))
        ));
        let s = WaveVectorSplit::new([0.0; 3], [1.0, 0.0, 0.0], PI).unwrap();
        assert_eq!(s.beta(), [PI, 0.0, 0.0]);
        let k = s.wave_vector(c(-PI / 2.0, 0.0));
        assert_abs_diff_eq!(k[0].re, PI / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn curl_matrix_examples() {
        let n = curl_matrix(&[PI, 0.0, 0.0]);
        assert_eq!(n[1][2], c(0.0, -PI));
        assert_eq!(n[2][1], c(0.0, PI));
        assert_eq!(n[0], [c(0.0, 0.0); 3]);
        let nn = mat_mul(&adjoint(&n), &n);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j && i > 0 { PI * PI } else { 0.0 };
                assert_abs_diff_eq!(nn[i][j].re, want, epsilon = 1e-13);
                assert_abs_diff_eq!(nn[i][j].im, 0.0, epsilon = 1e-13);
            }
        }
        let z = curl_matrix(&[0.0; 3]);
        assert!(z.iter().flatten().all(|e| e.norm() == 0.0));

        let g = [1.0, 2.0, 3.0];
        let cv = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let nc = mat_vec(&curl_matrix(&g), &cv);
        let total = cnorm_sqr(&nc) + rdot(&g, &cv).norm_sqr();
        assert_abs_diff_eq!(total, 14.0, epsilon = 1e-12);
    }

    #[test]
    fn curl_matrix_annihilates_gamma() {
        let g = [0.3, -1.7, 2.2];
        let n = curl_matrix(&g);
        let gv = g.map(|x| c(x, 0.0));
        assert!(mat_vec(&n, &gv).iter().all(|z| z.norm() < 1e-15));
        assert_eq!(n, adjoint(&n));
    }

    #[test]
    fn polarization_examples() {
        let (e1, e2) = polarization_basis(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(e1, [1.0, 0.0, 0.0]);
        assert_eq!(e2, [0.0, 1.0, 0.0]);
        let g = [1.0, 0.0, 0.0];
        let (e1, e2) = polarization_basis(&g).unwrap();
        assert_abs_diff_eq!(dot(&e1, &g), 0.0);
        assert_abs_diff_eq!(dot(&e2, &g), 0.0);
        assert_abs_diff_eq!(norm(&e1), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(norm(&e2), 1.0, epsilon = 1e-15);
        let (e1, e2) = polarization_basis(&[1.0, 1.0, 1.0]).unwrap();
        assert!(dot(&e1, &e2).abs() <= 1e-14);
        assert!(matches!(
            polarization_basis(&[0.0, 1e-13, 0.0]),
            Err(LatticeError::ZeroVector(_))
        ));
    }

    #[test]
    fn helmholtz_examples() {
        let basis = build_index_set(0);
        let split = split_beta([PI, 0.0, 0.0]);
        let (t, g) = helmholtz_split(&[[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]], &basis, &split)
            .unwrap();
        assert_abs_diff_eq!(g[0][0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[0][1].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t[0][0].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t[0][1].re, 1.0, epsilon = 1e-15);

        let (t, _) = helmholtz_split(&[[c(2.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)]], &basis, &split)
            .unwrap();
        assert!(t[0].iter().all(|z| z.norm() < 1e-15));
        let (_, g) = helmholtz_split(&[[c(0.0, 0.0), c(0.0, 3.0), c(1.0, 0.0)]], &basis, &split)
            .unwrap();
        assert!(g[0].iter().all(|z| z.norm() < 1e-15));

        let zero = WaveVectorSplit::new([0.0; 3], [1.0, 0.0, 0.0], 0.0).unwrap();
        assert!(matches!(
            helmholtz_split(&[[c(1.0, 0.0); 3]], &basis, &zero),
            Err(LatticeError::ZeroVector(_))
        ));
    }

    fn cvec3() -> impl Strategy<Value = CVec3> {
        prop::array::uniform6(-5.0f64..5.0)
            .prop_map(|a| [c(a[0], a[1]), c(a[2], a[3]), c(a[4], a[5])])
    }

    fn beta() -> impl Strategy<Value = Vec3> {
        prop::array::uniform3(-PI..PI).prop_filter("nonzero", |b| norm(b) > 1e-3)
    }

    proptest! {
        #[test]
        fn curl_identity_holds(b in beta(), mode in prop::array::uniform3(-3i32..=3), cv in cvec3()) {
            let g = add(&b, &mode_vector(mode));
            let n = curl_matrix(&g);
            let nc = mat_vec(&n, &cv);
            let lhs = cnorm_sqr(&nc) + rdot(&g, &cv).norm_sqr();
            let rhs = dot(&g, &g) * cnorm_sqr(&cv);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));

            let nnc = mat_vec(&n, &nc);
            let lhs2 = cnorm_sqr(&nnc);
            let rhs2 = dot(&g, &g) * cnorm_sqr(&nc);
            prop_assert!((lhs2 - rhs2).abs() <= 1e-12 * rhs2.max(1e-300));
        }

        #[test]
        fn helmholtz_is_idempotent(b in beta(), cs in prop::collection::vec(cvec3(), 27)) {
            let basis = build_index_set(1);
            let split = split_beta(b);
            let (t, g) = helmholtz_split(&cs, &basis, &split).unwrap();
            let (t2, g2) = helmholtz_split(&t, &basis, &split).unwrap();
            for p in 0..cs.len() {
                for j in 0..3 {
                    prop_assert!((t[p][j] + g[p][j] - cs[p][j]).norm() <= 1e-12);
                    prop_assert!((t2[p][j] - t[p][j]).norm() <= 1e-12);
                    prop_assert!(g2[p][j].norm() <= 1e-12);
                }
                let gamma = gamma_of(&split, basis.modes()[p]);
                prop_assert!(rdot(&gamma, &t[p]).norm() <= 1e-10);
            }
        }

        #[test]
        fn polarization_is_orthonormal(g in prop::array::uniform3(-10.0f64..10.0)) {
            prop_assume!(norm(&g) > 1e-6);
            let (e1, e2) = polarization_basis(&g).unwrap();
            let u = scale(1.0 / norm(&g), &g);
            prop_assert!(dot(&e1, &e2).abs() < 1e-14);
            prop_assert!(dot(&e1, &u).abs() < 1e-14);
            prop_assert!(dot(&e2, &u).abs() < 1e-14);
            prop_assert!((norm(&e1) - 1.0).abs() < 1e-14);
            prop_assert!((norm(&e2) - 1.0).abs() < 1e-14);
        }
    }
}
