//! Restarted Arnoldi iteration for the largest-magnitude eigenvalues of a
//! linear operator given only through its action.
//!
//! The basis `V` and projected matrix satisfy `Op V_j = V_j H_j + v_j h_jᵀ`.
//! At each restart the wanted Ritz vectors of `H` are orthonormalized and the
//! relation is compressed onto them, so the next expansion continues from an
//! invariant subspace of the projected matrix.

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Seed of the start vector.
pub const ARNOLDI_SEED: u64 = 0x5eed_a7c0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArnoldiError {
    #[error("Arnoldi converged only {0} of the requested eigenvalues")]
    NoConvergence(usize),
    #[error("invalid subspace: need subspace > nev >= 1 and subspace <= dim")]
    BadSubspace,
    #[error("dense eigensolve of the projected matrix failed")]
    ProjectedEigen,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArnoldiOptions {
    pub subspace: usize,
    pub nev: usize,
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
    /// Ritz values below this fraction of the largest are reported as negligible.
    pub negligible: f64,
}

impl ArnoldiOptions {
    pub fn new(nev: usize) -> Self {
        Self {
            subspace: (2 * nev + 20).max(30),
            nev,
            tol: 1e-12,
            max_restarts: 500,
            seed: ARNOLDI_SEED,
            negligible: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RitzPair {
    pub value: Complex64,
    pub vector: Vec<Complex64>,
    /// Residual estimate `‖Op x − θ x‖` for unit `x`.
    pub residual: f64,
    /// Value is negligible relative to the dominant one (null direction).
    pub negligible: bool,
}

#[derive(Debug, Clone)]
pub struct ArnoldiResult {
    pub pairs: Vec<RitzPair>,
    pub restarts: usize,
    pub applications: usize,
    /// The Krylov space became invariant before reaching the subspace size.
    pub breakdown: bool,
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn vnorm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Orthogonalizes `w` against `basis` (two MGS passes); returns coefficients.
fn orthogonalize(basis: &[Vec<Complex64>], w: &mut [Complex64]) -> Vec<Complex64> {
    let mut coef = vec![zero(); basis.len()];
    for _ in 0..2 {
        for (c, v) in coef.iter_mut().zip(basis) {
            let h = inner(v, w);
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= h * vi;
            }
            *c += h;
        }
    }
    coef
}

struct RitzSet {
    values: Vec<Complex64>,
    vectors: Vec<Vec<Complex64>>,
    residuals: Vec<f64>,
}

/// Ritz pairs of the leading `j × j` block of `h`, sorted by decreasing `|θ|`;
/// residuals use row `j`.
fn ritz(h: &Mat<Complex64>, j: usize) -> Result<RitzSet, ArnoldiError> {
    let b = Mat::<Complex64>::from_fn(j, j, |r, c| h[(r, c)]);
    let evd = b.eigen().map_err(|_| ArnoldiError::ProjectedEigen)?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..j).collect();
    order.sort_by(|&a, &b| s[b].norm().total_cmp(&s[a].norm()).then(a.cmp(&b)));
    let mut values = Vec::with_capacity(j);
    let mut vectors = Vec::with_capacity(j);
    let mut residuals = Vec::with_capacity(j);
    for &i in &order {
        let mut y: Vec<Complex64> = (0..j).map(|r| u[(r, i)]).collect();
        let n = vnorm(&y);
        if n > 0.0 {
            y.iter_mut().for_each(|z| *z /= n);
        }
        let res: Complex64 = (0..j).map(|c| h[(j, c)] * y[c]).sum();
        values.push(s[i]);
        residuals.push(res.norm());
        vectors.push(y);
    }
    Ok(RitzSet {
        values,
        vectors,
        residuals,
    })
}

fn combine(v: &[Vec<Complex64>], y: &[Complex64]) -> Vec<Complex64> {
    let n = v[0].len();
    let mut out = vec![zero(); n];
    for (vi, yi) in v.iter().zip(y) {
        for (o, a) in out.iter_mut().zip(vi) {
            *o += a * yi;
        }
    }
    out
}

/// Largest-magnitude eigenpairs of `op` (dimension `dim`).
///
/// Pairs whose value is negligible relative to the dominant one are returned
/// with `negligible = true` and exempt from the convergence test. When the
/// Krylov space becomes invariant early, the available pairs are returned.
pub fn arnoldi<F>(mut op: F, dim: usize, opts: &ArnoldiOptions) -> Result<ArnoldiResult, ArnoldiError>
where
    F: FnMut(&[Complex64]) -> Vec<Complex64>,
{
    if opts.nev == 0 || opts.subspace <= opts.nev || dim == 0 {
        return Err(ArnoldiError::BadSubspace);
    }
    let p = opts.subspace.min(dim);
    let nev = opts.nev.min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let n0 = vnorm(&start);
    start.iter_mut().for_each(|z| *z /= n0);

    let mut basis: Vec<Vec<Complex64>> = vec![start];
    let mut h = Mat::<Complex64>::zeros(p + 1, p);
    let mut kept = 0usize;
    let mut applications = 0usize;
    let mut restarts = 0usize;
    let mut scale = 0.0f64;

    loop {
        let mut size = p;
        let mut breakdown = false;
        for j in kept..p {
            let mut w = op(&basis[j]);
            applications += 1;
            let wn = vnorm(&w);
            scale = scale.max(wn);
            let coef = orthogonalize(&basis, &mut w);
            for (i, c) in coef.iter().enumerate() {
                h[(i, j)] = *c;
            }
            let beta = vnorm(&w);
            if beta <= 1e-14 * scale.max(f64::MIN_POSITIVE) || j + 1 == dim {
                h[(j + 1, j)] = Complex64::new(0.0, 0.0);
                size = j + 1;
                breakdown = true;
                break;
            }
            h[(j + 1, j)] = Complex64::new(beta, 0.0);
            w.iter_mut().for_each(|z| *z /= beta);
            basis.push(w);
        }

        let set = ritz(&h, size)?;
        let top = set.values.first().map(|v| v.norm()).unwrap_or(0.0);
        let want = nev.min(size);
        let is_negligible = |i: usize| set.values[i].norm() <= opts.negligible * top;
        let converged = (0..want)
            .filter(|&i| {
                let tol_abs = if is_negligible(i) {
                    opts.tol * top
                } else {
                    opts.tol * set.values[i].norm()
                };
                set.residuals[i] <= tol_abs
            })
            .count();

        if converged == want || breakdown {
            let pairs = (0..want)
                .map(|i| RitzPair {
                    value: set.values[i],
                    vector: combine(&basis[..size], &set.vectors[i]),
                    residual: set.residuals[i],
                    negligible: is_negligible(i),
                })
                .collect();
            return Ok(ArnoldiResult {
                pairs,
                restarts,
                applications,
                breakdown,
            });
        }
        if restarts == opts.max_restarts {
            return Err(ArnoldiError::NoConvergence(converged));
        }
        restarts += 1;

        // keep the wanted Ritz vectors plus a buffer, orthonormalized
        let keep = (nev + (p - nev) / 2).min(p - 1).max(nev);
        let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(keep);
        for y in set.vectors.iter().take(keep) {
            let mut y = y.clone();
            orthogonalize(&q, &mut y);
            let n = vnorm(&y);
            if n > 1e-10 {
                y.iter_mut().for_each(|z| *z /= n);
                q.push(y);
            }
        }
        let k = q.len();
        let qm = Mat::<Complex64>::from_fn(p, k, |r, c| q[c][r]);
        let hp = Mat::<Complex64>::from_fn(p, p, |r, c| h[(r, c)]);
        let b = qm.adjoint() * (&hp * &qm);
        let row: Vec<Complex64> = (0..k).map(|c| (0..p).map(|r| h[(p, r)] * qm[(r, c)]).sum()).collect();
        let residual_vec = basis[p].clone();
        let mut new_basis: Vec<Vec<Complex64>> = q.iter().map(|y| combine(&basis[..p], y)).collect();
        new_basis.push(residual_vec);
        basis = new_basis;
        h = Mat::<Complex64>::zeros(p + 1, p);
        for r in 0..k {
            for c in 0..k {
                h[(r, c)] = b[(r, c)];
            }
        }
        for (c, v) in row.iter().enumerate() {
            h[(k, c)] = *v;
        }
        kept = k;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_op(d: Vec<f64>) -> impl FnMut(&[Complex64]) -> Vec<Complex64> {
        move |x| x.iter().zip(&d).map(|(a, b)| a * b).collect()
    }

    #[test]
    fn diagonal_spectrum() {
        let n = 200;
        let d: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        let mut opts = ArnoldiOptions::new(5);
        opts.subspace = 40;
        let res = arnoldi(diag_op(d), n, &opts).unwrap();
        for (i, p) in res.pairs.iter().enumerate() {
            let want = (n - i) as f64;
            assert!((p.value - want).norm() <= 1e-10 * want, "{} vs {want}", p.value);
            assert!(!p.negligible);
        }
    }

    #[test]
    fn rank_deficient_operator_flags_missing_values() {
        let n = 60;
        let d: Vec<f64> = (0..n).map(|i| if i < 3 { (i + 1) as f64 } else { 0.0 }).collect();
        let mut opts = ArnoldiOptions::new(6);
        opts.subspace = 20;
        let res = arnoldi(diag_op(d), n, &opts).unwrap();
        let live: Vec<_> = res.pairs.iter().filter(|p| !p.negligible).collect();
        assert_eq!(live.len(), 3);
        for (p, want) in live.iter().zip([3.0, 2.0, 1.0]) {
            assert!((p.value - want).norm() <= 1e-10);
        }
        assert!(res.pairs.len() <= 6);
    }

    #[test]
    fn nonnormal_matrix_matches_dense() {
        let n = 80;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Mat::<Complex64>::from_fn(n, n, |i, j| {
            let base = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if i == j {
                base + Complex64::new(i as f64 / 4.0, 0.0)
            } else {
                base * 0.3
            }
        });
        let dense = a.eigen().unwrap();
        let s = dense.S().column_vector();
        let mut vals: Vec<Complex64> = (0..n).map(|i| s[i]).collect();
        vals.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
        let op = |x: &[Complex64]| -> Vec<Complex64> {
            (0..n).map(|i| (0..n).map(|j| a[(i, j)] * x[j]).sum()).collect()
        };
        let res = arnoldi(op, n, &ArnoldiOptions::new(4)).unwrap();
        for p in &res.pairs {
            let best = vals.iter().map(|v| (v - p.value).norm()).fold(f64::INFINITY, f64::min);
            assert!(best <= 1e-8 * p.value.norm(), "{}", p.value);
        }
    }

    #[test]
    fn invalid_subspace_is_rejected() {
        let mut opts = ArnoldiOptions::new(10);
        opts.subspace = 10;
        assert_eq!(
            arnoldi(diag_op(vec![1.0; 50]), 50, &opts).unwrap_err(),
            ArnoldiError::BadSubspace
        );
    }
}
