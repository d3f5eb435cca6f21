//! Brillouin-zone path Γ → X → M → R and the choice of `τ` per segment.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admissibility::check_admissibility;
use crate::lattice::{LatticeError, Vec3, WaveVectorSplit};
use crate::materials::PermittivityModel;

/// Number of `τ` candidates scanned for a general `α₀`.
pub const TAU_SCAN: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("path parameter {0} outside [0, 3pi]")]
    OutOfRange(f64),
    #[error("no admissible tau at omega = {0}")]
    NoAdmissibleTau(f64),
    #[error("segment index {0} out of range")]
    NoSegment(usize),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// `k(α)`: `(α,0,0)` on `[0,π]`, `(π,α−π,0)` on `[π,2π]`, `(π,π,α−2π)` on `[2π,3π]`.
pub fn path_wavevector(alpha: f64) -> Result<Vec3, PathError> {
    if !(0.0..=3.0 * PI).contains(&alpha) {
        return Err(PathError::OutOfRange(alpha));
    }
    Ok(if alpha <= PI {
        [alpha, 0.0, 0.0]
    } else if alpha <= 2.0 * PI {
        [PI, alpha - PI, 0.0]
    } else {
        [PI, PI, alpha - 2.0 * PI]
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub alpha0: Vec3,
    pub alpha_hat: Vec3,
    /// Path parameter at the segment start.
    pub offset: f64,
    pub length: f64,
}

impl Segment {
    /// Wave vector at local parameter `λ`.
    pub fn point(&self, lambda: f64) -> Vec3 {
        [0, 1, 2].map(|j| self.alpha0[j] + lambda * self.alpha_hat[j])
    }

    pub fn split(&self, tau: f64) -> Result<WaveVectorSplit, LatticeError> {
        WaveVectorSplit::new(self.alpha0, self.alpha_hat, tau)
    }

    pub fn contains(&self, lambda: f64, margin: f64) -> bool {
        lambda >= -margin && lambda <= self.length + margin
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub segments: Vec<Segment>,
    /// Samples per segment for `k`-sweeps (the last segment also gets its end point).
    pub samples: usize,
}

impl PathSpec {
    pub fn gamma_x_m_r(samples: usize) -> Self {
        let seg = |name: &str, alpha0: Vec3, alpha_hat: Vec3, offset: f64| Segment {
            name: name.to_string(),
            alpha0,
            alpha_hat,
            offset,
            length: PI,
        };
        Self {
            segments: vec![
                seg("Gamma-X", [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 0.0),
                seg("X-M", [PI, 0.0, 0.0], [0.0, 1.0, 0.0], PI),
                seg("M-R", [PI, PI, 0.0], [0.0, 0.0, 1.0], 2.0 * PI),
            ],
            samples,
        }
    }

    pub fn segment(&self, index: usize) -> Result<&Segment, PathError> {
        self.segments.get(index).ok_or(PathError::NoSegment(index))
    }

    /// Sample parameters `α` with their segment index and local `λ`.
    pub fn samples(&self) -> Vec<(usize, f64, f64)> {
        let n = self.samples.max(1);
        let mut out = Vec::new();
        for (s, seg) in self.segments.iter().enumerate() {
            for i in 0..n {
                let lambda = seg.length * i as f64 / n as f64;
                out.push((s, seg.offset + lambda, lambda));
            }
        }
        if let Some(last) = self.segments.last() {
            out.push((self.segments.len() - 1, last.offset + last.length, last.length));
        }
        out
    }

    /// Segment index and local parameter for a global `α`.
    pub fn locate(&self, alpha: f64) -> Result<(usize, f64), PathError> {
        for (s, seg) in self.segments.iter().enumerate() {
            if alpha >= seg.offset && alpha <= seg.offset + seg.length {
                return Ok((s, alpha - seg.offset));
            }
        }
        Err(PathError::OutOfRange(alpha))
    }
}

fn is_zero(v: &Vec3) -> bool {
    v.iter().all(|x| x.abs() <= 1e-12)
}

fn is_corner(v: &Vec3) -> bool {
    let pis = v.iter().filter(|x| (x.abs() - PI).abs() <= 1e-12).count();
    let zeros = v.iter().filter(|x| x.abs() <= 1e-12).count();
    pis + zeros == 3 && (pis == 1 || pis == 2)
}

/// Preferred `τ` for `α₀` before any admissibility check: `π` at the origin,
/// `0` at the X and M corners, otherwise the best scanned margin.
fn candidate_tau(alpha0: &Vec3, alpha_hat: &Vec3, omega: f64, model: &PermittivityModel) -> Option<(f64, f64)> {
    let margin = |tau: f64| {
        WaveVectorSplit::new(*alpha0, *alpha_hat, tau)
            .ok()
            .map(|s| check_admissibility(&s, omega, model).margin)
    };
    if is_zero(alpha0) {
        return margin(PI).map(|m| (PI, m));
    }
    if is_corner(alpha0) {
        return margin(0.0).map(|m| (0.0, m));
    }
    (0..TAU_SCAN)
        .filter_map(|i| {
            let tau = -PI + 2.0 * PI * (i + 1) as f64 / TAU_SCAN as f64;
            margin(tau).map(|m| (tau, m))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

pub fn tau_select(alpha0: &Vec3, alpha_hat: &Vec3, omega: f64, model: &PermittivityModel) -> Result<f64, PathError> {
    match candidate_tau(alpha0, alpha_hat, omega, model) {
        Some((tau, m)) if m > 0.0 => Ok(tau),
        _ => Err(PathError::NoAdmissibleTau(omega)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TauPolicy {
    /// `tau_select`, failing when nothing is admissible.
    Strict,
    /// `tau_select`, falling back to the preferred `τ` with a warning.
    Auto,
    Fixed { tau: f64 },
}

/// `τ` under a policy; the flag reports an inadmissible fallback.
pub fn resolve_tau(
    policy: &TauPolicy,
    segment: &Segment,
    omega: f64,
    model: &PermittivityModel,
) -> Result<(f64, bool), PathError> {
    match policy {
        TauPolicy::Fixed { tau } => {
            let split = segment.split(*tau)?;
            Ok((*tau, !check_admissibility(&split, omega, model).ok))
        }
        TauPolicy::Strict => Ok((tau_select(&segment.alpha0, &segment.alpha_hat, omega, model)?, false)),
        TauPolicy::Auto => match candidate_tau(&segment.alpha0, &segment.alpha_hat, omega, model) {
            Some((tau, m)) => Ok((tau, m <= 0.0)),
            None => Err(PathError::NoAdmissibleTau(omega)),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn path_examples() {
        assert_eq!(path_wavevector(0.0).unwrap(), [0.0, 0.0, 0.0]);
        assert_eq!(path_wavevector(PI).unwrap(), [PI, 0.0, 0.0]);
        let k = path_wavevector(2.5 * PI).unwrap();
        assert_eq!(k[0], PI);
        assert_eq!(k[1], PI);
        assert!((k[2] - PI / 2.0).abs() < 1e-15);
        assert!(path_wavevector(-1e-9).is_err());
        assert!(path_wavevector(3.0 * PI + 1e-9).is_err());
    }

    #[test]
    fn continuity_at_corners() {
        assert_eq!(path_wavevector(PI).unwrap(), [PI, PI - PI, 0.0]);
        assert_eq!(path_wavevector(2.0 * PI).unwrap(), [PI, PI, 2.0 * PI - 2.0 * PI]);
        let path = PathSpec::gamma_x_m_r(4);
        for w in path.segments.windows(2) {
            assert_eq!(w[0].point(w[0].length), w[1].alpha0);
        }
    }

    #[test]
    fn segments_match_global_parametrization() {
        let path = PathSpec::gamma_x_m_r(5);
        for (s, alpha, lambda) in path.samples() {
            let k = path.segments[s].point(lambda);
            let want = path_wavevector(alpha).unwrap();
            for j in 0..3 {
                assert!((k[j] - want[j]).abs() < 1e-14);
            }
        }
        assert_eq!(path.samples().len(), 16);
    }

    #[test]
    fn tau_examples() {
        let air = PermittivityModel::homogeneous(1.0);
        assert_eq!(tau_select(&[0.0; 3], &[1.0, 0.0, 0.0], 1.0, &air).unwrap(), PI);
        assert_eq!(tau_select(&[PI, 0.0, 0.0], &[0.0, 1.0, 0.0], 3.0, &air).unwrap(), 0.0);
        assert_eq!(
            tau_select(&[0.0; 3], &[1.0, 0.0, 0.0], PI, &air),
            Err(PathError::NoAdmissibleTau(PI))
        );
    }

    #[test]
    fn general_origin_scans_for_best_margin() {
        let air = PermittivityModel::homogeneous(1.0);
        let a0 = [0.5, 0.2, 0.0];
        let tau = tau_select(&a0, &[0.0, 0.0, 1.0], 0.3, &air).unwrap();
        // best is the largest |β_z| reachable, τ = π
        assert_eq!(tau, PI);
    }

    #[test]
    fn auto_policy_falls_back() {
        let rods = PermittivityModel::rods_with_air_fraction(13.0, 0.82);
        let path = PathSpec::gamma_x_m_r(2);
        let seg = path.segment(1).unwrap();
        let (tau, fallback) = resolve_tau(&TauPolicy::Auto, seg, 2.0, &rods).unwrap();
        assert_eq!(tau, 0.0);
        assert!(fallback);
        assert!(resolve_tau(&TauPolicy::Strict, seg, 2.0, &rods).is_err());
        let (tau, fallback) = resolve_tau(&TauPolicy::Auto, seg, 0.5, &rods).unwrap();
        assert_eq!(tau, 0.0);
        assert!(!fallback);
    }

    proptest! {
        #[test]
        fn path_is_piecewise_linear_with_unit_speed(a in 0.0..(3.0 * PI - 1e-3)) {
            let k0 = path_wavevector(a).unwrap();
            let k1 = path_wavevector(a + 1e-3).unwrap();
            let d: f64 = (0..3).map(|j| (k1[j] - k0[j]).abs()).sum();
            prop_assert!((d - 1e-3).abs() < 1e-9);
        }
    }
}
