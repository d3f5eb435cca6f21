//! Coercivity check for a regularization split at a fixed frequency.

use std::f64::consts::PI;

use serde::Serialize;

use crate::lattice::{Vec3, WaveVectorSplit};
use crate::materials::PermittivityModel;

/// Points per axis of the deterministic sampling grid (16³ = 4096 points).
const SAMPLES_PER_AXIS: usize = 16;

/// Which closed-form threshold the split falls under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AdmissibilityCase {
    /// `α₀ = 0`: threshold `min{(2π − |τ|)², τ²}`.
    A,
    /// `α₀` with one component `±π`: threshold `π²`.
    B,
    /// `α₀` with two components `±π`: threshold `2π²`.
    C,
    General,
}

impl AdmissibilityCase {
    pub fn label(&self) -> &'static str {
        match self {
            Self::A => "a",
            Self::B => "b",
            Self::C => "c",
            Self::General => "general",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub ok: bool,
    pub margin: f64,
    pub inf_inv_eps: f64,
    pub min_gamma_sqr: f64,
    pub limiting_mode: [i32; 3],
    pub case_label: AdmissibilityCase,
}

/// `min_{I ∈ ℤ³} |β + I|²` with the minimizing index, computed axis by axis.
pub fn min_gamma_sqr(beta: &Vec3) -> (f64, [i32; 3]) {
    let mut total = 0.0;
    let mut mode = [0; 3];
    for j in 0..3 {
        let n = -(beta[j] / (2.0 * PI)).round();
        let d = beta[j] + 2.0 * PI * n;
        total += d * d;
        mode[j] = n as i32;
    }
    (total, mode)
}

/// `inf_x |Re ε⁻¹(x, ω)|` over a 16³ midpoint grid together with every
/// region value of the model, so thin layers are never missed.
pub fn inf_abs_re_inv_eps(model: &PermittivityModel, omega: f64) -> f64 {
    let mut inf = model
        .region_values(omega)
        .iter()
        .map(|e| e.inv().re.abs())
        .fold(f64::INFINITY, f64::min);
    if model.region_count() > 1 {
        let values = model.region_values(omega);
        let g = SAMPLES_PER_AXIS;
        let coord = |j: usize| (j as f64 + 0.5) / g as f64;
        for a in 0..g {
            for b in 0..g {
                for c in 0..g {
                    let r = model.region_at(&[coord(a), coord(b), coord(c)]);
                    inf = inf.min(values[r].inv().re.abs());
                }
            }
        }
    }
    inf
}

fn classify(split: &WaveVectorSplit) -> AdmissibilityCase {
    let a0 = split.alpha0();
    let is_pi = |v: f64| (v.abs() - PI).abs() <= 1e-12;
    let is_zero = |v: f64| v.abs() <= 1e-12;
    if a0.iter().any(|v| !is_pi(*v) && !is_zero(*v)) {
        return AdmissibilityCase::General;
    }
    match a0.iter().filter(|v| is_pi(**v)).count() {
        0 => AdmissibilityCase::A,
        1 => AdmissibilityCase::B,
        2 => AdmissibilityCase::C,
        _ => AdmissibilityCase::General,
    }
}

pub fn check_admissibility(
    split: &WaveVectorSplit,
    omega: f64,
    model: &PermittivityModel,
) -> AdmissibilityReport {
    let (min_g, limiting_mode) = min_gamma_sqr(&split.beta());
    let inf = inf_abs_re_inv_eps(model, omega);
    let margin = inf * min_g - omega * omega;
    AdmissibilityReport {
        ok: margin > 0.0,
        margin,
        inf_inv_eps: inf,
        min_gamma_sqr: min_g,
        limiting_mode,
        case_label: classify(split),
    }
}
