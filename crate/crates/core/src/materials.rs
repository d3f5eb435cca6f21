//! Permittivity models on the unit cell and Fourier coefficients of `1/ε`.
//!
//! Every model is piecewise constant over a handful of regions (air/rod,
//! background/core/coating). Only the region values depend on frequency, so
//! the Fourier coefficients of each region's indicator function are computed
//! once by quadrature and `1/ε(·, ω)` is assembled from them at each `ω`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lattice::Vec3;

/// Seed of the Monte-Carlo volume-fraction estimator.
pub const AIR_FRACTION_SEED: u64 = 0x00c0_ffee;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("quadrature grid {grid} is too coarse for convolution order {order} (need at least {needed})")]
    GridTooCoarse {
        grid: usize,
        order: usize,
        needed: usize,
    },
}

/// Coefficients of the dispersive coating
/// `ε(ν) = ε₁ + Λ² (ν₀² − ν²) / ((ν₀² − ν²)² + ν² γ₀²)`, `ν = ω/2π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzParams {
    pub eps1: f64,
    /// Resonance, in units of `ω/2π`.
    pub omega0: f64,
    pub gamma0: f64,
    pub lambda: f64,
}

impl LorentzParams {
    /// Coating used for the coated-sphere crystal: `ε₁=7, ω₀=0.489, γ₀=0.3, Λ=√1.9`.
    pub fn coated_sphere_coating() -> Self {
        Self {
            eps1: 7.0,
            omega0: 0.489,
            gamma0: 0.3,
            lambda: 1.9f64.sqrt(),
        }
    }
}

pub fn lorentz_epsilon(p: &LorentzParams, omega: f64) -> Complex64 {
    let nu = omega / (2.0 * PI);
    let detune = p.omega0 * p.omega0 - nu * nu;
    let denom = detune * detune + nu * nu * p.gamma0 * p.gamma0;
    Complex64::new(p.eps1 + p.lambda * p.lambda * detune / denom, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coating {
    Constant(Complex64),
    Lorentz(LorentzParams),
}

impl Coating {
    pub fn epsilon(&self, omega: f64) -> Complex64 {
        match self {
            Coating::Constant(eps) => *eps,
            Coating::Lorentz(p) => lorentz_epsilon(p, omega),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PermittivityModel {
    Homogeneous {
        eps: Complex64,
    },
    /// Three orthogonal square rods of side `rod_width` along the cell edges,
    /// surrounded by air.
    RodScaffold {
        eps_rod: Complex64,
        rod_width: f64,
    },
    /// Coated spheres on the FCC sites of the cubic cell (corners and face
    /// centres). Each sphere has radius `r_cp = delta / (2√2)`, a core of
    /// radius `0.9 r_cp` and a coating shell out to `r_cp`.
    FccCoatedSpheres {
        delta: f64,
        eps_core: Complex64,
        coating: Coating,
        eps_background: Complex64,
    },
}

const FCC_SITES: [Vec3; 4] = [
    [0.0, 0.0, 0.0],
    [0.5, 0.5, 0.0],
    [0.5, 0.0, 0.5],
    [0.0, 0.5, 0.5],
];

const CORE_FRACTION: f64 = 0.9;

fn dist_to_lattice(v: f64) -> f64 {
    let f = v - v.floor();
    f.min(1.0 - f)
}

impl PermittivityModel {
    pub fn homogeneous(eps: f64) -> Self {
        Self::Homogeneous {
            eps: Complex64::new(eps, 0.0),
        }
    }

    /// Rod scaffold whose air volume fraction is `air_fraction`.
    pub fn rods_with_air_fraction(eps_rod: f64, air_fraction: f64) -> Self {
        Self::RodScaffold {
            eps_rod: Complex64::new(eps_rod, 0.0),
            rod_width: rod_width_for_fill(air_fraction),
        }
    }

    /// Coated FCC spheres with the dispersive coating, `ε_core = 1.592²`, air outside.
    pub fn fcc_lorentz(delta: f64) -> Self {
        Self::FccCoatedSpheres {
            delta,
            eps_core: Complex64::new(1.592 * 1.592, 0.0),
            coating: Coating::Lorentz(LorentzParams::coated_sphere_coating()),
            eps_background: Complex64::new(1.0, 0.0),
        }
    }

    /// Same geometry with the coating permittivity set to `eps`.
    pub fn with_coating(&self, coating: Coating) -> Self {
        match *self {
            Self::FccCoatedSpheres {
                delta,
                eps_core,
                eps_background,
                ..
            } => Self::FccCoatedSpheres {
                delta,
                eps_core,
                coating,
                eps_background,
            },
            other => other,
        }
    }

    pub fn is_frequency_independent(&self) -> bool {
        !matches!(
            self,
            Self::FccCoatedSpheres {
                coating: Coating::Lorentz(_),
                ..
            }
        )
    }

    /// Frequency-independent copy with every dispersive value frozen at `omega`.
    pub fn frozen_at(&self, omega: f64) -> Self {
        match self {
            Self::FccCoatedSpheres { coating, .. } => {
                self.with_coating(Coating::Constant(coating.epsilon(omega)))
            }
            other => *other,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Homogeneous { eps } => format!("homogeneous(eps={eps})"),
            Self::RodScaffold { eps_rod, rod_width } => {
                format!("rods(eps={eps_rod}, width={rod_width})")
            }
            Self::FccCoatedSpheres {
                delta,
                eps_core,
                coating,
                eps_background,
            } => {
                let c = match coating {
                    Coating::Constant(e) => format!("{e}"),
                    Coating::Lorentz(_) => "lorentz".to_string(),
                };
                format!("fcc(delta={delta}, core={eps_core}, coating={c}, background={eps_background})")
            }
        }
    }

    pub fn region_count(&self) -> usize {
        match self {
            Self::Homogeneous { .. } => 1,
            Self::RodScaffold { .. } => 2,
            Self::FccCoatedSpheres { .. } => 3,
        }
    }

    /// Region label of the point `x` (wrapped into the cell). Region 0 is
    /// the background (air) for the structured models.
    pub fn region_at(&self, x: &Vec3) -> usize {
        match *self {
            Self::Homogeneous { .. } => 0,
            Self::RodScaffold { rod_width, .. } => {
                let half = 0.5 * rod_width;
                let d = x.map(dist_to_lattice);
                let inside = (d[1] < half && d[2] < half)
                    || (d[0] < half && d[2] < half)
                    || (d[0] < half && d[1] < half);
                usize::from(inside)
            }
            Self::FccCoatedSpheres { delta, .. } => {
                let r_cp = sphere_radius(delta);
                let r_core = CORE_FRACTION * r_cp;
                let mut best = f64::INFINITY;
                for site in FCC_SITES {
                    let d2: f64 = (0..3)
                        .map(|j| {
                            let mut d = x[j] - site[j];
                            d -= d.round();
                            d * d
                        })
                        .sum();
                    best = best.min(d2);
                }
                let r = best.sqrt();
                if r < r_core {
                    1
                } else if r <= r_cp {
                    2
                } else {
                    0
                }
            }
        }
    }

    /// Permittivity of every region at `omega`, indexed like [`Self::region_at`].
    pub fn region_values(&self, omega: f64) -> Vec<Complex64> {
        match *self {
            Self::Homogeneous { eps } => vec![eps],
            Self::RodScaffold { eps_rod, .. } => vec![Complex64::new(1.0, 0.0), eps_rod],
            Self::FccCoatedSpheres {
                eps_core,
                coating,
                eps_background,
                ..
            } => vec![eps_background, eps_core, coating.epsilon(omega)],
        }
    }
}

/// Outer radius of the coated spheres, `δ a / (2√2)` with `a = 1`.
pub fn sphere_radius(delta: f64) -> f64 {
    delta / (2.0 * 2f64.sqrt())
}

pub fn eval_epsilon(model: &PermittivityModel, x: &Vec3, omega: f64) -> Complex64 {
    let region = model.region_at(x);
    match *model {
        PermittivityModel::Homogeneous { eps } => eps,
        PermittivityModel::RodScaffold { eps_rod, .. } => {
            if region == 1 {
                eps_rod
            } else {
                Complex64::new(1.0, 0.0)
            }
        }
        PermittivityModel::FccCoatedSpheres {
            eps_core,
            coating,
            eps_background,
            ..
        } => match region {
            1 => eps_core,
            2 => coating.epsilon(omega),
            _ => eps_background,
        },
    }
}

/// Monte-Carlo estimate of the volume fraction occupied by the background.
///
/// For a homogeneous medium this is 1 when `ε = 1` and 0 otherwise.
pub fn air_fraction(model: &PermittivityModel, samples: usize) -> f64 {
    if let PermittivityModel::Homogeneous { eps } = model {
        return if *eps == Complex64::new(1.0, 0.0) { 1.0 } else { 0.0 };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(AIR_FRACTION_SEED);
    let hits = (0..samples)
        .filter(|_| {
            let x = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
            model.region_at(&x) == 0
        })
        .count();
    hits as f64 / samples as f64
}

/// Rod width `t` whose scaffold leaves an air fraction `target_air`,
/// i.e. the root of `3t² − 2t³ = 1 − target_air` on `[0, 1]`.
pub fn rod_width_for_fill(target_air: f64) -> f64 {
    let want = 1.0 - target_air;
    if want <= 0.0 {
        return 0.0;
    }
    if want >= 1.0 {
        return 1.0;
    }
    let fill = |t: f64| 3.0 * t * t - 2.0 * t * t * t;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if fill(mid) < want {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Fourier coefficients `κ_D` of `1/ε(·, ω)` for `|d_j| ≤ 2·order`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvEpsilonTable {
    order: usize,
    omega: f64,
    coeffs: Vec<Complex64>,
}

impl InvEpsilonTable {
    fn span(&self) -> i32 {
        2 * self.order as i32
    }

    /// Largest basis order this table can serve.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Coefficient for the difference index `d = I − I'` (integer labels).
    pub fn get(&self, d: [i32; 3]) -> Option<Complex64> {
        let s = self.span();
        if d.iter().any(|v| v.abs() > s) {
            return None;
        }
        let w = (2 * s + 1) as usize;
        let idx = |v: i32| (v + s) as usize;
        Some(self.coeffs[(idx(d[0]) * w + idx(d[1])) * w + idx(d[2])])
    }

    fn homogeneous(eps: Complex64, order: usize, omega: f64) -> Self {
        let w = 4 * order + 1;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); w * w * w];
        let centre = (2 * order * w + 2 * order) * w + 2 * order;
        coeffs[centre] = eps.inv();
        Self {
            order,
            omega,
            coeffs,
        }
    }
}

/// Fourier coefficients of every region indicator of a model, computed by
/// the midpoint rule on a `grid³` lattice of cell centres.
#[derive(Debug, Clone)]
pub struct RegionSpectra {
    order: usize,
    grid: usize,
    spectra: Vec<Vec<Complex64>>,
}

pub fn min_grid(order: usize) -> usize {
    2 * (2 * order) + 2
}

impl RegionSpectra {
    pub fn new(model: &PermittivityModel, order: usize, grid: usize) -> Result<Self, MaterialError> {
        let needed = min_grid(order);
        if grid < needed {
            return Err(MaterialError::GridTooCoarse {
                grid,
                order,
                needed,
            });
        }
        let regions = model.region_count();
        if regions == 1 {
            return Ok(Self {
                order,
                grid,
                spectra: Vec::new(),
            });
        }
        let g = grid;
        let coord = |j: usize| (j as f64 + 0.5) / g as f64;
        let mut labels = vec![0u8; g * g * g];
        for jx in 0..g {
            for jy in 0..g {
                for jz in 0..g {
                    let x = [coord(jx), coord(jy), coord(jz)];
                    labels[(jx * g + jy) * g + jz] = model.region_at(&x) as u8;
                }
            }
        }
        let spectra = (0..regions)
            .map(|r| {
                let indicator: Vec<f64> = labels
                    .iter()
                    .map(|&l| if l as usize == r { 1.0 } else { 0.0 })
                    .collect();
                separable_dft(&indicator, g, 2 * order)
            })
            .collect();
        Ok(Self {
            order,
            grid,
            spectra,
        })
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `κ(ω) = Σ_r ε_r(ω)⁻¹ F_r`.
    pub fn table(&self, model: &PermittivityModel, omega: f64) -> InvEpsilonTable {
        let values = model.region_values(omega);
        if values.len() == 1 || self.spectra.is_empty() {
            return InvEpsilonTable::homogeneous(values[0], self.order, omega);
        }
        let inv: Vec<Complex64> = values.iter().map(|e| e.inv()).collect();
        let len = self.spectra[0].len();
        let coeffs = (0..len)
            .map(|i| {
                self.spectra
                    .iter()
                    .zip(&inv)
                    .fold(Complex64::new(0.0, 0.0), |acc, (f, w)| acc + f[i] * w)
            })
            .collect();
        InvEpsilonTable {
            order: self.order,
            omega,
            coeffs,
        }
    }
}

/// `F_d = g⁻³ Σ_j f(x_j) exp(−2πi d·x_j)` for `|d_k| ≤ span`, evaluated one
/// axis at a time.
fn separable_dft(samples: &[f64], g: usize, span: usize) -> Vec<Complex64> {
    let w = 2 * span + 1;
    let phase: Vec<Vec<Complex64>> = (0..w)
        .map(|di| {
            let d = di as f64 - span as f64;
            (0..g)
                .map(|j| {
                    let theta = -2.0 * PI * d * (j as f64 + 0.5) / g as f64;
                    Complex64::new(theta.cos(), theta.sin())
                })
                .collect()
        })
        .collect();

    // x axis: t1[dx][jy][jz]
    let mut t1 = vec![Complex64::new(0.0, 0.0); w * g * g];
    for dx in 0..w {
        for jx in 0..g {
            let ph = phase[dx][jx];
            let src = &samples[jx * g * g..(jx + 1) * g * g];
            let dst = &mut t1[dx * g * g..(dx + 1) * g * g];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += ph * *s;
            }
        }
    }
    // y axis: t2[dx][dy][jz]
    let mut t2 = vec![Complex64::new(0.0, 0.0); w * w * g];
    for dx in 0..w {
        for dy in 0..w {
            for jy in 0..g {
                let ph = phase[dy][jy];
                let src = &t1[(dx * g + jy) * g..(dx * g + jy + 1) * g];
                let dst = &mut t2[(dx * w + dy) * g..(dx * w + dy + 1) * g];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += ph * *s;
                }
            }
        }
    }
    // z axis
    let norm = 1.0 / (g * g * g) as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); w * w * w];
    for dx in 0..w {
        for dy in 0..w {
            let src = &t2[(dx * w + dy) * g..(dx * w + dy + 1) * g];
            for dz in 0..w {
                let acc = src
                    .iter()
                    .zip(&phase[dz])
                    .fold(Complex64::new(0.0, 0.0), |a, (s, p)| a + s * p);
                out[(dx * w + dy) * w + dz] = acc * norm;
            }
        }
    }
    out
}

pub fn inv_epsilon_fourier(
    model: &PermittivityModel,
    omega: f64,
    order: usize,
    grid: usize,
) -> Result<InvEpsilonTable, MaterialError> {
    Ok(RegionSpectra::new(model, order, grid)?.table(model, omega))
}
