//! Run configuration read from a TOML file.
//!
//! ```toml
//! [model]
//! kind = "rods"          # homogeneous | rods | fcc
//! eps = 13.0
//! air_fraction = 0.82
//!
//! [basis]
//! order = 2
//! grid = 64
//!
//! [omega]
//! min_over_2pi = 0.02
//! max_over_2pi = 0.6
//! count = 60
//!
//! [solver]
//! method = "arnoldi"
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Every other key has a default; see the field documentation below.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arnoldi::ARNOLDI_SEED;
use crate::lattice::Vec3;
use crate::materials::{min_grid, Coating, LorentzParams, PermittivityModel};
use crate::path::{PathSpec, TauPolicy};
use crate::quadratic::{EtaMethod, QuadraticOptions, DEFAULT_GRID};
use crate::sweep::{omega_grid, SweepOptions};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Homogeneous,
    Rods,
    Fcc,
}

/// Coating permittivity of the FCC model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoatingSpec {
    Value(f64),
    /// `"lorentz"` for the dispersive coating, `"core"` to copy the core value.
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Homogeneous permittivity, or the rod permittivity.
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_air")]
    pub air_fraction: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_core")]
    pub eps_core: f64,
    #[serde(default = "default_coating")]
    pub coating: CoatingSpec,
}

fn default_eps() -> f64 {
    13.0
}
fn default_air() -> f64 {
    0.82
}
fn default_delta() -> f64 {
    0.9
}
fn default_core() -> f64 {
    1.592 * 1.592
}
fn default_coating() -> CoatingSpec {
    CoatingSpec::Named("lorentz".into())
}

impl ModelConfig {
    pub fn build(&self) -> Result<PermittivityModel, ConfigError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!("model.{name} must be positive, got {v}")))
            }
        };
        match self.kind {
            ModelKind::Homogeneous => {
                positive("eps", self.eps)?;
                Ok(PermittivityModel::homogeneous(self.eps))
            }
            ModelKind::Rods => {
                positive("eps", self.eps)?;
                if !(self.air_fraction > 0.0 && self.air_fraction < 1.0) {
                    return Err(ConfigError::Invalid(format!(
                        "model.air_fraction must lie in (0, 1), got {}",
                        self.air_fraction
                    )));
                }
                Ok(PermittivityModel::rods_with_air_fraction(self.eps, self.air_fraction))
            }
            ModelKind::Fcc => {
                positive("delta", self.delta)?;
                positive("eps_core", self.eps_core)?;
                if self.delta > 1.0 {
                    return Err(ConfigError::Invalid("model.delta must not exceed 1".into()));
                }
                let coating = match &self.coating {
                    CoatingSpec::Value(v) => {
                        positive("coating", *v)?;
                        Coating::Constant(Complex64::new(*v, 0.0))
                    }
                    CoatingSpec::Named(s) if s == "lorentz" => Coating::Lorentz(LorentzParams::coated_sphere_coating()),
                    CoatingSpec::Named(s) if s == "core" => Coating::Constant(Complex64::new(self.eps_core, 0.0)),
                    CoatingSpec::Named(s) => {
                        return Err(ConfigError::Invalid(format!(
                            "model.coating must be a number, \"lorentz\" or \"core\", got {s:?}"
                        )))
                    }
                };
                Ok(PermittivityModel::FccCoatedSpheres {
                    delta: self.delta,
                    eps_core: Complex64::new(self.eps_core, 0.0),
                    coating,
                    eps_background: Complex64::new(1.0, 0.0),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    #[serde(default = "default_order")]
    pub order: usize,
    /// Quadrature points per axis for the `1/ε` coefficients.
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_order() -> usize {
    2
}
fn default_grid() -> usize {
    DEFAULT_GRID
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            order: default_order(),
            grid: default_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    /// `k` samples per segment for `bands-standard`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Segments swept by `bands-quadratic` (0 = Γ-X, 1 = X-M, 2 = M-R).
    #[serde(default = "default_segments")]
    pub segments: Vec<usize>,
    /// Bands per `k` for `bands-standard`.
    #[serde(default = "default_nbands")]
    pub nbands: usize,
    #[serde(default = "default_path_margin")]
    pub margin: f64,
}

fn default_samples() -> usize {
    20
}
fn default_segments() -> Vec<usize> {
    vec![0, 1, 2]
}
fn default_nbands() -> usize {
    8
}
fn default_path_margin() -> f64 {
    1e-6
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            segments: default_segments(),
            nbands: default_nbands(),
            margin: default_path_margin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaConfig {
    #[serde(default = "default_omin")]
    pub min_over_2pi: f64,
    #[serde(default = "default_omax")]
    pub max_over_2pi: f64,
    #[serde(default = "default_ocount")]
    pub count: usize,
    /// Explicit grid in `ω/2π`; overrides the range when present.
    #[serde(default)]
    pub values_over_2pi: Option<Vec<f64>>,
}

fn default_omin() -> f64 {
    0.02
}
fn default_omax() -> f64 {
    0.6
}
fn default_ocount() -> usize {
    60
}

impl Default for OmegaConfig {
    fn default() -> Self {
        Self {
            min_over_2pi: default_omin(),
            max_over_2pi: default_omax(),
            count: default_ocount(),
            values_over_2pi: None,
        }
    }
}

impl OmegaConfig {
    pub fn grid(&self) -> Vec<f64> {
        match &self.values_over_2pi {
            Some(v) => v.iter().map(|x| 2.0 * PI * x).collect(),
            None => omega_grid(self.min_over_2pi, self.max_over_2pi, self.count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_method")]
    pub method: EtaMethod,
    /// Number of `η` per solve; 0 keeps all (dense only).
    #[serde(default = "default_nev")]
    pub nev: usize,
    #[serde(default)]
    pub shift_re: f64,
    #[serde(default = "default_shift_im")]
    pub shift_im: f64,
    /// Centre the shift on each segment window.
    #[serde(default = "default_true")]
    pub recenter_shift: bool,
    #[serde(default = "default_m")]
    pub m_weight: f64,
    #[serde(default = "default_im_tol")]
    pub im_tol: f64,
    #[serde(default = "default_diag_tol")]
    pub diag_tol: f64,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default = "default_mu_cutoff")]
    pub mu_cutoff: f64,
    #[serde(default = "default_subspace")]
    pub subspace: usize,
    #[serde(default = "default_arnoldi_tol")]
    pub arnoldi_tol: f64,
    #[serde(default = "default_restarts")]
    pub max_restarts: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_method() -> EtaMethod {
    EtaMethod::Arnoldi
}
fn default_nev() -> usize {
    24
}
fn default_shift_im() -> f64 {
    0.05
}
fn default_true() -> bool {
    true
}
fn default_m() -> f64 {
    1.0
}
fn default_im_tol() -> f64 {
    1e-6
}
fn default_diag_tol() -> f64 {
    1e-8
}
fn default_residual_tol() -> f64 {
    1e-8
}
fn default_mu_cutoff() -> f64 {
    QuadraticOptions::default().mu_cutoff
}
fn default_subspace() -> usize {
    64
}
fn default_arnoldi_tol() -> f64 {
    1e-12
}
fn default_restarts() -> usize {
    500
}
fn default_seed() -> u64 {
    ARNOLDI_SEED
}

impl Default for SolverConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauConfig {
    /// `auto` (warn and proceed when inadmissible), `strict` or `fixed`.
    #[serde(default = "default_policy")]
    pub policy: String,
    #[serde(default)]
    pub value: Option<f64>,
}

fn default_policy() -> String {
    "auto".into()
}

impl Default for TauConfig {
    fn default() -> Self {
        Self {
            policy: default_policy(),
            value: None,
        }
    }
}

impl TauConfig {
    pub fn policy(&self) -> Result<TauPolicy, ConfigError> {
        match (self.policy.as_str(), self.value) {
            ("auto", _) => Ok(TauPolicy::Auto),
            ("strict", _) => Ok(TauPolicy::Strict),
            ("fixed", Some(tau)) if tau.abs() <= PI => Ok(TauPolicy::Fixed { tau }),
            ("fixed", _) => Err(ConfigError::Invalid("tau.policy = \"fixed\" needs tau.value in [-pi, pi]".into())),
            (other, _) => Err(ConfigError::Invalid(format!("unknown tau.policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    #[serde(default = "default_kref")]
    pub k_ref: Vec3,
    #[serde(default = "default_wref")]
    pub omega_ref_over_2pi: f64,
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    #[serde(default)]
    pub segment: usize,
}

fn default_kref() -> Vec3 {
    [PI / 2.0, 0.0, 0.0]
}
fn default_wref() -> f64 {
    0.14492297
}
fn default_orders() -> Vec<usize> {
    vec![1, 2, 3]
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        Self {
            k_ref: default_kref(),
            omega_ref_over_2pi: default_wref(),
            orders: default_orders(),
            segment: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelConfig,
    #[serde(default)]
    pub basis: BasisConfig,
    #[serde(default)]
    pub path: PathConfig,
    #[serde(default)]
    pub omega: OmegaConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub tau: TauConfig,
    #[serde(default)]
    pub converge: ConvergeConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.model.build()?;
        self.tau.policy()?;
        let need = min_grid(self.basis.order);
        if self.basis.grid < need {
            return Err(ConfigError::Invalid(format!(
                "basis.grid = {} is below the minimum {need} for order {}",
                self.basis.grid, self.basis.order
            )));
        }
        let need = min_grid(self.converge.orders.iter().copied().max().unwrap_or(0));
        if self.basis.grid < need {
            return Err(ConfigError::Invalid(format!(
                "basis.grid = {} is below the minimum {need} for the convergence orders",
                self.basis.grid
            )));
        }
        if self.path.segments.iter().any(|&s| s > 2) || self.converge.segment > 2 {
            return Err(ConfigError::Invalid("segment indices must be 0, 1 or 2".into()));
        }
        let grid = self.omega.grid();
        if grid.is_empty() || grid.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(ConfigError::Invalid("omega grid must be non-empty and positive".into()));
        }
        if self.solver.nev == 0 && self.solver.method == EtaMethod::Arnoldi {
            return Err(ConfigError::Invalid("solver.nev = 0 is only valid with method = \"dense\"".into()));
        }
        if self.solver.method == EtaMethod::Arnoldi && self.solver.subspace <= self.solver.nev {
            return Err(ConfigError::Invalid("solver.subspace must exceed solver.nev".into()));
        }
        if self.solver.m_weight.is_nan() || self.solver.m_weight <= 0.0 {
            return Err(ConfigError::Invalid("solver.m_weight must be positive".into()));
        }
        if self.path.samples == 0 || self.path.nbands == 0 {
            return Err(ConfigError::Invalid("path.samples and path.nbands must be positive".into()));
        }
        Ok(())
    }

    pub fn model(&self) -> PermittivityModel {
        self.model.build().expect("validated")
    }

    pub fn tau_policy(&self) -> TauPolicy {
        self.tau.policy().expect("validated")
    }

    pub fn path_spec(&self) -> PathSpec {
        PathSpec::gamma_x_m_r(self.path.samples)
    }

    pub fn quadratic_options(&self) -> QuadraticOptions {
        let s = &self.solver;
        QuadraticOptions {
            nev: s.nev,
            method: s.method,
            shift: Complex64::new(s.shift_re, s.shift_im),
            m_weight: s.m_weight,
            im_tol: s.im_tol,
            diag_tol: s.diag_tol,
            residual_tol: s.residual_tol,
            mu_cutoff: s.mu_cutoff,
            subspace: s.subspace,
            arnoldi_tol: s.arnoldi_tol,
            max_restarts: s.max_restarts,
            seed: s.seed,
            grid: self.basis.grid,
            ..QuadraticOptions::default()
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            tau_policy: self.tau_policy(),
            path_margin: self.path.margin,
            recenter_shift: self.solver.recenter_shift,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = Config::from_toml("[model]\nkind = \"rods\"\n").unwrap();
        assert_eq!(cfg.basis.order, 2);
        assert_eq!(cfg.omega.grid().len(), 60);
        assert_eq!(cfg.solver.method, EtaMethod::Arnoldi);
        assert_eq!(cfg.tau_policy(), TauPolicy::Auto);
        assert!(matches!(cfg.model(), PermittivityModel::RodScaffold { .. }));
    }

    #[test]
    fn fcc_coating_variants() {
        let lorentz = Config::from_toml("[model]\nkind = \"fcc\"\n").unwrap().model();
        assert!(!lorentz.is_frequency_independent());
        let core = Config::from_toml("[model]\nkind = \"fcc\"\ncoating = \"core\"\n").unwrap().model();
        assert_eq!(core.region_values(1.0)[1], core.region_values(1.0)[2]);
        let seven = Config::from_toml("[model]\nkind = \"fcc\"\ncoating = 7.0\n").unwrap().model();
        assert_eq!(seven.region_values(0.0)[2], Complex64::new(7.0, 0.0));
        assert!(Config::from_toml("[model]\nkind = \"fcc\"\ncoating = \"drude\"\n").is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Config::from_toml("").is_err());
        assert!(Config::from_toml("[model]\nkind = \"rods\"\nbogus = 1\n").is_err());
        assert!(Config::from_toml("[model]\nkind = \"rods\"\n[basis]\norder = 3\ngrid = 8\n").is_err());
        assert!(Config::from_toml("[model]\nkind = \"rods\"\n[tau]\npolicy = \"fixed\"\n").is_err());
        assert!(Config::from_toml("[model]\nkind = \"rods\"\n[solver]\nnev = 0\n").is_err());
        assert!(Config::from_toml("[model]\nkind = \"rods\"\nair_fraction = 1.5\n").is_err());
    }

    #[test]
    fn explicit_omega_list_and_round_trip() {
        let text = "[model]\nkind = \"homogeneous\"\neps = 1.0\n[omega]\nvalues_over_2pi = [0.125]\n[tau]\npolicy = \"fixed\"\nvalue = 1.0\n";
        let cfg = Config::from_toml(text).unwrap();
        assert_eq!(cfg.omega.grid(), vec![0.25 * PI]);
        assert_eq!(cfg.tau_policy(), TauPolicy::Fixed { tau: 1.0 });
        let echoed = toml::to_string(&cfg).unwrap();
        assert_eq!(Config::from_toml(&echoed).unwrap(), cfg);
    }
}
