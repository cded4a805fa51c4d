//! Run configuration. Every field has a default, so an empty file is a valid config.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cvsheet::dtn::KrylovOptions;
use cvsheet::eos::Polytropic;
use cvsheet::evolution::StepOptions;
use cvsheet::paradiff::PLCutoffs;
use cvsheet::spectral::{Mode, SlabGrid, SpectralField, Torus};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for every randomized suite.
    pub seed: u64,
    /// Worker cap for sweeps; 0 means one per core.
    pub jobs: usize,
    pub grid: GridConfig,
    pub eos: EosConfig,
    pub cutoffs: PLCutoffs,
    pub krylov: KrylovOptions,
    pub stability: StabilityConfig,
    pub dtn: DtnConfig,
    pub symbols: SymbolsConfig,
    pub evolve: EvolveConfig,
    pub energies: EnergiesConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            jobs: 0,
            grid: GridConfig::default(),
            eos: EosConfig::default(),
            cutoffs: PLCutoffs::default(),
            krylov: KrylovOptions::default(),
            stability: StabilityConfig::default(),
            dtn: DtnConfig::default(),
            symbols: SymbolsConfig::default(),
            evolve: EvolveConfig::default(),
            energies: EnergiesConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

/// Slab `T^{d-1} x (-H, H)`: `n` Fourier nodes per axis, `nv` Chebyshev nodes per phase.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub nv: usize,
    pub half_height: f64,
    /// Node clustering toward the interface, in `[0, 12]`.
    pub stretch: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { dim: 3, n: 16, nv: 32, half_height: 20.0, stretch: 3.0 }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<SlabGrid> {
        Ok(SlabGrid::new(self.dim, self.n, self.nv, self.half_height, self.stretch)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EosConfig {
    pub gamma: f64,
    pub cv: f64,
    /// Mach parameter.
    pub eps: f64,
    pub rho_floor: f64,
}

impl Default for EosConfig {
    fn default() -> Self {
        Self { gamma: 1.4, cv: 1.0, eps: 0.1, rho_floor: 1e-8 }
    }
}

impl EosConfig {
    pub fn build(&self) -> Result<Polytropic> {
        Ok(Polytropic::new(self.gamma, self.cv, self.eps, self.rho_floor)?)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    Cos,
    Sin,
}

/// One Fourier mode `amplitude * cos|sin(k . x)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub kind: Trig,
    pub amplitude: f64,
    pub k: [i64; 2],
}

impl ModeSpec {
    pub fn cos(amplitude: f64, k: [i64; 2]) -> Self {
        Self { kind: Trig::Cos, amplitude, k }
    }

    pub fn sin(amplitude: f64, k: [i64; 2]) -> Self {
        Self { kind: Trig::Sin, amplitude, k }
    }
}

pub fn field(torus: &Torus, modes: &[ModeSpec]) -> Result<SpectralField> {
    let modes: Vec<Mode> = modes
        .iter()
        .map(|m| match m.kind {
            Trig::Cos => Mode::cos(m.amplitude, m.k),
            Trig::Sin => Mode::sin(m.amplitude, m.k),
        })
        .collect();
    Ok(SpectralField::from_modes(torus, &modes)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub delta0: f64,
    /// Accept `delta0` up to 1 instead of 1/8.
    pub allow_wide_delta0: bool,
    /// Trace CSV, relative to the config file.
    pub trace: Option<PathBuf>,
    /// Directions in the angular sweep of the ellipticity form.
    pub angles: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self { delta0: 0.1, allow_wide_delta0: false, trace: None, angles: 720 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtnConfig {
    /// Geometry container (JSON); overrides `grid` and `psi` when set.
    pub geometry: Option<PathBuf>,
    pub psi: Vec<ModeSpec>,
    pub f: Vec<ModeSpec>,
    /// Tolerance of the flat-oracle comparison.
    pub oracle_tol: f64,
    pub symmetry_tol: f64,
}

impl Default for DtnConfig {
    fn default() -> Self {
        Self {
            geometry: None,
            psi: vec![],
            f: vec![ModeSpec::cos(1.0, [3, 0])],
            oracle_tol: 1e-6,
            symmetry_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolsConfig {
    pub psi: Vec<ModeSpec>,
    /// Random `(x, xi)` samples for the pointwise residual.
    pub samples: usize,
    pub tol: f64,
    /// `|xi|` and direction count of the exported tables.
    pub radius: f64,
    pub directions: usize,
}

impl Default for SymbolsConfig {
    fn default() -> Self {
        Self { psi: vec![ModeSpec::sin(0.2, [1, 0])], samples: 1000, tol: 1e-10, radius: 8.0, directions: 4 }
    }
}

/// Constant interface traces of one phase.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub rho: f64,
    #[serde(default)]
    pub v: [f64; 2],
    #[serde(default)]
    pub b: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub dim: usize,
    pub n: usize,
    pub sigma: f64,
    /// Extra surface tensions run alongside `sigma` for the frequency-scaling fit.
    pub sigma_sweep: Vec<f64>,
    pub upper: PhaseConfig,
    pub lower: PhaseConfig,
    /// Background interface the symbols are frozen about; empty means flat.
    pub background: Vec<ModeSpec>,
    pub initial: Vec<ModeSpec>,
    /// Oscillation periods (or e-folding times) to integrate.
    pub periods: f64,
    /// Fixed step; when absent, a fraction of the stability limit and the period.
    pub dt: Option<f64>,
    pub step: StepOptions,
    pub frequency_tol: f64,
    pub growth_tol: f64,
    pub drift_tol: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        let step = StepOptions { mode: [4, 0], record_every: 1, ..Default::default() };
        Self {
            dim: 2,
            n: 32,
            sigma: 0.1,
            sigma_sweep: vec![],
            upper: PhaseConfig { rho: 1.0, v: [0.0; 2], b: [0.0; 2] },
            lower: PhaseConfig { rho: 1.0, v: [0.0; 2], b: [0.0; 2] },
            background: vec![],
            initial: vec![ModeSpec::cos(1e-3, [4, 0])],
            periods: 10.0,
            dt: None,
            step,
            frequency_tol: 0.01,
            growth_tol: 0.05,
            drift_tol: 0.01,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergiesConfig {
    pub sigma: f64,
    pub base_order: usize,
    pub eps_sweep: Vec<f64>,
    /// Time levels and spacing of the manufactured history.
    pub levels: usize,
    pub dt: f64,
    pub n: usize,
    pub nv: usize,
    pub slope_tol: f64,
    /// Random stable (psi, coefficient) pairs for the positivity check of `E~`.
    pub positivity_samples: usize,
}

impl Default for EnergiesConfig {
    fn default() -> Self {
        Self {
            sigma: 0.1,
            base_order: 2,
            eps_sweep: vec![0.05, 0.1, 0.2, 0.4],
            levels: 7,
            dt: 0.05,
            n: 16,
            nv: 16,
            slope_tol: 0.1,
            positivity_samples: 200,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Randomized symmetrizer samples.
    pub mu_samples: usize,
    /// Base horizontal resolution of the refinement ladders.
    pub n: usize,
    pub nv: usize,
    pub min_slope: f64,
    pub identity_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { mu_samples: 500, n: 16, nv: 96, min_slope: 1.8, identity_tol: 1e-6 }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<(Self, Option<PathBuf>)> {
        let Some(path) = path else {
            return Ok((Self::default(), None));
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf);
        Ok((cfg, base))
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        self.eos.build()?;
        self.krylov.validate()?;
        if self.energies.eps_sweep.is_empty() {
            bail!("energies.eps_sweep must not be empty");
        }
        if self.energies.eps_sweep.iter().any(|e| !(*e > 0.0)) {
            bail!("energies.eps_sweep entries must be positive");
        }
        if self.evolve.sigma < 0.0 || self.evolve.sigma_sweep.iter().any(|s| *s < 0.0) {
            bail!("evolve.sigma must be non-negative");
        }
        if self.evolve.initial.is_empty() {
            bail!("evolve.initial must name at least one mode");
        }
        if !(self.evolve.periods > 0.0) {
            bail!("evolve.periods must be positive");
        }
        if !(self.energies.dt > 0.0) || self.energies.levels < 2 * self.energies.base_order + 1 {
            bail!("energies needs dt > 0 and at least 2 * base_order + 1 levels");
        }
        Ok(())
    }

    /// SHA-256 of the effective configuration in canonical TOML form.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert_eq!(cfg.hash(), RunConfig::default().hash());
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sede = 3").is_err());
        let cfg: RunConfig = toml::from_str("[evolve]\nsigma = 0.3\n[evolve.upper]\nrho = 2.0\n").unwrap();
        assert_eq!(cfg.evolve.upper.rho, 2.0);
        assert_ne!(cfg.hash(), RunConfig::default().hash());
    }
}
