//! Declarative run configuration: a versioned TOML file drives every
//! subcommand. See README for the documented schema.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mesh::{DomainKind, DomainSpec};
use crate::ns::SolverSettings;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub domain: DomainKind,
    pub physics: Physics,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub uniqueness: UniquenessConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Physics {
    pub alpha: f64,
    #[serde(default)]
    pub phi: Option<f64>,
    #[serde(default)]
    pub phi_list: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Discretization {
    pub resolution: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization { resolution: 6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_newton: usize,
    pub picard_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_abs: 1e-10,
            tol_rel: 1e-12,
            max_newton: 25,
            picard_iters: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputConfig {
    pub directory: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayConfig {
    pub stations_from: f64,
    pub stations_to: f64,
    pub stations_step: f64,
    /// Re-run at doubled truncation length and record the rate agreement.
    #[serde(default)]
    pub compare_double_truncation: bool,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            stations_from: 3.0,
            stations_to: 4.5,
            stations_step: 0.25,
            compare_double_truncation: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniquenessConfig {
    pub starts: usize,
}

impl Default for UniquenessConfig {
    fn default() -> Self {
        UniquenessConfig { starts: 3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub sigma_prime: [f64; 2],
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            sigma_prime: [0.25, 0.75],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct VerifyConfig {
    /// Self-test switch: corrupt the wall-normal trace of the computed
    /// velocity before the diagnostics run, which must then fail.
    #[serde(default)]
    pub inject_broken_normal: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(RunConfig, String)> {
        let raw = std::fs::read(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let text = String::from_utf8(raw.clone())
            .map_err(|_| Error::Config("config file is not UTF-8".into()))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{e}")))?;
        cfg.validate()?;
        let mut hasher = Sha256::new();
        hasher.update(&raw);
        let hash = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect::<String>();
        Ok((cfg, hash))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != 1 {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected 1)",
                self.schema_version
            )));
        }
        if !(self.physics.alpha > 0.0) {
            return Err(Error::Config("physics.alpha must be positive".into()));
        }
        if self.physics.phi.is_none() && self.physics.phi_list.is_none() {
            return Err(Error::Config("set physics.phi or physics.phi_list".into()));
        }
        if let Some(list) = &self.physics.phi_list {
            if list.is_empty() {
                return Err(Error::Config("physics.phi_list must not be empty".into()));
            }
        }
        if self.discretization.resolution < 2 {
            return Err(Error::Config("discretization.resolution must be >= 2".into()));
        }
        if !(self.solver.tol_abs > 0.0) || !(self.solver.tol_rel > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        let spec = self.domain_spec();
        spec.validate().map_err(|e| Error::Config(format!("{e}")))?;
        let [l, r] = self.profile.sigma_prime;
        if !(l < r) {
            return Err(Error::Config("profile.sigma_prime must be an interval".into()));
        }
        Ok(())
    }

    pub fn domain_spec(&self) -> DomainSpec {
        DomainSpec {
            kind: self.domain.clone(),
            alpha: self.physics.alpha,
        }
    }

    /// Fluxes to run: the scalar phi, or the list.
    pub fn fluxes(&self) -> Vec<f64> {
        match (&self.physics.phi, &self.physics.phi_list) {
            (_, Some(list)) => list.clone(),
            (Some(phi), None) => vec![*phi],
            (None, None) => vec![],
        }
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            tol_abs: self.solver.tol_abs,
            tol_rel: self.solver.tol_rel,
            max_iters: self.solver.max_newton,
            picard_iters: self.solver.picard_iters,
        }
    }

    pub fn decay_stations(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut s = self.decay.stations_from;
        while s <= self.decay.stations_to + 1e-12 {
            out.push(s);
            s += self.decay.stations_step;
        }
        out
    }
}
