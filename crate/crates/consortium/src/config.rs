//! Scenario and parameter files.
//!
//! Both are flat TOML key-value text. A parameter file may list any subset
//! of the keys `k_v, k_s, rho_max, phi_max, q_min, gamma, mu_max, beta,
//! s_in, d_max`; missing keys fall back to the built-in defaults. Scenario
//! files add the horizon, mesh, initial condition, solver options and the
//! random seed, so a report is reproducible bit for bit from its scenario.

use crate::equilibria::functional_equilibrium;
use crate::error::{Error, Result};
use crate::model::{ModelParams, StateVector, X_INIT};
use crate::sim::IntegrationMethod;
use crate::socp;
use std::path::Path;

impl ModelParams {
    /// Parses a parameter file; missing keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let params: ModelParams =
            toml::from_str(text).map_err(|e| Error::Config(format!("parameter file: {e}")))?;
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }
}

/// Initial condition: a named preset or an explicit five-vector.
///
/// `"x_init"` is the experimental startup state; `"x_star"` is the
/// coexistence equilibrium at the current static optimum.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
pub enum X0Spec {
    Preset(String),
    Explicit([f64; 5]),
}

impl Default for X0Spec {
    fn default() -> Self {
        X0Spec::Preset("x_init".into())
    }
}

impl X0Spec {
    /// Parses a preset name or five comma-separated values.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        if !trimmed.contains(',') && trimmed.parse::<f64>().is_err() {
            // a bare name: preset validity is checked at resolution
            return Ok(X0Spec::Preset(trimmed.to_string()));
        }
        let values: Vec<f64> = trimmed
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad x0 component {v:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        let arr: [f64; 5] = values
            .try_into()
            .map_err(|v: Vec<f64>| Error::Config(format!("x0 needs 5 values, got {}", v.len())))?;
        Ok(X0Spec::Explicit(arr))
    }

    /// Resolves to a concrete state. The `x_star` preset solves the static
    /// problem first and takes the coexistence equilibrium at its optimum.
    pub fn resolve(&self, params: &ModelParams) -> Result<StateVector> {
        match self {
            X0Spec::Preset(name) if name == "x_init" => Ok(X_INIT),
            X0Spec::Preset(name) if name == "x_star" => {
                let opt = socp::coordinate_ascent(params, 0.5, 0.2)?;
                functional_equilibrium(opt.alpha_bar, opt.d_bar, params)?.ok_or_else(|| {
                    Error::Infeasible("no coexistence equilibrium at the static optimum".into())
                })
            }
            X0Spec::Preset(name) => Err(Error::Config(format!(
                "unknown x0 preset {name:?}; use x_init, x_star or 5 explicit values"
            ))),
            X0Spec::Explicit(arr) => {
                let x = StateVector::from_array(*arr);
                x.validate(params)?;
                Ok(x)
            }
        }
    }
}

/// Static-problem options.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SocpOptions {
    /// Ascent start.
    pub alpha0: f64,
    pub d0: f64,
    /// Contour grid resolution.
    pub grid_alpha: usize,
    pub grid_d: usize,
}

impl Default for SocpOptions {
    fn default() -> Self {
        SocpOptions {
            alpha0: 0.5,
            d0: 0.2,
            grid_alpha: 60,
            grid_d: 60,
        }
    }
}

/// Dynamic-problem options.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DocpOptions {
    /// Number of ascent starts (the first is the warm start).
    pub starts: usize,
    /// Use the static optimum as the first start.
    pub warm_start: bool,
    /// Ascent iteration cap.
    pub max_iterations: usize,
}

impl Default for DocpOptions {
    fn default() -> Self {
        DocpOptions {
            starts: 5,
            warm_start: true,
            max_iterations: 5000,
        }
    }
}

/// Verification options.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PmpOptions {
    /// Singular band, relative to the peak switching-function magnitude.
    pub eps_singular_rel: f64,
}

impl Default for PmpOptions {
    fn default() -> Self {
        PmpOptions {
            eps_singular_rel: crate::pmp::EPS_SINGULAR_REL,
        }
    }
}

/// One reproducible run configuration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    /// Seed of the multi-start sampler.
    pub seed: u64,
    /// Horizon (days).
    pub t_f: f64,
    /// Mesh size.
    pub n_steps: usize,
    pub x0: X0Spec,
    /// Node decimation of trajectory exports.
    pub stride: usize,
    pub method: IntegrationMethod,
    pub params: ModelParams,
    pub socp: SocpOptions,
    pub docp: DocpOptions,
    pub pmp: PmpOptions,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            seed: 7_081_962,
            t_f: 20.0,
            n_steps: 7000,
            x0: X0Spec::default(),
            stride: 1,
            method: IntegrationMethod::GaussLegendre2,
            params: ModelParams::default(),
            socp: SocpOptions::default(),
            docp: DocpOptions::default(),
            pmp: PmpOptions::default(),
        }
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| Error::Config(format!("scenario file: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("scenario encode: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.t_f > 0.0) || self.n_steps == 0 {
            return Err(Error::Config(format!(
                "need t_f > 0 and n_steps >= 1, got {} and {}",
                self.t_f, self.n_steps
            )));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be >= 1".into()));
        }
        if self.docp.starts == 0 {
            return Err(Error::Config("docp.starts must be >= 1".into()));
        }
        Ok(())
    }
}
