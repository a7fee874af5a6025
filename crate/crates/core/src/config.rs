//! Scenario files.
//!
//! ```toml
//! name = "ho_quadratic"
//!
//! [model]
//! kind = "harmonic_oscillator"   # or "hydrogen" (n, b, beta) or "custom" (levels, beta, rho3)
//! b = 1.0
//! beta = 0.3
//!
//! [nonlinearity]
//! power = 2                      # or coefficients = [c0, c1, c2, ...]
//!
//! [darboux]
//! gamma1 = [1.0, 0.0]            # [re, im]
//! gamma3 = [1.0, 0.0]
//!
//! [grid]
//! t_start = -20.0
//! t_end = 20.0
//! n_points = 201
//! ```
//!
//! Optional tables: `[field]`, `[checks]`, `[checks.rk4]`, `[tolerances]`,
//! `[tolerances.invariants]`, `[output]`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{c, C64};
use crate::models::{ModelSolution, ProfileModel};
use crate::nonlinearity::Nonlinearity;
use crate::seed::{build_equispaced_seed, build_inhomogeneous_seed};
use crate::verify::{InvariantTolerances, TimeGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: ModelConfig,
    #[serde(default)]
    pub nonlinearity: NonlinearityConfig,
    pub darboux: DarbouxConfig,
    pub grid: TimeGrid,
    #[serde(default)]
    pub field: Option<FieldSection>,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    HarmonicOscillator {
        b: f64,
        beta: f64,
        #[serde(default)]
        alpha: f64,
    },
    Hydrogen {
        n: u32,
        #[serde(default = "one")]
        b: f64,
        beta: f64,
    },
    Custom {
        levels: [f64; 3],
        beta: f64,
        rho3: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub power: Option<u32>,
    pub coefficients: Option<Vec<f64>>,
}

impl NonlinearityConfig {
    pub fn build(&self) -> Result<Nonlinearity> {
        match (self.power, &self.coefficients) {
            (Some(_), Some(_)) => Err(config_error(
                "nonlinearity",
                "give either power or coefficients, not both",
            )),
            (Some(0), None) => Err(config_error("nonlinearity.power", "power must be at least 1")),
            (Some(k), None) => Ok(Nonlinearity::power(k)),
            (None, Some(cs)) if cs.is_empty() || cs.iter().any(|x| !x.is_finite()) => Err(
                config_error("nonlinearity.coefficients", "need finite coefficients"),
            ),
            (None, Some(cs)) => Ok(Nonlinearity::polynomial(cs.clone())),
            (None, None) => Ok(Nonlinearity::quadratic()),
        }
    }

    /// k when f(x) = x^k.
    pub fn monomial_power(&self) -> Result<Option<u32>> {
        let f = self.build()?;
        let cs = f.coefficients();
        let k = cs.len() - 1;
        let pure = cs[k] == 1.0 && cs[..k].iter().all(|&a| a == 0.0);
        Ok(pure.then_some(k as u32))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarbouxConfig {
    pub gamma1: [f64; 2],
    pub gamma3: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudePolicy {
    /// Solve the Maxwell constraint for the amplitudes.
    #[default]
    Solve,
    /// Use `ex0` and `ey0` as given.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub v: f64,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default)]
    pub amplitude: AmplitudePolicy,
    pub ex0: Option<f64>,
    pub ey0: Option<f64>,
    /// Defaults to -(h1 + h3)/2.
    pub epsilon1: Option<f64>,
    /// Defaults to 3 (h1 + h3)/4.
    pub epsilon2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rk4Config {
    #[serde(default = "default_rk_step")]
    pub step: f64,
    #[serde(default = "default_rk_duration")]
    pub duration: f64,
    /// Defaults to the switching midpoint minus half the duration.
    pub t_start: Option<f64>,
    #[serde(default = "default_rk_samples")]
    pub samples: usize,
}

fn default_rk_step() -> f64 {
    1e-3
}

fn default_rk_duration() -> f64 {
    20.0
}

fn default_rk_samples() -> usize {
    21
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    pub rk4: Option<Rk4Config>,
    /// Trace of the predensity used for the scaling property; needs f(x) = x^k.
    pub scaling_tau: Option<f64>,
    /// Scalar shift s for the shifting property.
    pub shift: Option<f64>,
    /// Extra (epsilon1, epsilon2) pairs for the effective-Hamiltonian check.
    #[serde(default)]
    pub gauges: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub residual: f64,
    pub closed_form: f64,
    pub profile: f64,
    pub factorization: f64,
    pub rk4: f64,
    pub maxwell_constraint: f64,
    pub maxwell_pde: f64,
    pub invariants: InvariantTolerances,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-6,
            closed_form: 1e-10,
            profile: 1e-10,
            factorization: 1e-10,
            rk4: 1e-7,
            maxwell_constraint: 1e-12,
            maxwell_pde: 1e-4,
            invariants: InvariantTolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Relative paths resolve against the config file's directory.
    pub dir: PathBuf,
    pub series: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            series: true,
        }
    }
}

fn config_error(field: &str, detail: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("{field}: {detail}"))
}

fn complex(v: [f64; 2]) -> C64 {
    c(v[0], v[1])
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> std::result::Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg = Self::from_toml(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|e| ConfigError::Invalid {
            path: path.to_path_buf(),
            source: e,
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Range checks that do not need the model to be built.
    pub fn validate(&self) -> Result<()> {
        self.grid
            .validate()
            .map_err(|e| config_error("grid", e))?;
        self.nonlinearity.build()?;
        let beta = match &self.model {
            ModelConfig::HarmonicOscillator { b, beta, alpha } => {
                if !(b.is_finite() && *b != 0.0) {
                    return Err(config_error("model.b", "must be finite and nonzero"));
                }
                if !alpha.is_finite() {
                    return Err(config_error("model.alpha", "must be finite"));
                }
                *beta
            }
            ModelConfig::Hydrogen { n, b, beta } => {
                if *n == 0 || *b <= 0.0 {
                    return Err(config_error("model", "hydrogen needs n >= 1 and b > 0"));
                }
                *beta
            }
            ModelConfig::Custom { levels, beta, rho3 } => {
                if levels.iter().any(|x| !x.is_finite()) || !rho3.is_finite() {
                    return Err(config_error("model.levels", "must be finite"));
                }
                *beta
            }
        };
        if beta == 0.0 {
            return Err(config_error(
                "model.beta",
                "beta = Im(mu) must be nonzero for a nontrivial Darboux transformation",
            ));
        }
        if self.darboux.gamma1 == [0.0, 0.0] && self.darboux.gamma3 == [0.0, 0.0] {
            return Err(config_error("darboux", "gamma1 and gamma3 cannot both vanish"));
        }
        if let Some(field) = &self.field {
            if !(field.v > 0.0 && field.v < field.c) {
                return Err(config_error("field.v", "need 0 < v < c"));
            }
            if field.amplitude == AmplitudePolicy::Explicit
                && (field.ex0.is_none() || field.ey0.is_none())
            {
                return Err(config_error(
                    "field.amplitude",
                    "explicit amplitudes need both ex0 and ey0",
                ));
            }
        }
        if let Some(rk) = &self.checks.rk4 {
            if !(rk.step > 0.0 && rk.duration > 0.0 && rk.samples >= 2) {
                return Err(config_error(
                    "checks.rk4",
                    "step and duration must be positive and samples >= 2",
                ));
            }
        }
        if let Some(tau) = self.checks.scaling_tau {
            if tau <= 0.0 {
                return Err(config_error("checks.scaling_tau", "must be positive"));
            }
            if self.nonlinearity.monomial_power()?.is_none() {
                return Err(config_error(
                    "checks.scaling_tau",
                    "the scaling property needs f(x) = x^k",
                ));
            }
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<ModelSolution> {
        let f = self.nonlinearity.build()?;
        let g1 = complex(self.darboux.gamma1);
        let g3 = complex(self.darboux.gamma3);
        match &self.model {
            ModelConfig::HarmonicOscillator { b, beta, alpha } => {
                let seed = build_equispaced_seed(*b, *alpha, *beta)?;
                ModelSolution::new(seed, f, g1, g3, Some(ProfileModel::HarmonicOscillator))
            }
            ModelConfig::Hydrogen { n, b, beta } => ModelSolution::hydrogen(*n, *b, *beta, g1, g3, f),
            ModelConfig::Custom { levels, beta, rho3 } => {
                let [h1, h2, h3] = *levels;
                let seed = build_inhomogeneous_seed(h1, h2, h3, *beta, *rho3)?;
                ModelSolution::new(seed, f, g1, g3, None)
            }
        }
    }

    /// Output directory resolved against `base`.
    pub fn output_dir(&self, base: &Path) -> PathBuf {
        if self.output.dir.is_absolute() {
            self.output.dir.clone()
        } else {
            base.join(&self.output.dir)
        }
    }
}

/// Failures before any computation starts.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Invalid { path: PathBuf, source: Error },
}

pub const HO_QUADRATIC: &str = r#"name = "ho_quadratic"

[model]
kind = "harmonic_oscillator"
b = 1.0
beta = 0.3

[nonlinearity]
power = 2

[darboux]
gamma1 = [1.0, 0.0]
# D = exp(i pi / 4)
gamma3 = [0.7071067811865476, -0.7071067811865476]

[grid]
t_start = -20.0
t_end = 20.0
n_points = 201

[field]
v = 0.5
c = 1.0
amplitude = "solve"

[checks]
scaling_tau = 2.0
shift = 0.1
gauges = [[0.0, 0.0], [0.37, -1.2]]

[checks.rk4]
step = 1e-3
duration = 20.0

[output]
dir = "out/ho_quadratic"
"#;

pub const HA_QUADRATIC: &str = r#"name = "ha_quadratic"

[model]
kind = "hydrogen"
n = 1
b = 1.0
beta = 0.1

[nonlinearity]
power = 2

[darboux]
gamma1 = [1.0, 0.0]
gamma3 = [1.0, 0.0]

[grid]
t_start = -750.0
t_end = 1250.0
n_points = 201

[field]
v = 0.5
c = 1.0
amplitude = "solve"

[checks]
gauges = [[0.0, 0.0]]

[output]
dir = "out/ha_quadratic"
"#;

/// Bundled example scenarios as (file name, contents).
pub fn bundled_examples() -> [(&'static str, &'static str); 2] {
    [("ho_quadratic.toml", HO_QUADRATIC), ("ha_quadratic.toml", HA_QUADRATIC)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_examples_parse() {
        for (_, text) in bundled_examples() {
            let cfg = ScenarioConfig::from_toml(text).unwrap();
            cfg.validate().unwrap();
            cfg.build_model().unwrap();
            let again = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
            assert_eq!(cfg, again);
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = HO_QUADRATIC.replace("beta = 0.3", "beta = 0.3\nbogus = 1");
        let err = ScenarioConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
        let text = HO_QUADRATIC.replace("[grid]", "[grid]\nstep = 2");
        assert!(ScenarioConfig::from_toml(&text).is_err());
        let text = format!("{HO_QUADRATIC}\n[tolerances]\nresidual = 1e-7\n\n[tolerances.invariants]\ntrace = 1e-13\n");
        let cfg = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.tolerances.invariants.trace, 1e-13);
        assert_eq!(cfg.tolerances.invariants.spectrum, 1e-10);
        let text = format!("{HO_QUADRATIC}\n[tolerances.invariants]\ntrcae = 1e-13\n");
        assert!(ScenarioConfig::from_toml(&text).is_err());
    }

    #[test]
    fn parse_error_names_line() {
        let text = HO_QUADRATIC.replace("n_points = 201", "n_points = \"many\"");
        let err = ScenarioConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("line") || err.contains("n_points"), "{err}");
    }

    #[test]
    fn validation_errors_name_the_field() {
        let cfg = ScenarioConfig::from_toml(&HO_QUADRATIC.replace("beta = 0.3", "beta = 0.0")).unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("model.beta") && err.contains("nontrivial"), "{err}");
        let cfg = ScenarioConfig::from_toml(&HO_QUADRATIC.replace("v = 0.5", "v = 1.5")).unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("field.v"));
        let cfg = ScenarioConfig::from_toml(&HO_QUADRATIC.replace("power = 2", "power = 2\ncoefficients = [0, 0, 1]"))
            .unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ScenarioConfig::from_toml(&HO_QUADRATIC.replace("power = 2", "coefficients = [0.1, 0, 1]"))
            .unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("scaling_tau"));
    }

    #[test]
    fn nonlinearity_forms() {
        let n = NonlinearityConfig {
            power: None,
            coefficients: Some(vec![0.0, 0.0, 0.0, 1.0]),
        };
        assert_eq!(n.monomial_power().unwrap(), Some(3));
        assert_eq!(NonlinearityConfig::default().build().unwrap(), Nonlinearity::quadratic());
    }
}
