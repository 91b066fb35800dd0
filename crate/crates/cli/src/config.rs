//! Experiment configuration: a TOML file with the sections `manifold`,
//! `density`, `checks`, `numerics` and `seed`.
//!
//! ```toml
//! [manifold]
//! name = "flat_torus"
//!
//! [density]
//! preset = "cos1(0.5)"
//!
//! [checks]
//! run = ["identities", "forms"]
//! observables = ["linear(coscos)", "square(sinx)"]
//! forms = ["const(1) * e1", "linear(coscos) * grad(sinx)"]
//!
//! [numerics]
//! tol = 1e-6
//!
//! [seed]
//! value = 42
//! ```

use std::fmt;

use poisson_forms::cylinder::{CylinderFunction, CylinderOneForm};
use poisson_forms::intensity::IntensityField;
use poisson_forms::manifold::Manifold;
use poisson_forms::preset;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const DEFAULT_OBSERVABLES: &[&str] = &["linear(coscos)", "square(sinx)", "expneg(cosy)"];
pub const DEFAULT_FORMS: &[&str] = &["const(1) * e1", "linear(coscos) * grad(sinx)", "expneg(cosx) * rot(coscos)"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Sample,
    Identities,
    Forms,
    Weitzenbock,
    Semigroup,
}

impl Check {
    pub const ALL: [Check; 5] = [Check::Sample, Check::Identities, Check::Forms, Check::Weitzenbock, Check::Semigroup];

    pub fn name(self) -> &'static str {
        match self {
            Check::Sample => "sample",
            Check::Identities => "identities",
            Check::Forms => "forms",
            Check::Weitzenbock => "weitzenbock",
            Check::Semigroup => "semigroup",
        }
    }

    pub fn stochastic(self) -> bool {
        matches!(self, Check::Sample | Check::Weitzenbock | Check::Semigroup)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Potential {
    /// `J = 0` against the Bochner Laplacian.
    Zero,
    /// `J = −R_σ` against the de Rham Laplacian.
    Weitzenbock,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    manifold: ManifoldSection,
    density: DensitySection,
    #[serde(default)]
    checks: ChecksSection,
    #[serde(default)]
    numerics: Numerics,
    seed: Option<SeedSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifoldSection {
    name: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensitySection {
    preset: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChecksSection {
    run: Option<Vec<Check>>,
    observables: Option<Vec<String>>,
    forms: Option<Vec<String>>,
    potential: Option<Vec<Potential>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeedSection {
    value: u64,
}

/// Numeric parameters; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Series quadrature grid; the manifold default when absent.
    pub grid: Option<[usize; 2]>,
    /// Fixed series truncation; raised automatically when absent.
    pub k: Option<usize>,
    pub series_tol: f64,
    /// Tolerance of the series identities.
    pub tol: f64,
    pub weitzenbock_tol: f64,
    pub t: f64,
    pub dt: f64,
    pub n_paths: usize,
    /// Monte Carlo samples of the `sample` check.
    pub samples: usize,
    /// Random configurations per pointwise check.
    pub configs: usize,
    /// Largest configuration used by the pointwise checks.
    pub max_points: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            grid: None,
            k: None,
            series_tol: 1e-13,
            tol: 1e-6,
            weitzenbock_tol: 1e-10,
            t: 0.01,
            dt: 1e-3,
            n_paths: 100_000,
            samples: 100_000,
            configs: 2,
            max_points: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<poisson_forms::Error> for ConfigError {
    fn from(e: poisson_forms::Error) -> Self {
        ConfigError(e.to_string())
    }
}

/// A validated configuration with every preset resolved.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub manifold: Manifold,
    pub density_name: String,
    pub intensity: IntensityField,
    pub checks: Vec<Check>,
    pub observables: Vec<(String, CylinderFunction)>,
    pub forms: Vec<(String, CylinderOneForm)>,
    pub potentials: Vec<Potential>,
    pub numerics: Numerics,
    pub seed: Option<u64>,
    /// SHA-256 of the config text, hex encoded.
    pub hash: String,
}

pub fn hash_text(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// `F * ν` with a cylinder-function preset and a 1-form preset.
pub fn parse_form(text: &str) -> Result<CylinderOneForm, ConfigError> {
    let (f, nu) = text.split_once('*').ok_or_else(|| ConfigError(format!("form `{text}` must read `F * nu`")))?;
    let f = CylinderFunction::from_preset(&preset::parse(f)?)?;
    let nu = preset::one_form(&preset::parse(nu)?)?;
    Ok(CylinderOneForm::single(f, nu))
}

pub fn parse_observable(text: &str) -> Result<CylinderFunction, ConfigError> {
    Ok(CylinderFunction::from_preset(&preset::parse(text)?)?)
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError(format!("numerics.{name} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError(e.message().to_string()))?;
        let manifold = preset::manifold(&raw.manifold.name)?;
        let intensity = IntensityField::from_preset(manifold, &raw.density.preset)?;
        let n = raw.numerics;
        for (name, v) in [("series_tol", n.series_tol), ("tol", n.tol), ("weitzenbock_tol", n.weitzenbock_tol), ("t", n.t), ("dt", n.dt)] {
            positive(name, v)?;
        }
        let steps = (n.t / n.dt).round();
        if steps < 1.0 || (steps * n.dt - n.t).abs() > 1e-9 * n.t {
            return Err(ConfigError(format!("numerics.t = {} must be a positive multiple of dt = {}", n.t, n.dt)));
        }
        for (name, v) in [("n_paths", n.n_paths), ("samples", n.samples), ("configs", n.configs), ("max_points", n.max_points)] {
            if v == 0 {
                return Err(ConfigError(format!("numerics.{name} must be positive")));
            }
        }
        if let Some(g) = n.grid {
            if g[0] < 2 || g[1] < 2 || g[0] * g[1] > 1 << 20 {
                return Err(ConfigError(format!("numerics.grid {g:?} out of range")));
            }
        }
        if n.k.is_some_and(|k| k > poisson_forms::integrate::series::MAX_K) {
            return Err(ConfigError(format!("numerics.k exceeds {}", poisson_forms::integrate::series::MAX_K)));
        }
        let mut checks = raw.checks.run.unwrap_or_else(|| Check::ALL.to_vec());
        checks.sort();
        checks.dedup();
        let seed = raw.seed.map(|s| s.value);
        if seed.is_none() {
            if let Some(c) = checks.iter().find(|c| c.stochastic()) {
                return Err(ConfigError(format!("check `{}` needs [seed] value", c.name())));
            }
        }
        let names = |v: Option<Vec<String>>, d: &[&str]| v.unwrap_or_else(|| d.iter().map(|s| s.to_string()).collect());
        let observables = names(raw.checks.observables, DEFAULT_OBSERVABLES)
            .into_iter()
            .map(|s| parse_observable(&s).map(|f| (s, f)))
            .collect::<Result<Vec<_>, _>>()?;
        let forms = names(raw.checks.forms, DEFAULT_FORMS)
            .into_iter()
            .map(|s| parse_form(&s).map(|v| (s, v)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut potentials = raw.checks.potential.unwrap_or_else(|| vec![Potential::Zero, Potential::Weitzenbock]);
        potentials.dedup();
        Ok(Self {
            manifold,
            density_name: raw.density.preset.trim().to_string(),
            intensity,
            checks,
            observables,
            forms,
            potentials,
            numerics: n,
            seed,
            hash: hash_text(text),
        })
    }

    pub fn series_options(&self) -> poisson_forms::integrate::SeriesOptions {
        poisson_forms::integrate::SeriesOptions { k: self.numerics.k, tol: self.numerics.series_tol, grid: self.numerics.grid }
    }
}
