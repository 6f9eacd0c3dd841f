//! Experiment configuration: a flat key-value table read from TOML, merged
//! over command-line values, and identified by a canonical hash.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hartreefock::{HfConfig, KineticMode};
use crate::radial::GridScheme;

/// Which scan to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    Ionization,
    Radius,
    Potential,
    IonizationEnergy,
    EnergyGap,
    Properties,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExperimentKind::Ionization => "ionization",
            ExperimentKind::Radius => "radius",
            ExperimentKind::Potential => "potential",
            ExperimentKind::IonizationEnergy => "ionization-energy",
            ExperimentKind::EnergyGap => "energy-gap",
            ExperimentKind::Properties => "properties",
        })
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        toml::Value::String(s.to_string())
            .try_into()
            .map_err(|_| Error::param(format!("unknown experiment '{s}'")))
    }
}

/// How electron numbers are chosen for each `Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NPolicy {
    /// `N = Z`.
    #[default]
    Neutral,
    /// `N = Z, Z + 1, ...` until unbinding.
    Scan,
    /// The values of the `n` list.
    Explicit,
}

/// Every experiment parameter; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub z: Vec<f64>,
    pub n_policy: NPolicy,
    pub n: Vec<f64>,
    pub q: u32,
    /// `kappa = Z alpha`; each `Z` gets `alpha = kappa / Z`.
    pub kappa: f64,
    pub mode: KineticMode,
    pub grid_n: usize,
    pub r_max: f64,
    /// `exp` (scale 0.25/Z), `exp:<scale>`, `uniform` or `log`.
    pub scheme: String,
    pub tol: f64,
    pub max_iter: usize,
    pub bind_tol: f64,
    /// Cut radius of the `otf` verb.
    pub r_cut: f64,
    /// Charges `nu` for radius scans.
    pub nu: Vec<f64>,
    /// Nuclear charges of the TF rows of radius scans.
    pub tf_z: Vec<f64>,
    /// Log-spaced radii of potential comparisons.
    pub x_min: f64,
    pub x_max: f64,
    pub x_points: usize,
    /// Random samples per property suite.
    pub samples: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub format: Vec<String>,
    /// Record wall-clock runtimes; `false` writes zeros for reproducible files.
    pub timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::Ionization,
            z: (2..=10).map(f64::from).collect(),
            n_policy: NPolicy::Neutral,
            n: Vec::new(),
            q: 2,
            kappa: 0.1,
            mode: KineticMode::Relativistic,
            grid_n: 300,
            r_max: 40.0,
            scheme: "exp".into(),
            tol: 1e-8,
            max_iter: 200,
            bind_tol: 1e-6,
            r_cut: 1.0,
            nu: vec![1.0, 2.0, 4.0, 8.0],
            tf_z: vec![1e2, 1e4, 1e8, 1e12],
            x_min: 0.01,
            x_max: 10.0,
            x_points: 120,
            samples: 10_000,
            seed: 0,
            out: PathBuf::from("out"),
            format: vec!["csv".into(), "json".into()],
            timings: true,
        }
    }
}

impl ExperimentConfig {
    /// Parses a TOML key-value document; missing keys take their defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::param(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Builds a config from a base table (e.g. command-line values) with the
    /// keys of `overrides` replacing those of `base`.
    pub fn merged(base: toml::Table, overrides: toml::Table) -> Result<Self> {
        let mut table = base;
        table.extend(overrides);
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| Error::param(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `merged` with the overrides read from an optional TOML file.
    pub fn merged_with_file(base: toml::Table, file: Option<&Path>) -> Result<Self> {
        let overrides = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::param(format!("{}: {e}", path.display())))?
            }
            None => toml::Table::new(),
        };
        Self::merged(base, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0 && self.kappa < 2.0 / PI) {
            return Err(Error::param(format!("kappa = {} must lie in [0, 2/pi)", self.kappa)));
        }
        if self.z.is_empty() || self.z.iter().any(|&z| !(z >= 1.0) || !z.is_finite()) {
            return Err(Error::param("the Z list must be nonempty with Z >= 1"));
        }
        if self.n_policy == NPolicy::Explicit && self.n.is_empty() {
            return Err(Error::param("an explicit N policy needs a nonempty n list"));
        }
        if self.n.iter().any(|&n| !(n >= 0.0)) {
            return Err(Error::param("electron numbers must be nonnegative"));
        }
        if self.q == 0 {
            return Err(Error::param("q must be at least 1"));
        }
        if !(self.r_max > 0.0) || !self.r_max.is_finite() {
            return Err(Error::param("r_max must be positive"));
        }
        if !(self.r_cut > 0.0 && self.r_cut < self.r_max) {
            return Err(Error::param("r_cut must lie in (0, r_max)"));
        }
        if self.grid_n < 16 {
            return Err(Error::param("grid_n must be at least 16"));
        }
        if self.nu.is_empty() || self.tf_z.is_empty() {
            return Err(Error::param("the nu and tf_z lists must be nonempty"));
        }
        if !(self.x_min > 0.0 && self.x_max > self.x_min) || self.x_points < 2 {
            return Err(Error::param("need 0 < x_min < x_max and x_points >= 2"));
        }
        if self.format.is_empty() || self.format.iter().any(|f| f != "csv" && f != "json") {
            return Err(Error::param("format must list csv and/or json"));
        }
        self.grid_scheme()?;
        Ok(())
    }

    /// `None` for the default exponential grid scaled with `Z`.
    pub fn grid_scheme(&self) -> Result<Option<GridScheme>> {
        match self.scheme.parse::<GridScheme>()? {
            GridScheme::Exponential { scale } if scale == 0.0 => Ok(None),
            GridScheme::Exponential { scale } if !(scale > 0.0) => Err(Error::param("exp scale must be positive")),
            s => Ok(Some(s)),
        }
    }

    pub fn alpha(&self, z: f64) -> f64 {
        self.kappa / z
    }

    pub fn hf_config(&self) -> HfConfig {
        HfConfig {
            mode: self.mode,
            r_max: self.r_max,
            grid_n: self.grid_n,
            scheme: self.grid_scheme().ok().flatten(),
            tol: self.tol,
            max_iter: self.max_iter,
            bind_tol: self.bind_tol,
            ..HfConfig::default()
        }
    }

    /// SHA-256 of the canonical JSON form (keys sorted), so reordering keys
    /// in the source file does not change it.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let digest = Sha256::digest(canonical_json(&value).as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Compact JSON with object keys in lexicographic order.
fn canonical_json(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let body: Vec<String> = keys
                .iter()
                .map(|k| format!("{}:{}", serde_json::Value::String((*k).clone()), canonical_json(&map[*k])))
                .collect();
            format!("{{{}}}", body.join(","))
        }
        serde_json::Value::Array(items) => {
            format!("[{}]", items.iter().map(canonical_json).collect::<Vec<_>>().join(","))
        }
        other => other.to_string(),
    }
}
