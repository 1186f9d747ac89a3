use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{LogPortfolioParams, ScScParams, Schedule};
use crate::metrics::{SADDLE_TOL, VARIATION_SAMPLES};

/// One experiment: which payoffs, which learner, how long, which checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    pub instance: InstanceConfig,
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub verify: VerifyToggles,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Horizon `T >= 3`.
    pub horizon: usize,
    pub seed: u64,
    /// Joint first point `(x_1, y_1)`; defaults to the domain center.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Payoff generator, selected by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceConfig {
    ScScQuadratic(ScScParams),
    LogPortfolio(LogPortfolioParams),
    /// One of the two impossibility sequences (`1` or `2`).
    Impossibility { sequence: usize },
    Dyne {
        #[serde(default = "default_dyne_radius")]
        radius: f64,
    },
}

fn default_dyne_radius() -> f64 {
    2.0
}

impl InstanceConfig {
    /// Quadratic on `[-1, 1]^dim x [-1, 1]^dim` with `lambda = 1` and centers in `[-1/2, 1/2]`.
    pub fn sc_sc(dim: usize, coupling: f64, schedule: Schedule, segments: usize) -> Self {
        InstanceConfig::ScScQuadratic(ScScParams {
            lambda: 1.0,
            dim_x: dim,
            dim_y: dim,
            radius: 1.0,
            spread: 0.5,
            coupling,
            schedule,
            segments,
        })
    }

    /// Portfolio with prices in `[1/2, 3/2]` and rescalings in `[1/2, 3/2]`.
    pub fn portfolio(assets: usize) -> Self {
        InstanceConfig::LogPortfolio(LogPortfolioParams { assets, price_low: 0.5, price_high: 1.5, y_low: 0.5, y_high: 1.5 })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            InstanceConfig::ScScQuadratic(_) => "sc-sc-quadratic",
            InstanceConfig::LogPortfolio(_) => "log-portfolio",
            InstanceConfig::Impossibility { .. } => "impossibility",
            InstanceConfig::Dyne { .. } => "dyne",
        }
    }
}

/// Learner or meta-learner, selected by `name`. Unset parameters take the
/// defaults derived from the instance constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlgorithmConfig {
    Ogda {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    Ommns {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    Lra {
        /// `identity`, `outer` or `block-split`.
        rule: String,
        gamma: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    Agda {
        #[serde(default = "default_k_cap")]
        k_cap: usize,
    },
    OnlineVi {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        split: Option<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    /// Plays one joint point every round.
    Constant { point: Vec<f64> },
    Mmflh {
        /// `ogda` or `ommns`.
        base: String,
        /// Lifetime base; defaults to `T`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
}

fn default_epsilon() -> f64 {
    1.0
}

fn default_scale() -> f64 {
    1.0
}

fn default_k_cap() -> usize {
    crate::learners::DEFAULT_K_CAP
}

impl AlgorithmConfig {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmConfig::Ogda { .. } => "ogda",
            AlgorithmConfig::Ommns { .. } => "ommns",
            AlgorithmConfig::Lra { .. } => "lra",
            AlgorithmConfig::Agda { .. } => "agda",
            AlgorithmConfig::OnlineVi { .. } => "online-vi",
            AlgorithmConfig::Constant { .. } => "constant",
            AlgorithmConfig::Mmflh { .. } => "mmflh",
        }
    }
}

/// Which invariant suites run after the rounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyToggles {
    pub feasibility: bool,
    pub telescoping: bool,
    pub contraction: bool,
    pub ordering: bool,
    pub saddle_check: bool,
    pub gap_floor: bool,
    pub bound: bool,
    /// Sampled drift measures; forced on where a bound needs them.
    pub variation: bool,
}

impl Default for VerifyToggles {
    fn default() -> Self {
        Self {
            feasibility: true,
            telescoping: true,
            contraction: true,
            ordering: true,
            saddle_check: true,
            gap_floor: true,
            bound: true,
            variation: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub saddle: f64,
    pub variation_samples: usize,
    pub saddle_check_samples: usize,
    /// Points per axis of the comparator grid of the online VI objective.
    pub vi_grid: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { saddle: SADDLE_TOL, variation_samples: VARIATION_SAMPLES, saddle_check_samples: 100, vi_grid: 21 }
    }
}

impl ExperimentConfig {
    /// Default checks and tolerances.
    pub fn new(horizon: usize, seed: u64, instance: InstanceConfig, algorithm: AlgorithmConfig) -> Self {
        Self {
            run: RunConfig { horizon, seed, start: None, label: None },
            instance,
            algorithm,
            verify: VerifyToggles::default(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_table(t: toml::Table) -> Result<Self> {
        let cfg: Self = t.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.horizon < 3 {
            return Err(Error::Config(format!("horizon must be at least 3, got {}", self.run.horizon)));
        }
        if let InstanceConfig::Impossibility { sequence } = self.instance {
            if sequence != 1 && sequence != 2 {
                return Err(Error::Config(format!("impossibility sequence must be 1 or 2, got {sequence}")));
            }
        }
        if let AlgorithmConfig::Lra { rule, .. } = &self.algorithm {
            if !matches!(rule.as_str(), "identity" | "outer" | "block-split") {
                return Err(Error::Config(format!("unknown regularity rule {rule:?}")));
            }
        }
        if let AlgorithmConfig::Mmflh { base, .. } = &self.algorithm {
            if !matches!(base.as_str(), "ogda" | "ommns") {
                return Err(Error::Config(format!("unknown base learner {base:?}")));
            }
        }
        if self.tolerances.vi_grid < 2 {
            return Err(Error::Config("vi_grid needs at least 2 points per axis".into()));
        }
        Ok(())
    }

    /// Display name, `label` if set.
    pub fn label(&self) -> String {
        self.run
            .label
            .clone()
            .unwrap_or_else(|| format!("{}-{}-T{}-s{}", self.instance.kind(), self.algorithm.name(), self.run.horizon, self.run.seed))
    }
}

/// Output directory: explicit, else `OMMO_OUT_DIR`, else `./out`.
pub fn output_dir(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

pub const OUT_DIR_ENV: &str = "OMMO_OUT_DIR";
