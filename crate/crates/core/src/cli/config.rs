//! The `verify` configuration file.
//!
//! A TOML document with an optional top-level `seed` and one array of tables
//! per kind of check. Every table rejects unknown keys.
//!
//! ```toml
//! seed = 20240601
//!
//! [[exact]]
//! graph = { family = "complete", n = 4 }
//! k = "all"
//!
//! [[monte_carlo]]
//! graph = { family = "circulant", n = 200, offsets = [1, 2, 3] }
//! trials = 500
//! check_variance = true
//!
//! [[martingale]]
//! graph = { family = "circulant", n = 8, offsets = [1, 2] }
//! k = 2
//! traces = 200
//! compare_oracle = true
//!
//! [claims]
//! f_grid = 500
//! stirling_samples = 2000
//!
//! [[claims.interval]]
//! m = 10000
//! h = 200.0
//! reps = 1000
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::analysis::{KSet, PilotSpec, ScalingSpec, MIN_TAIL_TRIALS, MIN_VARIANCE_TRIALS};
use crate::graph::{GraphFamily, GraphFamilySpec};
use crate::martingale::{QuadratureSpec, TraceOrder};
use crate::oracle::DEFAULT_ORACLE_CAP;

use super::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Master seed; `--seed` overrides it, and entropy fills it when both
    /// are absent.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub exact: Vec<ExactSection>,
    #[serde(default)]
    pub monte_carlo: Vec<MonteCarloSection>,
    #[serde(default)]
    pub variance: Vec<VarianceSection>,
    #[serde(default)]
    pub concentration: Vec<ConcentrationSection>,
    #[serde(default)]
    pub martingale: Vec<MartingaleSection>,
    #[serde(default)]
    pub claims: Option<ClaimsSection>,
    #[serde(default)]
    pub scaling: Vec<ScalingSpec>,
}

/// Exhaustive checks on a graph small enough for the oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactSection {
    pub graph: GraphFamilySpec,
    #[serde(default)]
    pub k: KSet,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_ORACLE_CAP
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    pub graph: GraphFamilySpec,
    #[serde(default)]
    pub k: KSet,
    #[serde(deserialize_with = "positive")]
    pub trials: usize,
    /// Overrides the seed derived from the master seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub kappa_constant: f64,
    /// Also check the sample variance of every `k` against the cap.
    #[serde(default)]
    pub check_variance: bool,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceSection {
    pub graph: GraphFamilySpec,
    #[serde(default)]
    pub k: KSet,
    /// Used only when the graph is too large for the oracle.
    #[serde(deserialize_with = "variance_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationSection {
    pub graph: GraphFamilySpec,
    pub k: usize,
    #[serde(deserialize_with = "tail_trials")]
    pub trials: usize,
    /// Thresholds for the tail table.
    pub z: Vec<f64>,
    #[serde(default)]
    pub pilot: PilotSpec,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartingaleSection {
    pub graph: GraphFamilySpec,
    pub k: usize,
    #[serde(deserialize_with = "positive")]
    pub traces: usize,
    #[serde(default)]
    pub order: TraceOrder,
    #[serde(default)]
    pub quadrature: Option<QuadratureSpec>,
    #[serde(default)]
    pub compare_oracle: bool,
    #[serde(default)]
    pub check_decomposition: bool,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimsSection {
    /// Resolution of the grid for the `f` inequality; skipped when absent.
    #[serde(default)]
    pub f_grid: Option<usize>,
    /// Random `(t, h)` samples for the Stirling bound; skipped when absent.
    #[serde(default)]
    pub stirling_samples: Option<usize>,
    #[serde(default)]
    pub interval: Vec<IntervalSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSection {
    pub m: usize,
    pub h: f64,
    pub reps: usize,
    /// Defaults to `ln m`.
    #[serde(default)]
    pub kappa: Option<f64>,
}

fn at_least<'de, D: Deserializer<'de>>(d: D, min: usize, what: &str) -> Result<usize, D::Error> {
    let v = usize::deserialize(d)?;
    if v < min {
        return Err(serde::de::Error::custom(format!("{what} needs at least {min} trials, got {v}")));
    }
    Ok(v)
}

fn positive<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
    at_least(d, 1, "this check")
}

fn variance_trials<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
    at_least(d, MIN_VARIANCE_TRIALS, "a variance check")
}

fn tail_trials<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
    at_least(d, MIN_TAIL_TRIALS, "a tail table")
}

impl VerifyConfig {
    /// Parses TOML; errors carry the path of the offending field.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text).map_err(|e| CliError::Config {
            path: String::new(),
            message: e.to_string(),
        })?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
            path: e.path().to_string(),
            message: e.inner().message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that span more than one field.
    fn validate(&self) -> Result<(), CliError> {
        for (i, s) in self.monte_carlo.iter().enumerate() {
            if s.check_variance && s.trials < MIN_VARIANCE_TRIALS {
                return Err(CliError::Config {
                    path: format!("monte_carlo[{i}].trials"),
                    message: format!(
                        "check_variance needs at least {MIN_VARIANCE_TRIALS} trials, got {}",
                        s.trials
                    ),
                });
            }
        }
        Ok(())
    }

    /// Reads a config file; relative graph paths are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!(
            "cannot read config {}: {e}",
            path.display()
        )))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new("")));
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |g: &mut GraphFamilySpec| {
            if let GraphFamily::FromFile { path } = &mut g.0 {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        self.exact.iter_mut().for_each(|s| fix(&mut s.graph));
        self.monte_carlo.iter_mut().for_each(|s| fix(&mut s.graph));
        self.variance.iter_mut().for_each(|s| fix(&mut s.graph));
        self.concentration.iter_mut().for_each(|s| fix(&mut s.graph));
        self.martingale.iter_mut().for_each(|s| fix(&mut s.graph));
    }

    /// Every graph file the config reads.
    pub fn graph_files(&self) -> Vec<PathBuf> {
        let specs = self
            .exact
            .iter()
            .map(|s| &s.graph)
            .chain(self.monte_carlo.iter().map(|s| &s.graph))
            .chain(self.variance.iter().map(|s| &s.graph))
            .chain(self.concentration.iter().map(|s| &s.graph))
            .chain(self.martingale.iter().map(|s| &s.graph));
        let mut files: Vec<PathBuf> = specs
            .filter_map(|g| match &g.0 {
                GraphFamily::FromFile { path } => Some(path.clone()),
                _ => None,
            })
            .collect();
        files.dedup();
        files
    }
}
