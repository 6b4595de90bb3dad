//! Experiments that tie the model's claims to measurable quantities.
//!
//! Every check here is either exact (through the order-type oracle) or
//! statistical with an explicit three-standard-error margin. Parallel work is
//! always collected in trial order before any floating-point reduction, so
//! results do not depend on the number of worker threads.

mod claims;
mod concentration;
mod exact_checks;
mod martingale_study;
mod monte_carlo;
mod report;
mod scaling;
mod variance;

pub use claims::{
    check_f_inequality, check_stirling_delta, f_alpha, interval_claims_stats, ClaimFrequency,
    FCheck, IntervalClaims, StirlingCheck,
};
pub use concentration::{concentration_report, PilotSpec, TailRow, TailTable, MIN_TAIL_TRIALS};
pub use exact_checks::{exact_report, ExactKReport, ExactReport, ExactTailRow};
pub use martingale_study::{
    martingale_study, MartingaleStudySpec, MartingaleSummary, Quantiles, TraceRecord,
    DECOMPOSITION_TOLERANCE,
};
pub use monte_carlo::{monte_carlo, run_monte_carlo, sample_trials, CountStats, MonteCarloReport};
pub use report::{Assertion, BoundReport};
pub use scaling::{scaling_study, ScalingFamily, ScalingRow, ScalingSpec, ScalingTable};
pub use variance::{
    sampling_variance_check, verify_variance_bound, VarianceCheck, VarianceMode, MIN_VARIANCE_TRIALS,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, GraphFamilySpec};
use crate::martingale::{MartingaleError, QuadratureSpec};
use crate::oracle::OracleError;

/// Statistical margin, in standard errors, for every sampled assertion.
pub const SE_MARGIN: f64 = 3.0;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Martingale(#[from] MartingaleError),
    #[error("{what} needs at least {needed} trials, got {got}")]
    InsufficientTrials { what: &'static str, needed: usize, got: usize },
    #[error("scaling study needs at least 3 increasing sizes, got {0:?}")]
    InsufficientScaling(Vec<usize>),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degree {k} exceeds d = {d}")]
    DegreeOutOfRange { k: usize, d: usize },
}

/// Which target degrees `k` an experiment covers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "KSetRepr", into = "KSetRepr")]
pub enum KSet {
    #[default]
    All,
    List(Vec<usize>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum KSetRepr {
    Word(String),
    One(usize),
    List(Vec<usize>),
}

impl TryFrom<KSetRepr> for KSet {
    type Error = String;

    fn try_from(r: KSetRepr) -> Result<Self, String> {
        match r {
            KSetRepr::Word(w) if w == "all" => Ok(KSet::All),
            KSetRepr::Word(w) => Err(format!("expected \"all\" or a list of degrees, got {w:?}")),
            KSetRepr::One(k) => Ok(KSet::List(vec![k])),
            KSetRepr::List(ks) if ks.is_empty() => Err("empty degree list".into()),
            KSetRepr::List(ks) => Ok(KSet::List(ks)),
        }
    }
}

impl From<KSet> for KSetRepr {
    fn from(k: KSet) -> Self {
        match k {
            KSet::All => KSetRepr::Word("all".into()),
            KSet::List(ks) => KSetRepr::List(ks),
        }
    }
}

impl KSet {
    pub fn resolve(&self, d: usize) -> Result<Vec<usize>, AnalysisError> {
        match self {
            KSet::All => Ok((0..=d).collect()),
            KSet::List(ks) => {
                if let Some(&k) = ks.iter().find(|&&k| k > d) {
                    return Err(AnalysisError::DegreeOutOfRange { k, d });
                }
                Ok(ks.clone())
            }
        }
    }
}

/// A Monte Carlo experiment on one graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphFamilySpec,
    #[serde(default)]
    pub k_set: KSet,
    pub trials: usize,
    /// Falls back to the run's master seed when absent.
    #[serde(default)]
    pub master_seed: Option<u64>,
    /// `C` in `kappa = C ln n` and `k_+ = C max(k, kappa)`; reported only.
    #[serde(default = "default_kappa_constant")]
    pub kappa_constant: f64,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
}

fn default_kappa_constant() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.trials == 0 {
            return Err(AnalysisError::InsufficientTrials {
                what: "a Monte Carlo experiment",
                needed: 1,
                got: 0,
            });
        }
        if !(self.kappa_constant > 0.0) {
            return Err(AnalysisError::InvalidParameter(format!(
                "kappa_constant must be positive, got {}",
                self.kappa_constant
            )));
        }
        Ok(())
    }
}

/// The `ceil(p N)`-th smallest value: an upper empirical quantile, so the
/// 99.9% quantile of fewer than 1000 values is their maximum.
pub fn upper_quantile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[rank - 1])
}

/// Standard error of a binomial proportion.
pub fn binomial_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(upper_quantile(&v, 0.999), Some(10.0));
        assert_eq!(upper_quantile(&v, 0.5), Some(5.0));
        assert_eq!(upper_quantile(&v, 0.0), Some(1.0));
        assert_eq!(upper_quantile(&[], 0.5), None);
    }

    #[test]
    fn kset_parsing() {
        #[derive(Deserialize)]
        struct W {
            k: KSet,
        }
        assert_eq!(toml::from_str::<W>("k = \"all\"").unwrap().k, KSet::All);
        assert_eq!(toml::from_str::<W>("k = [0, 5]").unwrap().k, KSet::List(vec![0, 5]));
        assert_eq!(toml::from_str::<W>("k = 3").unwrap().k, KSet::List(vec![3]));
        assert!(toml::from_str::<W>("k = \"some\"").is_err());
        assert_eq!(KSet::All.resolve(2).unwrap(), vec![0, 1, 2]);
        assert!(KSet::List(vec![4]).resolve(3).is_err());
    }
}
