use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::exact::Exact;
use crate::graph::Graph;
use crate::oracle::{ExactOracle, DEFAULT_ORACLE_CAP};

use super::monte_carlo::{monte_carlo, CountStats};
use super::AnalysisError;

/// Minimum trials for a sampled variance check.
pub const MIN_VARIANCE_TRIALS: usize = 100;
/// One-sided confidence level of the sampled upper bound.
pub const VARIANCE_CONFIDENCE: f64 = 0.99;
/// Relative slack on the cap in sampling mode.
pub const VARIANCE_SLACK: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    Exact,
    Sampling,
}

/// `Var m(H, k)` against `17 n / (d + 1)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceCheck {
    pub graph: String,
    pub k: usize,
    pub mode: VarianceMode,
    pub variance: f64,
    /// Exact value in oracle mode.
    pub exact_variance: Option<Exact>,
    /// Chi-square upper confidence bound in sampling mode.
    pub upper_bound: Option<f64>,
    pub trials: Option<usize>,
    pub cap: f64,
    pub slack: f64,
    pub passed: bool,
}

/// Compares `Var m(H, k)` with the cap: exactly (strict rational
/// comparison) when `g` is small enough to enumerate, otherwise through a
/// one-sided 99% chi-square upper bound against the cap times `1.1`.
pub fn verify_variance_bound(
    g: &Graph,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<VarianceCheck, AnalysisError> {
    if k > g.d() {
        return Err(AnalysisError::DegreeOutOfRange { k, d: g.d() });
    }
    if g.n() <= DEFAULT_ORACLE_CAP {
        let oracle = ExactOracle::enumerate(g, DEFAULT_ORACLE_CAP)?;
        let (_, var) = oracle.mean_var(k)?;
        return Ok(exact_variance_check(g, k, var));
    }
    let stats = monte_carlo(g, &[k], trials.max(1), seed)?.remove(0);
    sampling_variance_check(g, &stats)
}

pub(crate) fn exact_variance_check(g: &Graph, k: usize, var: Exact) -> VarianceCheck {
    let cap = Exact::new(17 * g.n() as u64, (g.d() + 1) as u64);
    VarianceCheck {
        graph: g.descriptor().to_string(),
        k,
        mode: VarianceMode::Exact,
        variance: var.to_f64(),
        passed: var <= cap,
        exact_variance: Some(var),
        upper_bound: None,
        trials: None,
        cap: cap.to_f64(),
        slack: 0.0,
    }
}

/// Sampling-mode check from already collected statistics.
pub fn sampling_variance_check(g: &Graph, stats: &CountStats) -> Result<VarianceCheck, AnalysisError> {
    if stats.trials < MIN_VARIANCE_TRIALS {
        return Err(AnalysisError::InsufficientTrials {
            what: "a sampled variance check",
            needed: MIN_VARIANCE_TRIALS,
            got: stats.trials,
        });
    }
    let var = stats.variance.expect("at least two trials");
    let dof = (stats.trials - 1) as f64;
    let chi = ChiSquared::new(dof).expect("positive degrees of freedom");
    let upper = dof * var / chi.inverse_cdf(1.0 - VARIANCE_CONFIDENCE);
    let cap = 17.0 * g.n() as f64 / (g.d() + 1) as f64;
    Ok(VarianceCheck {
        graph: g.descriptor().to_string(),
        k: stats.k,
        mode: VarianceMode::Sampling,
        variance: var,
        exact_variance: None,
        upper_bound: Some(upper),
        trials: Some(stats.trials),
        cap,
        slack: VARIANCE_SLACK,
        passed: upper <= cap * (1.0 + VARIANCE_SLACK),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphFamilySpec;

    #[test]
    fn k2_exact_variance_is_one() {
        let g = GraphFamilySpec::complete(2).build().unwrap();
        let c = verify_variance_bound(&g, 0, 0, 0).unwrap();
        assert_eq!(c.mode, VarianceMode::Exact);
        assert_eq!(c.exact_variance, Some(Exact::one()));
        assert_eq!(c.cap, 17.0);
        assert!(c.passed);
    }

    #[test]
    fn sampling_mode_bound_exceeds_estimate() {
        let g = GraphFamilySpec::circulant_with_degree(60, 4).build().unwrap();
        let c = verify_variance_bound(&g, 2, 400, 3).unwrap();
        assert_eq!(c.mode, VarianceMode::Sampling);
        let ub = c.upper_bound.unwrap();
        assert!(ub > c.variance);
        // 99% one-sided chi-square factor for 399 degrees of freedom
        assert!((ub / c.variance - 1.1867).abs() < 2e-3, "{}", ub / c.variance);
        assert!(c.passed);
        let few = monte_carlo(&g, &[2], 10, 3).unwrap().remove(0);
        assert!(sampling_variance_check(&g, &few).is_err());
    }
}
