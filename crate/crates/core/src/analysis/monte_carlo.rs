use rayon::prelude::*;
use serde::Serialize;

use crate::graph::Graph;
use crate::rng::StreamId;
use crate::sampler::{sample_histogram, DegreeHistogram};

use super::{AnalysisError, ExperimentConfig};

/// Summary of `m(H, k)` over independent trials.
///
/// Sums are kept as integers, so the mean and the Bessel-corrected variance
/// are computed from exact totals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountStats {
    pub k: usize,
    pub trials: usize,
    pub mean: f64,
    /// `None` for a single trial.
    pub variance: Option<f64>,
    pub min: usize,
    pub max: usize,
    pub sum: u64,
    pub sum_sq: u128,
}

impl CountStats {
    pub fn from_counts(k: usize, counts: &[usize]) -> Self {
        let trials = counts.len();
        let sum: u64 = counts.iter().map(|&c| c as u64).sum();
        let sum_sq: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
        let variance = (trials > 1).then(|| {
            let t = trials as u128;
            let numer = t * sum_sq - (sum as u128) * (sum as u128);
            numer as f64 / (t * (t - 1)) as f64
        });
        Self {
            k,
            trials,
            mean: sum as f64 / trials.max(1) as f64,
            variance,
            min: counts.iter().copied().min().unwrap_or(0),
            max: counts.iter().copied().max().unwrap_or(0),
            sum,
            sum_sq,
        }
    }

    /// Standard error of the mean, when the variance is defined.
    pub fn standard_error(&self) -> Option<f64> {
        self.variance.map(|v| (v / self.trials as f64).sqrt())
    }
}

/// Histograms for trials `0..trials` of `seed`, in trial order.
pub fn sample_trials(g: &Graph, trials: usize, seed: u64) -> Vec<DegreeHistogram> {
    (0..trials as u64).into_par_iter().map(|t| sample_histogram(g, StreamId::new(seed, t))).collect()
}

pub fn monte_carlo(
    g: &Graph,
    ks: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<CountStats>, AnalysisError> {
    if trials == 0 {
        return Err(AnalysisError::InsufficientTrials { what: "Monte Carlo", needed: 1, got: 0 });
    }
    if let Some(&k) = ks.iter().find(|&&k| k > g.d()) {
        return Err(AnalysisError::DegreeOutOfRange { k, d: g.d() });
    }
    let hists = sample_trials(g, trials, seed);
    Ok(ks
        .iter()
        .map(|&k| {
            let counts: Vec<usize> = hists.iter().map(|h| h.count(k)).collect();
            CountStats::from_counts(k, &counts)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub graph: String,
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    pub master_seed: u64,
    /// `n / (d + 1)`.
    pub expected_mean: f64,
    /// `17 n / (d + 1)`.
    pub variance_cap: f64,
    pub kappa: f64,
    pub stats: Vec<CountStats>,
}

/// Runs the configured experiment. `fallback_seed` is used when the config
/// does not fix its own.
pub fn run_monte_carlo(
    cfg: &ExperimentConfig,
    fallback_seed: u64,
) -> Result<MonteCarloReport, AnalysisError> {
    cfg.validate()?;
    let g = cfg.graph.build()?;
    let seed = cfg.master_seed.unwrap_or(fallback_seed);
    let ks = cfg.k_set.resolve(g.d())?;
    let stats = monte_carlo(&g, &ks, cfg.trials, seed)?;
    let (n, d) = (g.n(), g.d());
    Ok(MonteCarloReport {
        graph: g.descriptor().to_string(),
        n,
        d,
        trials: cfg.trials,
        master_seed: seed,
        expected_mean: n as f64 / (d + 1) as f64,
        variance_cap: 17.0 * n as f64 / (d + 1) as f64,
        kappa: cfg.kappa_constant * (n as f64).ln(),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::KSet;
    use crate::graph::GraphFamilySpec;

    #[test]
    fn count_stats_match_direct_formulas() {
        let s = CountStats::from_counts(0, &[3, 5, 4, 8]);
        assert_eq!(s.mean, 5.0);
        assert!((s.variance.unwrap() - 14.0 / 3.0).abs() < 1e-15);
        assert_eq!((s.min, s.max), (3, 8));
        let one = CountStats::from_counts(0, &[7]);
        assert_eq!(one.variance, None);
        assert_eq!(one.standard_error(), None);
    }

    #[test]
    fn k4_means_are_near_one() {
        let g = GraphFamilySpec::complete(4).build().unwrap();
        let stats = monte_carlo(&g, &[0, 1, 2, 3], 20_000, 9).unwrap();
        for s in &stats {
            assert!((s.mean - 1.0).abs() < 0.05, "k {}: {}", s.k, s.mean);
        }
        let total: u64 = stats.iter().map(|s| s.sum).sum();
        assert_eq!(total, 4 * 20_000);
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let g = GraphFamilySpec::circulant(30, vec![1, 2]).build().unwrap();
        let a = monte_carlo(&g, &[1, 2], 200, 4).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| monte_carlo(&g, &[1, 2], 200, 4).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn config_errors() {
        let mut cfg = ExperimentConfig {
            graph: GraphFamilySpec::complete(3),
            k_set: KSet::All,
            trials: 0,
            master_seed: None,
            kappa_constant: 1.0,
            quadrature: Default::default(),
        };
        assert!(run_monte_carlo(&cfg, 1).is_err());
        cfg.trials = 1;
        let r = run_monte_carlo(&cfg, 1).unwrap();
        assert!(r.stats.iter().all(|s| s.variance.is_none()));
        cfg.k_set = KSet::List(vec![3]);
        assert!(run_monte_carlo(&cfg, 1).is_err());
    }
}
