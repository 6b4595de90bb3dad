use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::martingale::{bernstein_tail, trace_for_stream, QuadratureSpec, TraceOrder};
use crate::rng::StreamId;
use crate::sampler::sample_histogram;

use super::{binomial_se, upper_quantile, AnalysisError, SE_MARGIN};

/// Minimum trials for a tail table.
pub const MIN_TAIL_TRIALS: usize = 1000;

/// The pilot run that measures `a*` and `L*` for the Bernstein column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotSpec {
    pub traces: usize,
    #[serde(default = "default_pilot_quantile")]
    pub quantile: f64,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
}

fn default_pilot_quantile() -> f64 {
    0.999
}

impl Default for PilotSpec {
    fn default() -> Self {
        Self { traces: 100, quantile: default_pilot_quantile(), quadrature: QuadratureSpec::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailRow {
    pub z: f64,
    /// Fraction of trials with `|X - n/(d+1)| >= z`.
    pub empirical: f64,
    pub standard_error: f64,
    /// `min(1, 17 n / ((d+1) z^2))`.
    pub chebyshev: f64,
    /// `min(1, exp(...) + P[max |Y| > a*] + P[M_n > L*])`, the failure
    /// probabilities measured on the pilot.
    pub bernstein: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailTable {
    pub graph: String,
    pub k: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub pilot_traces: usize,
    pub pilot_quantile: f64,
    /// Pilot quantile of `max_j |Y_j|`.
    pub a_star: f64,
    /// Pilot quantile of `M_n`.
    pub l_star: f64,
    pub increment_failure: f64,
    pub proxy_failure: f64,
    pub max_deviation: f64,
    pub rows: Vec<TailRow>,
    pub passed: bool,
}

impl TailTable {
    pub fn write_csv(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "z,empirical,standard_error,chebyshev,bernstein,holds")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.z, r.empirical, r.standard_error, r.chebyshev, r.bernstein, r.holds
            )?;
        }
        Ok(())
    }
}

/// Empirical tails of `m(H, k)` around `n/(d+1)` next to the Chebyshev
/// bound from the variance cap and the martingale Bernstein bound.
///
/// Trials `0..trials` of `seed` feed the tail; the pilot uses the streams
/// that follow, so the two never share randomness.
pub fn concentration_report(
    g: &Graph,
    k: usize,
    trials: usize,
    seed: u64,
    z_grid: &[f64],
    pilot: &PilotSpec,
) -> Result<TailTable, AnalysisError> {
    if trials < MIN_TAIL_TRIALS {
        return Err(AnalysisError::InsufficientTrials {
            what: "a tail table",
            needed: MIN_TAIL_TRIALS,
            got: trials,
        });
    }
    if pilot.traces == 0 {
        return Err(AnalysisError::InsufficientTrials { what: "the Bernstein pilot", needed: 1, got: 0 });
    }
    if k > g.d() {
        return Err(AnalysisError::DegreeOutOfRange { k, d: g.d() });
    }
    if let Some(z) = z_grid.iter().find(|z| !(**z >= 0.0)) {
        return Err(AnalysisError::InvalidParameter(format!("tail threshold {z} must be nonnegative")));
    }
    let mean = g.n() as f64 / (g.d() + 1) as f64;
    let deviations: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| (sample_histogram(g, StreamId::new(seed, t)).count(k) as f64 - mean).abs())
        .collect();

    let pilot_runs = (0..pilot.traces as u64)
        .into_par_iter()
        .map(|i| {
            let stream = StreamId::new(seed, trials as u64 + i);
            let tr = trace_for_stream(g, k, stream, TraceOrder::Random, Some(&pilot.quadrature))?;
            Ok((tr.max_abs_increment(), tr.m_n().expect("quadrature was requested")))
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    let max_y: Vec<f64> = pilot_runs.iter().map(|p| p.0).collect();
    let m_n: Vec<f64> = pilot_runs.iter().map(|p| p.1).collect();
    let a_star = upper_quantile(&max_y, pilot.quantile).expect("nonempty pilot");
    let l_star = upper_quantile(&m_n, pilot.quantile).expect("nonempty pilot");
    let frac = |v: &[f64], cut: f64| v.iter().filter(|&&x| x > cut).count() as f64 / v.len() as f64;
    let increment_failure = frac(&max_y, a_star);
    let proxy_failure = frac(&m_n, l_star);

    let cap = 17.0 * mean;
    let mut rows = Vec::with_capacity(z_grid.len());
    for &z in z_grid {
        let empirical = deviations.iter().filter(|&&dv| dv >= z).count() as f64 / trials as f64;
        let standard_error = binomial_se(empirical, trials);
        let chebyshev = if z == 0.0 { 1.0 } else { (cap / (z * z)).min(1.0) };
        let bernstein = if a_star > 0.0 && l_star > 0.0 {
            (bernstein_tail(z, a_star, l_star)? + increment_failure + proxy_failure).min(1.0)
        } else {
            1.0
        };
        let slack = SE_MARGIN * standard_error;
        rows.push(TailRow {
            z,
            empirical,
            standard_error,
            chebyshev,
            bernstein,
            holds: empirical <= chebyshev + slack && empirical <= bernstein + slack,
        });
    }
    Ok(TailTable {
        graph: g.descriptor().to_string(),
        k,
        trials,
        master_seed: seed,
        pilot_traces: pilot.traces,
        pilot_quantile: pilot.quantile,
        a_star,
        l_star,
        increment_failure,
        proxy_failure,
        max_deviation: deviations.iter().copied().fold(0.0, f64::max),
        passed: rows.iter().all(|r| r.holds),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphFamilySpec;

    #[test]
    fn small_circulant_table() {
        let g = GraphFamilySpec::circulant_with_degree(40, 4).build().unwrap();
        let pilot = PilotSpec { traces: 20, ..PilotSpec::default() };
        let t = concentration_report(&g, 2, 1000, 5, &[0.0, 2.0, 4.0, 8.0, 100.0], &pilot).unwrap();
        assert!(t.passed);
        assert_eq!(t.rows[0].empirical, 1.0);
        assert_eq!(t.rows[0].chebyshev, 1.0);
        assert_eq!(t.rows[0].bernstein, 1.0);
        assert_eq!(t.rows[4].empirical, 0.0);
        assert!(t.rows.windows(2).all(|w| w[1].empirical <= w[0].empirical));
        assert!(t.a_star > 0.0 && t.l_star > 0.0);
        let mut csv = Vec::new();
        t.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 6);
    }

    #[test]
    fn rejects_small_runs() {
        let g = GraphFamilySpec::complete(4).build().unwrap();
        assert!(concentration_report(&g, 1, 10, 0, &[1.0], &PilotSpec::default()).is_err());
        assert!(concentration_report(&g, 1, 1000, 0, &[-1.0], &PilotSpec::default()).is_err());
    }
}
