use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{Graph, GraphFamilySpec};
use crate::martingale::{trace_for_stream, QuadratureSpec, TraceOrder};
use crate::rng::StreamId;

use super::{upper_quantile, AnalysisError};

/// Largest allowed spread of `q(max |Y|) / ln n` across the sizes.
pub const TREND_FACTOR_LIMIT: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalingFamily {
    /// Offsets `1..=d/2`, plus `n/2` for odd `d`.
    Circulant,
    RandomRegular { seed: u64 },
}

impl ScalingFamily {
    pub fn build(&self, n: usize, d: usize) -> Result<Graph, AnalysisError> {
        let spec = match self {
            ScalingFamily::Circulant => GraphFamilySpec::circulant_with_degree(n, d),
            ScalingFamily::RandomRegular { seed } => GraphFamilySpec::random_regular(n, d, *seed),
        };
        Ok(spec.build()?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    pub family: ScalingFamily,
    pub n_list: Vec<usize>,
    pub d: usize,
    /// Target degree; `d / 2` when absent.
    #[serde(default)]
    pub k: Option<usize>,
    pub traces: usize,
    /// Traces (the first ones) that also integrate `M_n`; all of them when
    /// absent.
    #[serde(default)]
    pub proxy_traces: Option<usize>,
    #[serde(default = "QuadratureSpec::fast")]
    pub quadrature: QuadratureSpec,
    #[serde(default = "default_quantile")]
    pub quantile: f64,
}

fn default_quantile() -> f64 {
    0.999
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub graph: String,
    pub traces: usize,
    pub max_abs_y_quantile: f64,
    /// `max_abs_y_quantile / ln n`.
    pub ratio_y: f64,
    pub proxy_traces: usize,
    pub m_n_quantile: Option<f64>,
    /// `m_n_quantile / (ln n * n / d)`.
    pub ratio_m_n: Option<f64>,
    /// `(ln n)^11 n / d`, for reference.
    pub polylog_cap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingTable {
    pub spec: ScalingSpec,
    pub master_seed: u64,
    pub rows: Vec<ScalingRow>,
    /// `max ratio_y / min ratio_y`.
    pub trend_factor: f64,
    pub passed: bool,
}

impl ScalingTable {
    pub fn write_csv(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "n,d,k,traces,max_abs_y_quantile,ratio_y,proxy_traces,m_n_quantile,ratio_m_n")?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.d,
                r.k,
                r.traces,
                r.max_abs_y_quantile,
                r.ratio_y,
                r.proxy_traces,
                opt(r.m_n_quantile),
                opt(r.ratio_m_n)
            )?;
        }
        Ok(())
    }
}

pub fn scaling_study(spec: &ScalingSpec, seed: u64) -> Result<ScalingTable, AnalysisError> {
    let ns = &spec.n_list;
    if ns.len() < 3 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::InsufficientScaling(ns.clone()));
    }
    if spec.traces == 0 {
        return Err(AnalysisError::InsufficientTrials { what: "a scaling study", needed: 1, got: 0 });
    }
    let k = spec.k.unwrap_or(spec.d / 2);
    if k > spec.d {
        return Err(AnalysisError::DegreeOutOfRange { k, d: spec.d });
    }
    let proxy = spec.proxy_traces.unwrap_or(spec.traces).min(spec.traces);
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let g = spec.family.build(n, spec.d)?;
        let runs = (0..spec.traces as u64)
            .into_par_iter()
            .map(|i| {
                let quad = ((i as usize) < proxy).then_some(&spec.quadrature);
                let tr = trace_for_stream(&g, k, StreamId::new(seed, i), TraceOrder::Random, quad)?;
                Ok((tr.max_abs_increment(), tr.m_n()))
            })
            .collect::<Result<Vec<_>, AnalysisError>>()?;
        let max_y: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let m_n: Vec<f64> = runs.iter().filter_map(|r| r.1).collect();
        let q_y = upper_quantile(&max_y, spec.quantile).expect("nonempty");
        let q_m = upper_quantile(&m_n, spec.quantile);
        let ln_n = (n as f64).ln();
        let per_degree = n as f64 / spec.d as f64;
        rows.push(ScalingRow {
            n,
            d: spec.d,
            k,
            graph: g.descriptor().to_string(),
            traces: spec.traces,
            max_abs_y_quantile: q_y,
            ratio_y: q_y / ln_n,
            proxy_traces: proxy,
            m_n_quantile: q_m,
            ratio_m_n: q_m.map(|q| q / (ln_n * per_degree)),
            polylog_cap: ln_n.powi(11) * per_degree,
        });
    }
    let hi = rows.iter().map(|r| r.ratio_y).fold(f64::NEG_INFINITY, f64::max);
    let lo = rows.iter().map(|r| r.ratio_y).fold(f64::INFINITY, f64::min);
    let trend_factor = hi / lo;
    Ok(ScalingTable {
        spec: spec.clone(),
        master_seed: seed,
        rows,
        trend_factor,
        passed: trend_factor < TREND_FACTOR_LIMIT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(ns: Vec<usize>) -> ScalingSpec {
        ScalingSpec {
            family: ScalingFamily::Circulant,
            n_list: ns,
            d: 6,
            k: None,
            traces: 8,
            proxy_traces: Some(3),
            quadrature: QuadratureSpec::fast(),
            quantile: 0.999,
        }
    }

    #[test]
    fn small_study() {
        let t = scaling_study(&spec(vec![30, 60, 120]), 4).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.rows.iter().all(|r| r.k == 3 && r.m_n_quantile.is_some() && r.proxy_traces == 3));
        assert!(t.trend_factor >= 1.0);
        let mut csv = Vec::new();
        t.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
    }

    #[test]
    fn needs_three_increasing_sizes() {
        assert!(matches!(scaling_study(&spec(vec![50]), 0), Err(AnalysisError::InsufficientScaling(_))));
        assert!(scaling_study(&spec(vec![50, 40, 60]), 0).is_err());
    }

    #[test]
    fn k2_first_increment_is_bounded_by_one() {
        // Y_1 = 2(x - 1/2) for K2 at k = 1, so |Y_1| <= 1 on every trace
        let g = GraphFamilySpec::complete(2).build().unwrap();
        for i in 0..50 {
            let tr = trace_for_stream(&g, 1, StreamId::new(9, i), TraceOrder::Random, None).unwrap();
            assert!(tr.y_values[0].abs() <= 1.0);
            let x = tr.weights[tr.order[0]];
            assert!((tr.y_values[0] - 2.0 * (x - 0.5)).abs() < 1e-14);
        }
    }
}
