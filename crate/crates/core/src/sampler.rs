//! The random subgraph itself.
//!
//! Each vertex gets an independent weight `x(v)` drawn uniformly from
//! `[0, 1)`, and an edge `uv` of the host graph survives iff
//! `x(u) + x(v) >= 1`. Excluding `1.0` from the draw changes nothing of
//! positive probability. Ties `x(u) + x(v) == 1` also have probability zero;
//! they are resolved in favour of keeping the edge.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::rng::StreamId;

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("weight vector has length {found}, graph has {expected} vertices")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vertex {vertex} has degree {degree} outside [0, {d}]")]
    DegreeOutOfRange { vertex: usize, degree: usize, d: usize },
    #[error("weight {value} at vertex {vertex} is outside [0, 1]")]
    WeightOutOfRange { vertex: usize, value: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightAssignment {
    x: Vec<f64>,
    stream: Option<StreamId>,
}

impl WeightAssignment {
    pub fn new(x: Vec<f64>) -> Result<Self, SamplerError> {
        if let Some((vertex, &value)) =
            x.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(SamplerError::WeightOutOfRange { vertex, value });
        }
        Ok(Self { x, stream: None })
    }

    /// `n` i.i.d. uniform `[0, 1)` draws from the given stream.
    pub fn sample(n: usize, stream: StreamId) -> Self {
        let mut rng = stream.rng();
        let mut w = Self::from_rng(n, &mut rng);
        w.stream = Some(stream);
        w
    }

    pub fn from_rng(n: usize, rng: &mut impl Rng) -> Self {
        let x = (0..n).map(|_| rng.random::<f64>()).collect();
        Self { x, stream: None }
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn stream(&self) -> Option<StreamId> {
        self.stream
    }

    /// The mirrored assignment `1 - x(v)`.
    pub fn reflected(&self) -> Self {
        Self { x: self.x.iter().map(|v| 1.0 - v).collect(), stream: None }
    }
}

#[inline]
pub fn edge_kept(xu: f64, xv: f64) -> bool {
    xu + xv >= 1.0
}

pub fn subgraph_degrees(g: &Graph, w: &WeightAssignment) -> Result<Vec<usize>, SamplerError> {
    if w.len() != g.n() {
        return Err(SamplerError::DimensionMismatch { expected: g.n(), found: w.len() });
    }
    let x = w.values();
    Ok((0..g.n())
        .map(|v| {
            let xv = x[v];
            g.neighbors(v).iter().filter(|&&u| edge_kept(x[u as usize], xv)).count()
        })
        .collect())
}

/// `m(H, k)` for `k = 0..=d`, together with `m(H) = max_k m(H, k)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeHistogram {
    pub counts: Vec<usize>,
    pub max_count: usize,
}

impl DegreeHistogram {
    pub fn count(&self, k: usize) -> usize {
        self.counts[k]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn degree_histogram(degrees: &[usize], d: usize) -> Result<DegreeHistogram, SamplerError> {
    let mut counts = vec![0; d + 1];
    for (vertex, &degree) in degrees.iter().enumerate() {
        if degree > d {
            return Err(SamplerError::DegreeOutOfRange { vertex, degree, d });
        }
        counts[degree] += 1;
    }
    let max_count = counts.iter().copied().max().unwrap_or(0);
    Ok(DegreeHistogram { counts, max_count })
}

/// Samples a weight assignment for `stream` and returns its histogram.
pub fn sample_histogram(g: &Graph, stream: StreamId) -> DegreeHistogram {
    let w = WeightAssignment::sample(g.n(), stream);
    let degrees = subgraph_degrees(g, &w).expect("weights sampled for this graph");
    degree_histogram(&degrees, g.d()).expect("subgraph degrees never exceed d")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphFamilySpec;
    use proptest::prelude::*;

    #[test]
    fn keep_rule() {
        assert!(edge_kept(0.7, 0.4));
        assert!(!edge_kept(0.3, 0.3));
        assert!(edge_kept(0.5, 0.5));
    }

    #[test]
    fn extreme_weights() {
        let g = GraphFamilySpec::circulant(8, vec![1, 2]).build().unwrap();
        let ones = WeightAssignment::new(vec![1.0; 8]).unwrap();
        assert_eq!(subgraph_degrees(&g, &ones).unwrap(), vec![4; 8]);
        let zeros = WeightAssignment::new(vec![0.0; 8]).unwrap();
        assert_eq!(subgraph_degrees(&g, &zeros).unwrap(), vec![0; 8]);
    }

    #[test]
    fn triangle_example() {
        let g = GraphFamilySpec::complete(3).build().unwrap();
        let w = WeightAssignment::new(vec![0.9, 0.8, 0.05]).unwrap();
        let deg = subgraph_degrees(&g, &w).unwrap();
        assert_eq!(deg, vec![1, 1, 0]);
        // 0.9 + 0.1 is an exact tie, so the edge (0, 2) is kept
        let tied = WeightAssignment::new(vec![0.9, 0.8, 0.1]).unwrap();
        assert_eq!(subgraph_degrees(&g, &tied).unwrap(), vec![2, 1, 1]);
        let h = degree_histogram(&deg, 2).unwrap();
        assert_eq!(h.counts, vec![1, 2, 0]);
        assert_eq!(h.max_count, 2);
    }

    #[test]
    fn histogram_errors_and_zeros() {
        let h = degree_histogram(&[0; 5], 3).unwrap();
        assert_eq!(h.counts, vec![5, 0, 0, 0]);
        assert_eq!(
            degree_histogram(&[0, 4], 3),
            Err(SamplerError::DegreeOutOfRange { vertex: 1, degree: 4, d: 3 })
        );
        let g = GraphFamilySpec::complete(3).build().unwrap();
        let w = WeightAssignment::new(vec![0.5; 2]).unwrap();
        assert_eq!(
            subgraph_degrees(&g, &w),
            Err(SamplerError::DimensionMismatch { expected: 3, found: 2 })
        );
        assert!(WeightAssignment::new(vec![1.5]).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = WeightAssignment::sample(100, StreamId::new(5, 3));
        let b = WeightAssignment::sample(100, StreamId::new(5, 3));
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_draws_pass_mean_and_ks_checks() {
        let w = WeightAssignment::sample(100_000, StreamId::new(2024, 0));
        let mean = w.values().iter().sum::<f64>() / 1e5;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
        let mut sorted = w.values().to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let ks = sorted
            .iter()
            .enumerate()
            .map(|(i, &v)| ((i + 1) as f64 / n - v).max(v - i as f64 / n))
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    fn graph_strategy() -> impl Strategy<Value = Graph> {
        prop_oneof![
            Just(GraphFamilySpec::complete(5)),
            Just(GraphFamilySpec::circulant(12, vec![1, 3, 6])),
            Just(GraphFamilySpec::hypercube(4)),
            (0u64..50).prop_map(|s| GraphFamilySpec::random_regular(30, 4, s)),
        ]
        .prop_map(|s| s.build().unwrap())
    }

    proptest! {
        #[test]
        fn handshake_and_histogram_total(g in graph_strategy(), seed in any::<u64>()) {
            let w = WeightAssignment::sample(g.n(), StreamId::new(seed, 0));
            let deg = subgraph_degrees(&g, &w).unwrap();
            prop_assert_eq!(deg.iter().sum::<usize>() % 2, 0);
            let h = degree_histogram(&deg, g.d()).unwrap();
            prop_assert_eq!(h.total(), g.n());
            prop_assert_eq!(h.max_count, *h.counts.iter().max().unwrap());
        }

        #[test]
        fn raising_a_weight_never_lowers_a_degree(
            g in graph_strategy(), seed in any::<u64>(), pick in any::<prop::sample::Index>(), bump in 0.0f64..1.0,
        ) {
            let w = WeightAssignment::sample(g.n(), StreamId::new(seed, 1));
            let v = pick.index(g.n());
            let mut x = w.values().to_vec();
            x[v] = x[v] + (1.0 - x[v]) * bump;
            let raised = WeightAssignment::new(x).unwrap();
            let before = subgraph_degrees(&g, &w).unwrap();
            let after = subgraph_degrees(&g, &raised).unwrap();
            prop_assert!(before.iter().zip(&after).all(|(b, a)| a >= b));
        }

        #[test]
        fn reflection_complements_degrees(g in graph_strategy(), seed in any::<u64>()) {
            let w = WeightAssignment::sample(g.n(), StreamId::new(seed, 2));
            let x = w.values();
            let tie = g.edges().any(|(u, v)| x[u] + x[v] == 1.0 || (1.0 - x[u]) + (1.0 - x[v]) == 1.0);
            prop_assume!(!tie);
            let deg = subgraph_degrees(&g, &w).unwrap();
            let refl = subgraph_degrees(&g, &w.reflected()).unwrap();
            prop_assert!(deg.iter().zip(&refl).all(|(a, b)| a + b == g.d()));
            let h = degree_histogram(&deg, g.d()).unwrap();
            let hr = degree_histogram(&refl, g.d()).unwrap();
            for k in 0..=g.d() {
                prop_assert_eq!(h.counts[k], hr.counts[g.d() - k]);
            }
        }
    }
}
