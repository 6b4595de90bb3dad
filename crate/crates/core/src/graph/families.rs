use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Graph, GraphError};

/// Maximum number of restarts for random regular generation.
pub const RANDOM_REGULAR_RETRY_LIMIT: usize = 10_000;

/// Largest degree for which whole-graph rejection is the default strategy.
///
/// The pairing model produces a simple graph with probability roughly
/// `exp(-(d^2 - 1) / 4)`, about `2.5e-3` at `d = 5` and `2e-11` at `d = 10`.
const FULL_RESTART_MAX_DEGREE: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingStrategy {
    /// Shuffle all half-edges, pair them up, and discard the whole pairing
    /// if it has a loop or a repeated edge. Exactly uniform.
    FullRestart,
    /// Pair half-edges one at a time, drawing only among pairs that keep the
    /// graph simple; restart only when no such pair remains. Approximately
    /// uniform, and the only practical option once `d` exceeds 5 or so.
    Sequential,
}

impl PairingStrategy {
    pub fn default_for(d: usize) -> Self {
        if d <= FULL_RESTART_MAX_DEGREE {
            Self::FullRestart
        } else {
            Self::Sequential
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphFamily {
    /// `K_n`.
    Complete { n: usize },
    /// Cayley graph of `Z_n` with the given offsets; `n/2` contributes degree 1.
    Circulant { n: usize, offsets: Vec<usize> },
    /// `K_{a,a}`.
    CompleteBipartite { a: usize },
    /// `Q_dim`.
    Hypercube { dim: usize },
    /// `copies` disjoint copies of `K_size`.
    DisjointCliques { copies: usize, size: usize },
    RandomRegular {
        n: usize,
        d: usize,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        strategy: Option<PairingStrategy>,
    },
    /// Edge-list file in the `n d` / `u v` text format.
    FromFile { path: std::path::PathBuf },
}

/// Recipe for a graph; building it is deterministic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GraphFamilySpec(pub GraphFamily);

impl GraphFamilySpec {
    pub fn complete(n: usize) -> Self {
        Self(GraphFamily::Complete { n })
    }

    pub fn circulant(n: usize, offsets: Vec<usize>) -> Self {
        Self(GraphFamily::Circulant { n, offsets })
    }

    /// Circulant graph with offsets `1..=d/2` (plus `n/2` when `d` is odd).
    pub fn circulant_with_degree(n: usize, d: usize) -> Self {
        let mut offsets: Vec<usize> = (1..=d / 2).collect();
        if d % 2 == 1 {
            offsets.push(n / 2);
        }
        Self::circulant(n, offsets)
    }

    pub fn complete_bipartite(a: usize) -> Self {
        Self(GraphFamily::CompleteBipartite { a })
    }

    pub fn hypercube(dim: usize) -> Self {
        Self(GraphFamily::Hypercube { dim })
    }

    pub fn disjoint_cliques(copies: usize, size: usize) -> Self {
        Self(GraphFamily::DisjointCliques { copies, size })
    }

    pub fn random_regular(n: usize, d: usize, seed: u64) -> Self {
        Self(GraphFamily::RandomRegular { n, d, seed, strategy: None })
    }

    pub fn from_file(path: impl Into<std::path::PathBuf>) -> Self {
        Self(GraphFamily::FromFile { path: path.into() })
    }

    pub fn build(&self) -> Result<Graph, GraphError> {
        match &self.0 {
            GraphFamily::Complete { n } => complete(*n),
            GraphFamily::Circulant { n, offsets } => circulant(*n, offsets),
            GraphFamily::CompleteBipartite { a } => complete_bipartite(*a),
            GraphFamily::Hypercube { dim } => hypercube(*dim),
            GraphFamily::DisjointCliques { copies, size } => disjoint_cliques(*copies, *size),
            GraphFamily::RandomRegular { n, d, seed, strategy } => {
                let strategy = strategy.unwrap_or_else(|| PairingStrategy::default_for(*d));
                random_regular(*n, *d, *seed, strategy)
            }
            GraphFamily::FromFile { path } => super::read_edge_list(path),
        }
    }
}

fn invalid(family: &'static str, reason: impl Into<String>) -> GraphError {
    GraphError::InvalidParameters { family, reason: reason.into() }
}

fn complete(n: usize) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(invalid("complete", "n must be at least 2"));
    }
    let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    Graph::from_edges(n, n - 1, &edges, format!("complete(n={n})"))
}

fn circulant(n: usize, offsets: &[usize]) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(invalid("circulant", "n must be at least 2"));
    }
    if offsets.is_empty() {
        return Err(invalid("circulant", "at least one offset is required"));
    }
    let mut sorted = offsets.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("circulant", "offsets must be distinct"));
    }
    let mut d = 0;
    for &s in &sorted {
        if s == 0 || 2 * s > n {
            return Err(invalid("circulant", format!("offset {s} outside [1, n/2]")));
        }
        d += if 2 * s == n { 1 } else { 2 };
    }
    let mut edges = Vec::with_capacity(n * d / 2);
    for u in 0..n {
        for &s in &sorted {
            let v = (u + s) % n;
            // the antipodal offset would otherwise be listed from both ends
            if 2 * s == n && v < u {
                continue;
            }
            edges.push((u.min(v), u.max(v)));
        }
    }
    let list = sorted.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",");
    Graph::from_edges(n, d, &edges, format!("circulant(n={n},offsets={list})"))
}

fn complete_bipartite(a: usize) -> Result<Graph, GraphError> {
    if a == 0 {
        return Err(invalid("complete_bipartite", "side size must be positive"));
    }
    let edges: Vec<_> = (0..a).flat_map(|u| (a..2 * a).map(move |v| (u, v))).collect();
    Graph::from_edges(2 * a, a, &edges, format!("complete_bipartite(a={a})"))
}

fn hypercube(dim: usize) -> Result<Graph, GraphError> {
    if dim == 0 || dim > 24 {
        return Err(invalid("hypercube", "dimension must be in [1, 24]"));
    }
    let n = 1usize << dim;
    let edges: Vec<_> = (0..n)
        .flat_map(|u| (0..dim).map(move |b| (u, u ^ (1 << b))))
        .filter(|&(u, v)| u < v)
        .collect();
    Graph::from_edges(n, dim, &edges, format!("hypercube(dim={dim})"))
}

fn disjoint_cliques(copies: usize, size: usize) -> Result<Graph, GraphError> {
    if copies == 0 || size < 2 {
        return Err(invalid("disjoint_cliques", "need copies >= 1 and size >= 2"));
    }
    let edges: Vec<_> = (0..copies)
        .flat_map(|c| {
            let base = c * size;
            (0..size).flat_map(move |i| (i + 1..size).map(move |j| (base + i, base + j)))
        })
        .collect();
    Graph::from_edges(
        copies * size,
        size - 1,
        &edges,
        format!("disjoint_cliques(copies={copies},size={size})"),
    )
}

fn random_regular(
    n: usize,
    d: usize,
    seed: u64,
    strategy: PairingStrategy,
) -> Result<Graph, GraphError> {
    if d >= n {
        return Err(invalid("random_regular", format!("need d < n (n = {n}, d = {d})")));
    }
    if (n * d) % 2 != 0 {
        return Err(GraphError::OddDegreeSum { n, d });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    let tag = match strategy {
        PairingStrategy::FullRestart => "full_restart",
        PairingStrategy::Sequential => "sequential",
    };
    let descriptor = format!("random_regular(n={n},d={d},seed={seed},strategy={tag})");
    for _ in 0..RANDOM_REGULAR_RETRY_LIMIT {
        let edges = match strategy {
            PairingStrategy::FullRestart => full_restart_attempt(&mut points, n, &mut rng),
            PairingStrategy::Sequential => sequential_attempt(n, d, &mut rng),
        };
        if let Some(edges) = edges {
            return Graph::from_edges(n, d, &edges, descriptor);
        }
    }
    Err(GraphError::RetryLimitExceeded { n, d, attempts: RANDOM_REGULAR_RETRY_LIMIT })
}

/// One shot of the configuration model: shuffle the `n*d` half-edges and pair
/// consecutive entries.
fn full_restart_attempt(
    points: &mut [usize],
    n: usize,
    rng: &mut impl Rng,
) -> Option<Vec<(usize, usize)>> {
    points.shuffle(rng);
    let mut edges = Vec::with_capacity(points.len() / 2);
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for pair in points.chunks_exact(2) {
        let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
        if u == v || adjacency[u].contains(&v) {
            return None;
        }
        adjacency[u].push(v);
        edges.push((u, v));
    }
    Some(edges)
}

/// Sequential pairing: repeatedly pick two random remaining half-edges and
/// keep the pair if it neither loops nor repeats an edge. Gives up (so the
/// caller restarts) once no admissible pair is left among the remainder.
fn sequential_attempt(n: usize, d: usize, rng: &mut impl Rng) -> Option<Vec<(usize, usize)>> {
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut edges = Vec::with_capacity(n * d / 2);
    let admissible = |adj: &Vec<Vec<usize>>, u: usize, v: usize| u != v && !adj[u].contains(&v);
    while !stubs.is_empty() {
        let mut placed = false;
        // a bounded number of blind draws; fall back to an exhaustive check
        for _ in 0..64 {
            let i = rng.random_range(0..stubs.len());
            let j = rng.random_range(0..stubs.len());
            if i != j && admissible(&adjacency, stubs[i], stubs[j]) {
                let (u, v) = (stubs[i], stubs[j]);
                adjacency[u].push(v);
                adjacency[v].push(u);
                edges.push((u.min(v), u.max(v)));
                let (hi, lo) = (i.max(j), i.min(j));
                stubs.swap_remove(hi);
                stubs.swap_remove(lo);
                placed = true;
                break;
            }
        }
        if !placed {
            let stuck = !(0..stubs.len()).any(|i| {
                (i + 1..stubs.len()).any(|j| admissible(&adjacency, stubs[i], stubs[j]))
            });
            if stuck {
                return None;
            }
        }
    }
    Some(edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_families_have_expected_shape() {
        let cases = [
            (GraphFamilySpec::complete(4), 4, 3),
            (GraphFamilySpec::circulant(8, vec![1, 2]), 8, 4),
            (GraphFamilySpec::circulant(6, vec![1, 3]), 6, 3),
            (GraphFamilySpec::complete_bipartite(3), 6, 3),
            (GraphFamilySpec::hypercube(3), 8, 3),
            (GraphFamilySpec::disjoint_cliques(2, 2), 4, 1),
            (GraphFamilySpec::circulant_with_degree(2000, 20), 2000, 20),
        ];
        for (spec, n, d) in cases {
            let g = spec.build().unwrap();
            assert_eq!((g.n(), g.d()), (n, d), "{spec:?}");
        }
    }

    #[test]
    fn circulant_rejects_bad_offsets() {
        assert!(GraphFamilySpec::circulant(8, vec![1, 1]).build().is_err());
        assert!(GraphFamilySpec::circulant(8, vec![5]).build().is_err());
        assert!(GraphFamilySpec::circulant(8, vec![0]).build().is_err());
    }

    #[test]
    fn random_regular_is_deterministic_and_simple() {
        for (n, d) in [(10, 3), (20, 3), (50, 5), (100, 10), (200, 20)] {
            let a = GraphFamilySpec::random_regular(n, d, 7).build().unwrap();
            let b = GraphFamilySpec::random_regular(n, d, 7).build().unwrap();
            assert_eq!(a, b);
            assert_eq!((a.n(), a.d()), (n, d));
        }
    }

    #[test]
    fn random_regular_rejects_impossible_parameters() {
        assert!(matches!(
            GraphFamilySpec::random_regular(5, 3, 1).build(),
            Err(GraphError::OddDegreeSum { .. })
        ));
        assert!(GraphFamilySpec::random_regular(4, 4, 1).build().is_err());
    }

    #[test]
    fn full_restart_hits_retry_limit_for_dense_requests() {
        let spec = GraphFamilySpec(GraphFamily::RandomRegular {
            n: 40,
            d: 12,
            seed: 3,
            strategy: Some(PairingStrategy::FullRestart),
        });
        assert!(matches!(spec.build(), Err(GraphError::RetryLimitExceeded { .. })));
    }
}
