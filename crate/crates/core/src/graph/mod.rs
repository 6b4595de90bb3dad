//! Immutable d-regular graphs in compressed-row layout.
//!
//! Every [`Graph`] is checked on construction: each vertex has exactly `d`
//! distinct neighbours, there are no self-loops and adjacency is symmetric.
//! Neighbour lists are stored sorted, so membership and rank queries are
//! `O(log d)` and codegrees are a linear merge.

mod families;
mod io;

pub use families::{GraphFamily, GraphFamilySpec, PairingStrategy, RANDOM_REGULAR_RETRY_LIMIT};
pub use io::{parse_edge_list, read_edge_list, write_edge_list};

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid parameters for {family}: {reason}")]
    InvalidParameters { family: &'static str, reason: String },
    #[error("n*d must be even (n = {n}, d = {d})")]
    OddDegreeSum { n: usize, d: usize },
    #[error("random regular generation (n = {n}, d = {d}) failed after {attempts} restarts")]
    RetryLimitExceeded { n: usize, d: usize, attempts: usize },
    #[error("vertex {vertex} has degree {found}, expected {expected}")]
    NotRegular { vertex: usize, found: usize, expected: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("codegree is undefined for u = v = {0}")]
    SameVertex(usize),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A simple d-regular graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    d: usize,
    neighbors: Vec<u32>,
    descriptor: String,
}

impl Graph {
    /// Builds a graph from an undirected edge list and checks d-regularity.
    pub fn from_edges(
        n: usize,
        d: usize,
        edges: &[(usize, usize)],
        descriptor: impl Into<String>,
    ) -> Result<Self, GraphError> {
        if (n * d) % 2 != 0 {
            return Err(GraphError::OddDegreeSum { n, d });
        }
        let mut lists: Vec<Vec<u32>> = vec![Vec::with_capacity(d); n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            lists[u].push(v as u32);
            lists[v].push(u as u32);
        }
        let mut neighbors = Vec::with_capacity(n * d);
        for (u, list) in lists.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                let v = w[0] as usize;
                return Err(GraphError::DuplicateEdge(u.min(v), u.max(v)));
            }
            if list.len() != d {
                return Err(GraphError::NotRegular { vertex: u, found: list.len(), expected: d });
            }
            neighbors.extend_from_slice(list);
        }
        Ok(Self { n, d, neighbors, descriptor: descriptor.into() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    /// Sorted neighbours of `u`.
    #[inline]
    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.neighbors[u * self.d..(u + 1) * self.d]
    }

    pub fn is_adjacent(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.n * self.d / 2
    }

    /// Number of common neighbours of `u` and `v`.
    pub fn codegree(&self, u: usize, v: usize) -> Result<usize, GraphError> {
        if u == v {
            return Err(GraphError::SameVertex(u));
        }
        for w in [u, v] {
            if w >= self.n {
                return Err(GraphError::VertexOutOfRange { vertex: w, n: self.n });
            }
        }
        Ok(sorted_intersection_len(self.neighbors(u), self.neighbors(v)))
    }

    /// Sum of `codegree(u, v)` over all ordered pairs `u != v`.
    ///
    /// Computed by direct pair summation over vertices at distance two, not
    /// through the neighbourhood-pair identity, so that the identity
    /// `n*d*(d-1)` can be checked against it.
    pub fn codegree_sum(&self) -> u64 {
        let mut seen = vec![usize::MAX; self.n];
        let mut total = 0u64;
        for u in 0..self.n {
            for &w in self.neighbors(u) {
                for &v in self.neighbors(w as usize) {
                    let v = v as usize;
                    if v == u || seen[v] == u {
                        continue;
                    }
                    seen[v] = u;
                    total += sorted_intersection_len(self.neighbors(u), self.neighbors(v)) as u64;
                }
            }
        }
        total
    }

    /// Hex SHA-256 of the canonical edge-list serialisation.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        let mut buf = Vec::new();
        write_edge_list(self, &mut buf).expect("writing to a Vec cannot fail");
        hasher.update(&buf);
        hex::encode(hasher.finalize())
    }
}

fn sorted_intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(n: usize) -> Graph {
        GraphFamilySpec::complete(n).build().unwrap()
    }

    #[test]
    fn complete_graph_codegrees() {
        let g = k(4);
        assert_eq!((g.n(), g.d()), (4, 3));
        for u in 0..4 {
            for v in 0..4 {
                if u != v {
                    assert_eq!(g.codegree(u, v).unwrap(), 2);
                }
            }
        }
        assert!(matches!(g.codegree(1, 1), Err(GraphError::SameVertex(1))));
    }

    #[test]
    fn bipartite_codegrees() {
        let g = GraphFamilySpec::complete_bipartite(3).build().unwrap();
        assert_eq!(g.codegree(0, 1).unwrap(), 3);
        assert_eq!(g.codegree(0, 3).unwrap(), 0);
    }

    #[test]
    fn codegree_sums() {
        assert_eq!(k(4).codegree_sum(), 24);
        assert_eq!(k(2).codegree_sum(), 0);
        let c = GraphFamilySpec::circulant(8, vec![1, 2]).build().unwrap();
        assert_eq!(c.codegree_sum(), 96);
        // brute-force cross-check over all ordered pairs
        let mut direct = 0;
        for u in 0..8 {
            for v in 0..8 {
                if u != v {
                    direct += c.codegree(u, v).unwrap() as u64;
                }
            }
        }
        assert_eq!(direct, 96);
    }

    #[test]
    fn rejects_irregular_and_malformed_edge_lists() {
        assert!(matches!(
            Graph::from_edges(3, 2, &[(0, 1), (1, 2)], "path"),
            Err(GraphError::NotRegular { vertex: 0, found: 1, expected: 2 })
        ));
        assert!(matches!(
            Graph::from_edges(2, 1, &[(0, 0)], "loop"),
            Err(GraphError::SelfLoop(0))
        ));
        assert!(matches!(
            Graph::from_edges(2, 2, &[(0, 1), (1, 0)], "multi"),
            Err(GraphError::DuplicateEdge(0, 1))
        ));
        assert!(matches!(Graph::from_edges(3, 1, &[], "odd"), Err(GraphError::OddDegreeSum { .. })));
    }
}
