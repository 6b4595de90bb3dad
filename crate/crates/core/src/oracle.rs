//! Exact probabilities of degree events on small graphs.
//!
//! Write each weight as `x_i = 1/2 + s_i * v_i` with a uniform sign `s_i` and
//! a uniform magnitude `v_i` in `[0, 1/2]`, all independent. Then
//! `x_i + x_j >= 1` iff `s_i v_i + s_j v_j >= 0`, which depends only on the
//! signs and on the relative order of the magnitudes. Each of the
//! `n! * 2^n` (ranking, sign vector) pairs is equally likely, so every event
//! about the degree sequence has a probability equal to the fraction of
//! order types on which it holds. [`ExactOracle`] enumerates them all once
//! and keeps the counts needed for degree pmfs, pair joints, and the full
//! distribution of `m(H, k)`.

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exact::Exact;
use crate::graph::Graph;
use crate::sampler::WeightAssignment;

/// Default largest `n` the oracle will enumerate (`8! * 2^8 ~ 1.03e7`).
pub const DEFAULT_ORACLE_CAP: usize = 8;

/// Hard ceiling: beyond this the order-type count overflows the budget of
/// any reasonable run.
const ABSOLUTE_CAP: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error(
        "n = {n} exceeds the oracle cap {cap}: {order_types} order types, \
         about {operations:.3e} basic operations"
    )]
    SizeCapExceeded { n: usize, cap: usize, order_types: u128, operations: f64 },
    #[error("order type has {found} entries, graph has {expected} vertices")]
    SizeMismatch { expected: usize, found: usize },
    #[error("rank vector is not a permutation of 0..{0}")]
    NotAPermutation(usize),
    #[error("pair query needs distinct vertices, got u = v = {0}")]
    SameVertex(usize),
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("degree {k} exceeds d = {d}")]
    DegreeOutOfRange { k: usize, d: usize },
}

/// Signs of `x_i - 1/2` together with the ranking of `|x_i - 1/2|`.
///
/// `rank[i]` is the position of vertex `i` when magnitudes are sorted in
/// increasing order; a larger rank means further from `1/2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderType {
    rank: Vec<usize>,
    signs: Vec<bool>,
}

impl OrderType {
    pub fn new(rank: Vec<usize>, signs: Vec<bool>) -> Result<Self, OracleError> {
        if rank.len() != signs.len() {
            return Err(OracleError::SizeMismatch { expected: rank.len(), found: signs.len() });
        }
        let mut seen = vec![false; rank.len()];
        for &r in &rank {
            if r >= rank.len() || std::mem::replace(&mut seen[r], true) {
                return Err(OracleError::NotAPermutation(rank.len()));
            }
        }
        Ok(Self { rank, signs })
    }

    /// The order type realised by a weight assignment. Equal magnitudes are
    /// broken by vertex index.
    pub fn from_weights(w: &WeightAssignment) -> Self {
        let x = w.values();
        let magnitude = |i: usize| if x[i] > 0.5 { x[i] - 0.5 } else { 0.5 - x[i] };
        let mut by_magnitude: Vec<usize> = (0..x.len()).collect();
        by_magnitude.sort_by(|&a, &b| magnitude(a).total_cmp(&magnitude(b)).then(a.cmp(&b)));
        let mut rank = vec![0; x.len()];
        for (r, &v) in by_magnitude.iter().enumerate() {
            rank[v] = r;
        }
        let signs = x.iter().map(|&v| v > 0.5).collect();
        Self { rank, signs }
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    pub fn rank(&self) -> &[usize] {
        &self.rank
    }

    pub fn signs(&self) -> &[bool] {
        &self.signs
    }

    /// Whether the edge `ij` survives under this order type.
    #[inline]
    pub fn keeps(&self, i: usize, j: usize) -> bool {
        edge_survives(self.signs[i], self.signs[j], self.rank[i], self.rank[j])
    }
}

#[inline]
fn edge_survives(si: bool, sj: bool, ri: usize, rj: usize) -> bool {
    match (si, sj) {
        (true, true) => true,
        (false, false) => false,
        (true, false) => ri > rj,
        (false, true) => rj > ri,
    }
}

fn order_type_count(n: usize) -> u128 {
    (1..=n as u128).product::<u128>() << n
}

/// Rough operation count of a full enumeration, `n! * 2^n * n * d`.
pub fn estimated_operations(n: usize, d: usize) -> f64 {
    order_type_count(n) as f64 * (n * d.max(1)) as f64
}

fn check_cap(g: &Graph, cap: usize) -> Result<(), OracleError> {
    let n = g.n();
    if n > cap.min(ABSOLUTE_CAP) {
        return Err(OracleError::SizeCapExceeded {
            n,
            cap,
            order_types: order_type_count(n),
            operations: estimated_operations(n, g.d()),
        });
    }
    Ok(())
}

pub fn degrees_of_order_type(
    g: &Graph,
    ot: &OrderType,
    cap: usize,
) -> Result<Vec<usize>, OracleError> {
    check_cap(g, cap)?;
    if ot.len() != g.n() {
        return Err(OracleError::SizeMismatch { expected: g.n(), found: ot.len() });
    }
    let mut deg = vec![0; g.n()];
    for (u, v) in g.edges() {
        if ot.keeps(u, v) {
            deg[u] += 1;
            deg[v] += 1;
        }
    }
    Ok(deg)
}

/// Order-type counts for every degree event the oracle answers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactOracle {
    n: usize,
    d: usize,
    total: u64,
    /// `[v * (d+1) + k]`: order types with `deg(v) = k`.
    vertex: Vec<u64>,
    /// `[pair(u, v) * (d+1) + k]` for `u < v`: both degrees equal `k`.
    pair: Vec<u64>,
    /// `[k * (n+1) + m]`: order types with exactly `m` vertices of degree `k`.
    count_dist: Vec<u64>,
    /// Codegrees for the pair table, in the same order.
    codegrees: Vec<usize>,
}

impl ExactOracle {
    /// Enumerates all order types of `g`, in parallel over sign vectors.
    pub fn enumerate(g: &Graph, cap: usize) -> Result<Self, OracleError> {
        check_cap(g, cap)?;
        let n = g.n();
        let d = g.d();
        let pairs = n * (n.saturating_sub(1)) / 2;
        let edges: Vec<(usize, usize)> = g.edges().collect();
        let empty = || Tally::new(n, d, pairs);
        let tally = (0u32..1 << n)
            .into_par_iter()
            .fold(empty, |mut acc, mask| {
                acc.sign_vector(n, mask, &edges);
                acc
            })
            .reduce(empty, Tally::merge);
        let codegrees = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .map(|(u, v)| g.codegree(u, v).expect("distinct vertices"))
            .collect();
        Ok(Self {
            n,
            d,
            total: order_type_count(n) as u64,
            vertex: tally.vertex,
            pair: tally.pair,
            count_dist: tally.count_dist,
            codegrees,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of order types, `n! * 2^n`.
    pub fn order_types(&self) -> u64 {
        self.total
    }

    fn ratio(&self, count: u64) -> Exact {
        Exact::new(count, self.total)
    }

    fn check_vertex(&self, v: usize) -> Result<(), OracleError> {
        if v >= self.n {
            return Err(OracleError::VertexOutOfRange { vertex: v, n: self.n });
        }
        Ok(())
    }

    fn check_k(&self, k: usize) -> Result<(), OracleError> {
        if k > self.d {
            return Err(OracleError::DegreeOutOfRange { k, d: self.d });
        }
        Ok(())
    }

    fn pair_index(&self, u: usize, v: usize) -> usize {
        let (u, v) = (u.min(v), u.max(v));
        u * (2 * self.n - u - 1) / 2 + (v - u - 1)
    }

    /// `P[deg_H(v) = k]` for `k = 0..=d`.
    pub fn degree_pmf(&self, v: usize) -> Result<Vec<Exact>, OracleError> {
        self.check_vertex(v)?;
        let row = &self.vertex[v * (self.d + 1)..(v + 1) * (self.d + 1)];
        Ok(row.iter().map(|&c| self.ratio(c)).collect())
    }

    /// `P[deg_H(u) = k and deg_H(v) = k]`.
    pub fn joint(&self, u: usize, v: usize, k: usize) -> Result<Exact, OracleError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        self.check_k(k)?;
        if u == v {
            return Err(OracleError::SameVertex(u));
        }
        Ok(self.ratio(self.pair[self.pair_index(u, v) * (self.d + 1) + k]))
    }

    /// `(E[X], Var X)` for `X = m(H, k)`, from the vertex and pair tables.
    pub fn mean_var(&self, k: usize) -> Result<(Exact, Exact), OracleError> {
        self.check_k(k)?;
        let stride = self.d + 1;
        let singles: u64 = (0..self.n).map(|v| self.vertex[v * stride + k]).sum();
        let pairs: u64 = (0..self.pair.len() / stride).map(|p| self.pair[p * stride + k]).sum();
        let mean = self.ratio(singles);
        let second = self.ratio(singles + 2 * pairs);
        let var = &second - &(&mean * &mean);
        Ok((mean, var))
    }

    /// Exact distribution of `m(H, k)`: entry `m` is `P[m(H, k) = m]`.
    pub fn count_distribution(&self, k: usize) -> Result<Vec<Exact>, OracleError> {
        self.check_k(k)?;
        let row = &self.count_dist[k * (self.n + 1)..(k + 1) * (self.n + 1)];
        Ok(row.iter().map(|&c| self.ratio(c)).collect())
    }

    /// `P[|m(H, k) - n/(d+1)| >= z]`, exactly.
    pub fn tail(&self, k: usize, z: &Exact) -> Result<Exact, OracleError> {
        let dist = self.count_distribution(k)?;
        let mean = Exact::new(self.n as u64, (self.d + 1) as u64);
        let mut acc = Exact::zero();
        for (m, p) in dist.iter().enumerate() {
            if (&Exact::from_integer(m as u64) - &mean).abs() >= *z {
                acc = &acc + p;
            }
        }
        Ok(acc)
    }

    /// `(1/(d+1)^2) * (1 + 16 c / (d+1))` for codegree `c`.
    pub fn joint_bound(&self, codegree: usize) -> Exact {
        let d1 = (self.d + 1) as u64;
        let inner = &Exact::one() + &Exact::new(16 * codegree as u64, d1);
        &inner * &Exact::new(1, d1 * d1)
    }

    /// Every `(u, v, k)` with `u < v`, with the joint probability and its bound.
    pub fn joint_table(&self) -> Vec<JointEntry> {
        let stride = self.d + 1;
        let mut out = Vec::with_capacity(self.pair.len());
        for u in 0..self.n {
            for v in u + 1..self.n {
                let p = self.pair_index(u, v);
                let codegree = self.codegrees[p];
                for k in 0..stride {
                    out.push(JointEntry {
                        u,
                        v,
                        k,
                        codegree,
                        probability: self.ratio(self.pair[p * stride + k]),
                        bound: self.joint_bound(codegree),
                    });
                }
            }
        }
        out
    }

    /// Largest `E[1_u 1_v] (d+1)^2` over all pairs and `k`. Reported only.
    pub fn worst_joint_ratio(&self) -> Exact {
        let d1 = (self.d + 1) as u64;
        let scale = Exact::from_integer(d1 * d1);
        let worst = self.pair.iter().copied().max().unwrap_or(0);
        &self.ratio(worst) * &scale
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct JointEntry {
    pub u: usize,
    pub v: usize,
    pub k: usize,
    pub codegree: usize,
    pub probability: Exact,
    pub bound: Exact,
}

struct Tally {
    d: usize,
    n: usize,
    vertex: Vec<u64>,
    pair: Vec<u64>,
    count_dist: Vec<u64>,
}

impl Tally {
    fn new(n: usize, d: usize, pairs: usize) -> Self {
        Self {
            d,
            n,
            vertex: vec![0; n * (d + 1)],
            pair: vec![0; pairs * (d + 1)],
            count_dist: vec![0; (d + 1) * (n + 1)],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in [
            (&mut self.vertex, &other.vertex),
            (&mut self.pair, &other.pair),
            (&mut self.count_dist, &other.count_dist),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self
    }

    /// All `n!` rankings for one sign vector, in lexicographic order.
    fn sign_vector(&mut self, n: usize, mask: u32, edges: &[(usize, usize)]) {
        let sign = |v: usize| mask >> v & 1 == 1;
        let mut base = vec![0usize; n];
        // (positive end, negative end): kept iff the positive end ranks higher
        let mut mixed = Vec::new();
        for &(u, v) in edges {
            match (sign(u), sign(v)) {
                (true, true) => {
                    base[u] += 1;
                    base[v] += 1;
                }
                (false, false) => {}
                (true, false) => mixed.push((u, v)),
                (false, true) => mixed.push((v, u)),
            }
        }
        let stride = self.d + 1;
        let mut rank: Vec<usize> = (0..n).collect();
        let mut deg = vec![0usize; n];
        let mut hist = vec![0usize; stride];
        loop {
            deg.copy_from_slice(&base);
            for &(p, q) in &mixed {
                if rank[p] > rank[q] {
                    deg[p] += 1;
                    deg[q] += 1;
                }
            }
            hist.iter_mut().for_each(|h| *h = 0);
            let mut pair = 0;
            for u in 0..n {
                let du = deg[u];
                self.vertex[u * stride + du] += 1;
                hist[du] += 1;
                for &dv in &deg[u + 1..] {
                    if du == dv {
                        self.pair[pair * stride + du] += 1;
                    }
                    pair += 1;
                }
            }
            for (k, &m) in hist.iter().enumerate() {
                self.count_dist[k * (self.n + 1) + m] += 1;
            }
            if !next_permutation(&mut rank) {
                break;
            }
        }
    }
}

/// Advances to the next lexicographic permutation; false after the last one.
fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// `P[deg_H(v) = k]` for every `k`, by full enumeration.
pub fn exact_degree_pmf(g: &Graph, v: usize, cap: usize) -> Result<Vec<Exact>, OracleError> {
    ExactOracle::enumerate(g, cap)?.degree_pmf(v)
}

/// `E[1_u 1_v]` for the event that both `u` and `v` have degree `k`.
pub fn exact_joint(
    g: &Graph,
    u: usize,
    v: usize,
    k: usize,
    cap: usize,
) -> Result<Exact, OracleError> {
    if u == v {
        return Err(OracleError::SameVertex(u));
    }
    ExactOracle::enumerate(g, cap)?.joint(u, v, k)
}

pub fn exact_mean_var(g: &Graph, k: usize, cap: usize) -> Result<(Exact, Exact), OracleError> {
    ExactOracle::enumerate(g, cap)?.mean_var(k)
}

/// Variance recomputed from the count distribution; an independent route
/// to the pair-table formula used by [`ExactOracle::mean_var`].
pub fn variance_from_distribution(dist: &[Exact]) -> Exact {
    let mut first = Exact::zero();
    let mut second = Exact::zero();
    for (m, p) in dist.iter().enumerate() {
        let m = Exact::from_integer(BigInt::from(m));
        first = &first + &(&m * p);
        second = &second + &(&(&m * &m) * p);
    }
    &second - &(&first * &first)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphFamilySpec;
    use crate::sampler::subgraph_degrees;

    fn build(spec: GraphFamilySpec) -> Graph {
        spec.build().unwrap()
    }

    #[test]
    fn permutation_enumeration_visits_n_factorial() {
        let mut p = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 24);
        assert_eq!(p, vec![3, 2, 1, 0]);
    }

    #[test]
    fn trivial_order_types() {
        let g = build(GraphFamilySpec::complete(4));
        let all_up = OrderType::new(vec![0, 1, 2, 3], vec![true; 4]).unwrap();
        assert_eq!(degrees_of_order_type(&g, &all_up, 8).unwrap(), vec![3; 4]);
        let all_down = OrderType::new(vec![3, 2, 1, 0], vec![false; 4]).unwrap();
        assert_eq!(degrees_of_order_type(&g, &all_down, 8).unwrap(), vec![0; 4]);

        let k2 = build(GraphFamilySpec::complete(2));
        let ot = OrderType::new(vec![1, 0], vec![true, false]).unwrap();
        assert_eq!(degrees_of_order_type(&k2, &ot, 8).unwrap(), vec![1, 1]);
        let ot = OrderType::new(vec![0, 1], vec![true, false]).unwrap();
        assert_eq!(degrees_of_order_type(&k2, &ot, 8).unwrap(), vec![0, 0]);
    }

    #[test]
    fn order_type_validation() {
        assert_eq!(OrderType::new(vec![0, 0], vec![true, true]), Err(OracleError::NotAPermutation(2)));
        assert!(OrderType::new(vec![0, 1], vec![true]).is_err());
        let g = build(GraphFamilySpec::complete(4));
        let ot = OrderType::new(vec![0, 1], vec![true, true]).unwrap();
        assert!(matches!(
            degrees_of_order_type(&g, &ot, 8),
            Err(OracleError::SizeMismatch { expected: 4, found: 2 })
        ));
    }

    /// Every order type of K_4, realised by concrete weights and pushed
    /// through the sampler's threshold rule.
    #[test]
    fn order_type_predicate_matches_concrete_realisations() {
        for spec in [GraphFamilySpec::complete(4), GraphFamilySpec::circulant(5, vec![1, 2])] {
            let g = build(spec);
            let n = g.n();
            let mut rank: Vec<usize> = (0..n).collect();
            loop {
                for mask in 0u32..1 << n {
                    let signs: Vec<bool> = (0..n).map(|v| mask >> v & 1 == 1).collect();
                    let x: Vec<f64> = (0..n)
                        .map(|v| {
                            let mag = (rank[v] + 1) as f64 / (2.0 * (n + 1) as f64);
                            if signs[v] { 0.5 + mag } else { 0.5 - mag }
                        })
                        .collect();
                    let w = WeightAssignment::new(x).unwrap();
                    let ot = OrderType::new(rank.clone(), signs).unwrap();
                    assert_eq!(OrderType::from_weights(&w), ot);
                    assert_eq!(
                        degrees_of_order_type(&g, &ot, 8).unwrap(),
                        subgraph_degrees(&g, &w).unwrap()
                    );
                }
                if !next_permutation(&mut rank) {
                    break;
                }
            }
        }
    }

    #[test]
    fn pmf_is_uniform_on_small_graphs() {
        for (spec, d) in [
            (GraphFamilySpec::complete(2), 1),
            (GraphFamilySpec::complete(4), 3),
            (GraphFamilySpec::circulant(6, vec![1, 3]), 3),
        ] {
            let g = build(spec);
            let oracle = ExactOracle::enumerate(&g, 8).unwrap();
            for v in 0..g.n() {
                let pmf = oracle.degree_pmf(v).unwrap();
                assert!(pmf.iter().all(|p| *p == Exact::new(1, d + 1)));
            }
        }
    }

    #[test]
    fn single_edge_mean_and_variance() {
        let g = build(GraphFamilySpec::complete(2));
        let (mean, var) = exact_mean_var(&g, 0, 8).unwrap();
        assert_eq!(mean, Exact::one());
        assert_eq!(var, Exact::one());
    }

    #[test]
    fn disjoint_components_are_independent() {
        let g = build(GraphFamilySpec::disjoint_cliques(2, 2));
        assert_eq!(exact_joint(&g, 0, 2, 0, 8).unwrap(), Exact::new(1, 4));
        assert_eq!(exact_joint(&g, 1, 3, 1, 8).unwrap(), Exact::new(1, 4));
    }

    #[test]
    fn cap_and_argument_errors() {
        let g = build(GraphFamilySpec::circulant(9, vec![1]));
        let err = ExactOracle::enumerate(&g, 8).unwrap_err();
        assert!(matches!(err, OracleError::SizeCapExceeded { n: 9, cap: 8, .. }));
        assert!(err.to_string().contains("185794560 order types"));
        let k2 = build(GraphFamilySpec::complete(2));
        assert_eq!(exact_joint(&k2, 1, 1, 0, 8), Err(OracleError::SameVertex(1)));
        let o = ExactOracle::enumerate(&k2, 8).unwrap();
        assert!(matches!(o.mean_var(2), Err(OracleError::DegreeOutOfRange { k: 2, d: 1 })));
        assert!(matches!(o.degree_pmf(5), Err(OracleError::VertexOutOfRange { .. })));
    }

    #[test]
    fn variance_routes_agree_and_totals_sum() {
        let g = build(GraphFamilySpec::complete_bipartite(3));
        let o = ExactOracle::enumerate(&g, 8).unwrap();
        let mut mean_total = Exact::zero();
        for k in 0..=3 {
            let (mean, var) = o.mean_var(k).unwrap();
            let dist = o.count_distribution(k).unwrap();
            assert_eq!(variance_from_distribution(&dist), var);
            mean_total = &mean_total + &mean;
        }
        assert_eq!(mean_total, Exact::from_integer(6));
        for v in 0..6 {
            let s = o.degree_pmf(v).unwrap().iter().fold(Exact::zero(), |a, p| &a + p);
            assert_eq!(s, Exact::one());
        }
        for u in 0..6 {
            for v in 0..6 {
                if u != v {
                    assert_eq!(o.joint(u, v, 2).unwrap(), o.joint(v, u, 2).unwrap());
                }
            }
        }
    }

    #[test]
    fn pair_bound_fails_on_edges_without_common_neighbours() {
        // both ends of K_2 have degree 0 exactly when the edge is dropped
        let k2 = ExactOracle::enumerate(&build(GraphFamilySpec::complete(2)), 8).unwrap();
        assert_eq!(k2.joint(0, 1, 0).unwrap(), Exact::new(1, 2));
        assert!(k2.joint(0, 1, 0).unwrap() > k2.joint_bound(0));

        let g = build(GraphFamilySpec::hypercube(3));
        let q3 = ExactOracle::enumerate(&g, 8).unwrap();
        let p = q3.joint(0, 1, 0).unwrap();
        assert_eq!(p, Exact::new(19, 180));
        assert!(p > q3.joint_bound(0));

        let reps = 40_000;
        let hits = (0..reps)
            .filter(|&t| {
                let w = WeightAssignment::sample(8, crate::rng::StreamId::new(17, t));
                let deg = subgraph_degrees(&g, &w).unwrap();
                deg[0] == 0 && deg[1] == 0
            })
            .count();
        let freq = hits as f64 / reps as f64;
        let se = (freq * (1.0 - freq) / reps as f64).sqrt();
        assert!((freq - 19.0 / 180.0).abs() < 4.0 * se, "{freq}");
    }
}
