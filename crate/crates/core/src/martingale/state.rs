use crate::graph::Graph;
use crate::sampler::edge_kept;

use super::MartingaleError;

/// What has been revealed after the first `prefix` vertices of the order.
///
/// Per vertex it tracks the number of unrevealed neighbours `t(u, j)` and
/// the sorted weights of revealed neighbours, from which the exceedance
/// count `h(u, y, j) = #{w revealed : x(w) + y >= 1}` is a binary search.
#[derive(Clone, Debug)]
pub struct RevealState<'g> {
    graph: &'g Graph,
    order: Vec<usize>,
    position: Vec<usize>,
    prefix: usize,
    x: Vec<f64>,
    unrevealed: Vec<usize>,
    neighbor_weights: Vec<Vec<f64>>,
}

impl<'g> RevealState<'g> {
    pub fn new(graph: &'g Graph, order: Vec<usize>) -> Result<Self, MartingaleError> {
        let n = graph.n();
        if order.len() != n {
            return Err(MartingaleError::NotAPermutation(n));
        }
        let mut position = vec![usize::MAX; n];
        for (i, &v) in order.iter().enumerate() {
            if v >= n || position[v] != usize::MAX {
                return Err(MartingaleError::NotAPermutation(n));
            }
            position[v] = i;
        }
        Ok(Self {
            graph,
            order,
            position,
            prefix: 0,
            x: vec![f64::NAN; n],
            unrevealed: vec![graph.d(); n],
            neighbor_weights: vec![Vec::with_capacity(graph.d()); n],
        })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Number of revealed vertices `j`.
    pub fn prefix(&self) -> usize {
        self.prefix
    }

    pub fn is_complete(&self) -> bool {
        self.prefix == self.order.len()
    }

    /// The vertex revealed at the next step, if any.
    pub fn next_vertex(&self) -> Option<usize> {
        self.order.get(self.prefix).copied()
    }

    pub fn is_revealed(&self, v: usize) -> bool {
        self.position[v] < self.prefix
    }

    pub fn weight(&self, v: usize) -> Option<f64> {
        self.is_revealed(v).then(|| self.x[v])
    }

    /// `t(v, j)`: neighbours of `v` not yet revealed.
    pub fn unrevealed_neighbors(&self, v: usize) -> usize {
        self.unrevealed[v]
    }

    /// Weights of the revealed neighbours of `v`, ascending.
    pub fn revealed_neighbor_weights(&self, v: usize) -> &[f64] {
        &self.neighbor_weights[v]
    }

    /// `h(v, y, j)`: revealed neighbours `w` of `v` with `x(w) + y >= 1`.
    pub fn exceedances(&self, v: usize, y: f64) -> usize {
        let weights = &self.neighbor_weights[v];
        weights.len() - weights.partition_point(|&xw| !edge_kept(xw, y))
    }

    /// Reveals the next vertex with weight `value` and returns it.
    pub(crate) fn reveal(&mut self, value: f64) -> Result<usize, MartingaleError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(MartingaleError::WeightOutOfRange(value));
        }
        let w = self.next_vertex().ok_or(MartingaleError::Exhausted)?;
        self.x[w] = value;
        self.prefix += 1;
        for &u in self.graph.neighbors(w) {
            let u = u as usize;
            self.unrevealed[u] -= 1;
            let list = &mut self.neighbor_weights[u];
            let at = list.partition_point(|&v| v < value);
            list.insert(at, value);
        }
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphFamilySpec;

    #[test]
    fn bookkeeping_tracks_reveals() {
        let g = GraphFamilySpec::complete(4).build().unwrap();
        let mut s = RevealState::new(&g, vec![2, 0, 3, 1]).unwrap();
        assert_eq!(s.next_vertex(), Some(2));
        s.reveal(0.7).unwrap();
        s.reveal(0.2).unwrap();
        assert_eq!(s.prefix(), 2);
        assert!(s.is_revealed(2) && s.is_revealed(0) && !s.is_revealed(1));
        assert_eq!(s.unrevealed_neighbors(1), 1);
        assert_eq!(s.revealed_neighbor_weights(1), &[0.2, 0.7]);
        assert_eq!(s.exceedances(1, 0.5), 1);
        assert_eq!(s.exceedances(1, 0.85), 2);
        for v in 0..4 {
            let revealed = s.revealed_neighbor_weights(v).len();
            assert_eq!(s.unrevealed_neighbors(v) + revealed, 3);
        }
        s.reveal(0.1).unwrap();
        s.reveal(0.4).unwrap();
        assert!(s.is_complete());
        assert_eq!(s.reveal(0.5), Err(MartingaleError::Exhausted));
    }

    #[test]
    fn rejects_bad_orders_and_weights() {
        let g = GraphFamilySpec::complete(3).build().unwrap();
        assert!(RevealState::new(&g, vec![0, 0, 1]).is_err());
        assert!(RevealState::new(&g, vec![0, 1]).is_err());
        let mut s = RevealState::new(&g, vec![0, 1, 2]).unwrap();
        assert!(s.reveal(1.5).is_err());
    }
}
