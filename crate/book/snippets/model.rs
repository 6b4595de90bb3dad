use irregular_subgraph::graph::GraphFamilySpec;
use irregular_subgraph::rng::StreamId;
use irregular_subgraph::sampler::{degree_histogram, edge_kept, subgraph_degrees, WeightAssignment};

fn main() {
    // 8 vertices, each joined to the vertices 1 and 2 steps away.
    let g = GraphFamilySpec::circulant(8, vec![1, 2]).build().unwrap();
    assert_eq!((g.n(), g.d()), (8, 4));

    // The threshold is inclusive.
    assert!(edge_kept(0.25, 0.75));
    assert!(!edge_kept(0.25, 0.5));

    let w = WeightAssignment::sample(g.n(), StreamId::new(7, 0));
    let degrees = subgraph_degrees(&g, &w).unwrap();
    let hist = degree_histogram(&degrees, g.d()).unwrap();
    assert_eq!(hist.total(), g.n());

    // Same stream, same subgraph.
    let again = WeightAssignment::sample(g.n(), StreamId::new(7, 0));
    assert_eq!(subgraph_degrees(&g, &again).unwrap(), degrees);
}
