use irregular_subgraph::graph::GraphFamilySpec;
use irregular_subgraph::martingale::{trace_for_stream, QuadratureSpec, TraceOrder};
use irregular_subgraph::rng::StreamId;
use irregular_subgraph::sampler::{subgraph_degrees, WeightAssignment};

fn main() {
    let g = GraphFamilySpec::circulant(8, vec![1, 2]).build().unwrap();
    let k = 2;
    let stream = StreamId::new(11, 3);
    let quad = QuadratureSpec::fast();
    let trace = trace_for_stream(&g, k, stream, TraceOrder::Random, Some(&quad)).unwrap();

    // X_0 is the expected count n/(d+1) and X_n the realised count.
    assert!((trace.x0() - 8.0 / 5.0).abs() < 1e-12);
    let w = WeightAssignment::sample(g.n(), stream);
    let count = subgraph_degrees(&g, &w).unwrap().iter().filter(|&&deg| deg == k).count();
    assert_eq!(trace.final_count, count);
    assert_eq!(*trace.x_values.last().unwrap(), count as f64);

    for m in trace.moments.as_ref().unwrap() {
        assert!(m.mean_increment.abs() < 1e-9);
        assert!(m.neighbor_sq_increment <= 2.0 * m.a1 + 2.0 * m.a2 + 1e-9);
    }
    println!("M_n = {:.4}", trace.m_n().unwrap());
}
