use irregular_subgraph::exact::Exact;
use irregular_subgraph::graph::GraphFamilySpec;
use irregular_subgraph::oracle::ExactOracle;

fn main() {
    let k4 = GraphFamilySpec::complete(4).build().unwrap();
    let oracle = ExactOracle::enumerate(&k4, 8).unwrap();

    // Each degree 0..=3 is equally likely.
    let pmf = oracle.degree_pmf(0).unwrap();
    assert!(pmf.iter().all(|p| *p == Exact::new(1, 4)));

    let (mean, variance) = oracle.mean_var(1).unwrap();
    assert_eq!(mean, Exact::one());
    assert!(variance <= Exact::new(17 * 4, 4));
    println!("K4, k = 1: mean {mean}, variance {variance}");
}
