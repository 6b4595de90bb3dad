use irregular_subgraph::exact::Exact;
use irregular_subgraph::graph::GraphFamilySpec;
use irregular_subgraph::oracle::ExactOracle;

fn main() {
    // A single edge: both endpoints have degree 0 exactly when it is dropped.
    let k2 = GraphFamilySpec::complete(2).build().unwrap();
    let oracle = ExactOracle::enumerate(&k2, 8).unwrap();
    assert_eq!(oracle.joint(0, 1, 0).unwrap(), Exact::new(1, 2));
    assert_eq!(oracle.joint_bound(0), Exact::new(1, 4));

    // The cube: adjacent vertices share no neighbour.
    let q3 = GraphFamilySpec::hypercube(3).build().unwrap();
    let oracle = ExactOracle::enumerate(&q3, 8).unwrap();
    assert_eq!(q3.codegree(0, 1).unwrap(), 0);
    assert_eq!(oracle.joint(0, 1, 0).unwrap(), Exact::new(19, 180));
    assert!(oracle.joint(0, 1, 0).unwrap() > oracle.joint_bound(0));

    // Non-adjacent pairs stay within the bound.
    let worst = oracle
        .joint_table()
        .into_iter()
        .filter(|e| !q3.is_adjacent(e.u, e.v))
        .all(|e| e.probability <= e.bound);
    assert!(worst);
}
