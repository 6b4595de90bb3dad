use irregular_subgraph::quadrature::GaussLegendre;

fn main() {
    // m nodes integrate polynomials of degree 2m - 1 exactly.
    let rule = GaussLegendre::new(3);
    let got = rule.integrate(0.0, 1.0, |x| x.powi(5) - 2.0 * x.powi(2));
    assert!((got - (1.0 / 6.0 - 2.0 / 3.0)).abs() < 1e-14);

    // Degree 6 is one too many for three nodes.
    let off = rule.integrate(0.0, 1.0, |x| x.powi(6));
    assert!((off - 1.0 / 7.0).abs() > 1e-6);
}
