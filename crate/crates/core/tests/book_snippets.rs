// The book snippets also run as doctests; running them here keeps them
// checked when another test target fails first and cargo skips doctests.

macro_rules! snippet {
    ($name:ident, $file:literal) => {
        mod $name {
            include!(concat!("../../../book/snippets/", $file));

            #[test]
            fn runs() {
                main();
            }
        }
    };
}

snippet!(model, "model.rs");
snippet!(exact_oracle, "exact_oracle.rs");
snippet!(joint_counterexample, "joint_counterexample.rs");
snippet!(martingale, "martingale.rs");
snippet!(quadrature, "quadrature.rs");
snippet!(verify_config, "verify_config.rs");
