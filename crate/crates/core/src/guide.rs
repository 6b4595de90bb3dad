//! The runnable examples from the book in `book/`, compiled here as
//! doctests so the two cannot drift apart.

macro_rules! snippet {
    ($name:ident, $file:literal, $title:literal) => {
        #[doc = concat!($title, "\n\n```rust\n", include_str!(concat!("../../../book/snippets/", $file)), "```")]
        pub mod $name {}
    };
}

snippet!(model, "model.rs", "Sampling a subgraph and reading off its degrees.");
snippet!(exact_oracle, "exact_oracle.rs", "Exact degree probabilities on `K_4`.");
snippet!(
    joint_counterexample,
    "joint_counterexample.rs",
    "Adjacent pairs without common neighbours exceed the pair bound."
);
snippet!(martingale, "martingale.rs", "One exposure-martingale trace with its step moments.");
snippet!(quadrature, "quadrature.rs", "Gauss–Legendre exactness.");
snippet!(verify_config, "verify_config.rs", "Parsing and rejecting `verify` configs.");
