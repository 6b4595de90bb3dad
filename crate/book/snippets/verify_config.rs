use irregular_subgraph::cli::VerifyConfig;

fn main() {
    let text = r#"
seed = 5

[[exact]]
graph = { family = "complete", n = 4 }
k = "all"

[[variance]]
graph = { family = "circulant", n = 8, offsets = [1, 2] }
k = [0, 2]
trials = 200
"#;
    let cfg = VerifyConfig::from_toml(text).unwrap();
    assert_eq!(cfg.exact.len(), 1);

    let err = VerifyConfig::from_toml("seed = 5\n[[variance]]\ngraph = { family = \"complete\", n = 4 }\nk = [1]\ntrials = 10\n")
        .unwrap_err();
    assert!(err.to_string().contains("variance[0].trials"));
}
