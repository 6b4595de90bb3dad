fn main() -> std::process::ExitCode {
    irregular_subgraph::cli::run()
}
