//! End-to-end acceptance checks. Each check runs at its fixed size and
//! tolerance and returns a [`Verdict`]; the `acceptance` test target prints
//! them and fails when any of them fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use irregular_subgraph::analysis::{
    check_f_inequality, f_alpha, interval_claims_stats, martingale_study, monte_carlo,
    sampling_variance_check, scaling_study, AnalysisError, MartingaleStudySpec, ScalingFamily,
    ScalingSpec,
};
use irregular_subgraph::cli::{run_verify, CliError, VerifyConfig};
use irregular_subgraph::exact::Exact;
use irregular_subgraph::graph::{Graph, GraphFamilySpec};
use irregular_subgraph::martingale::{QuadratureSpec, TraceOrder};
use irregular_subgraph::oracle::{ExactOracle, DEFAULT_ORACLE_CAP};

/// Master seed for every sampled check.
pub const SEED: u64 = 0x1A2B_3C4D;

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    /// Reported alongside a criterion without deciding it.
    pub informational: bool,
    pub detail: String,
}

impl Verdict {
    fn new(id: u8, title: &'static str, passed: bool, detail: String) -> Self {
        Self { id, title, passed, informational: false, detail }
    }

    fn info(id: u8, title: &'static str, passed: bool, detail: String) -> Self {
        Self { id, title, passed, informational: true, detail }
    }

    fn error(id: u8, title: &'static str, err: impl std::fmt::Display) -> Self {
        Self::new(id, title, false, format!("error: {err}"))
    }

    pub fn line(&self) -> String {
        let tag = match (self.informational, self.passed) {
            (true, _) => "INFO",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        };
        format!("[{tag}] {:>2}. {}: {}", self.id, self.title, self.detail)
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

/// The graphs with at most eight vertices that the exact checks cover.
pub fn small_graphs() -> Vec<Graph> {
    [
        GraphFamilySpec::complete(2),
        GraphFamilySpec::complete(4),
        GraphFamilySpec::complete(5),
        GraphFamilySpec::complete_bipartite(3),
        GraphFamilySpec::circulant(8, vec![1, 2]),
        GraphFamilySpec::hypercube(3),
        GraphFamilySpec::disjoint_cliques(2, 4),
    ]
    .iter()
    .map(|s| s.build().expect("small test graphs are valid"))
    .collect()
}

/// One enumeration per small graph, shared by the exact checks.
pub struct ExactSuite {
    pub oracles: Vec<(Graph, ExactOracle)>,
    pub elapsed: Duration,
}

impl ExactSuite {
    pub fn build() -> Result<Self, AnalysisError> {
        let start = Instant::now();
        let oracles = small_graphs()
            .into_iter()
            .map(|g| {
                let o = ExactOracle::enumerate(&g, DEFAULT_ORACLE_CAP)?;
                Ok((g, o))
            })
            .collect::<Result<Vec<_>, AnalysisError>>()?;
        Ok(Self { oracles, elapsed: start.elapsed() })
    }
}

const LAW_GRAPHS: [&str; 5] =
    ["complete(n=2)", "complete(n=4)", "complete(n=5)", "complete_bipartite(a=3)", "circulant(n=8,offsets=1,2)"];

pub fn exact_degree_law(suite: &ExactSuite) -> Verdict {
    const TITLE: &str = "exact degree law";
    let start = Instant::now();
    let mut checked = 0;
    let mut bad = Vec::new();
    for (g, o) in suite.oracles.iter().filter(|(g, _)| LAW_GRAPHS.contains(&g.descriptor())) {
        let target = Exact::new(1, (g.d() + 1) as u64);
        for v in 0..g.n() {
            match o.degree_pmf(v) {
                Ok(pmf) if pmf.iter().all(|p| *p == target) => {}
                Ok(_) => bad.push(format!("{} vertex {v}", g.descriptor())),
                Err(e) => return Verdict::error(1, TITLE, e),
            }
            checked += 1;
        }
    }
    let elapsed = suite.elapsed + start.elapsed();
    let passed = bad.is_empty() && checked > 0 && within(elapsed, 300);
    Verdict::new(
        1,
        TITLE,
        passed,
        format!(
            "{checked} vertices on {} graphs, {} off the uniform law, {:.1}s",
            LAW_GRAPHS.len(),
            bad.len(),
            elapsed.as_secs_f64()
        ),
    )
}

pub fn exact_variance_bound(suite: &ExactSuite) -> Verdict {
    const TITLE: &str = "exact variance bound";
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for (g, o) in &suite.oracles {
        let cap = Exact::new(17 * g.n() as u64, (g.d() + 1) as u64);
        for k in 0..=g.d() {
            let var = match o.mean_var(k) {
                Ok((_, v)) => v,
                Err(e) => return Verdict::error(2, TITLE, e),
            };
            worst = worst.max(var.to_f64() / cap.to_f64());
            if var > cap {
                bad.push(format!("{} k={k}", g.descriptor()));
            }
            checked += 1;
        }
    }
    Verdict::new(
        2,
        TITLE,
        bad.is_empty(),
        format!("{checked} (graph, k) cases, {} above 17n/(d+1), largest Var/cap {worst:.4}", bad.len()),
    )
}

pub fn exact_joint_bound(suite: &ExactSuite) -> Verdict {
    let mut checked = 0;
    let mut failing = Vec::new();
    for (g, o) in &suite.oracles {
        let table = o.joint_table();
        checked += table.len();
        let bad: Vec<_> = table.iter().filter(|e| e.probability > e.bound).collect();
        if let Some(worst) =
            bad.iter().max_by(|a, b| (&a.probability * &b.bound).cmp(&(&b.probability * &a.bound)))
        {
            failing.push(format!(
                "{} ({} cases, worst {} > {} at u={} v={} k={} codegree {})",
                g.descriptor(),
                bad.len(),
                worst.probability,
                worst.bound,
                worst.u,
                worst.v,
                worst.k,
                worst.codegree
            ));
        }
    }
    let detail = if failing.is_empty() {
        format!("{checked} (pair, k) cases within the bound")
    } else {
        format!("{checked} (pair, k) cases; violated on {}", failing.join("; "))
    };
    Verdict::new(3, "joint-probability bound", failing.is_empty(), detail)
}

/// Counts ordered triples `(u, v, w)` with `w` adjacent to both.
fn codegree_sum_by_triples(g: &Graph) -> u64 {
    let n = g.n();
    let mut total = 0u64;
    for w in 0..n {
        for u in 0..n {
            for v in 0..n {
                if u != v && g.is_adjacent(u, w) && g.is_adjacent(v, w) {
                    total += 1;
                }
            }
        }
    }
    total
}

pub fn codegree_identity() -> Verdict {
    const TITLE: &str = "codegree identity";
    let shapes = [(20usize, 3usize, 17u64), (50, 5, 17), (100, 10, 16)];
    let mut graphs = 0;
    let mut bad = Vec::new();
    for (n, d, count) in shapes {
        for seed in 0..count {
            let g = match GraphFamilySpec::random_regular(n, d, seed).build() {
                Ok(g) => g,
                Err(e) => return Verdict::error(4, TITLE, e),
            };
            let target = (n * d * (d - 1)) as u64;
            if g.codegree_sum() != target || codegree_sum_by_triples(&g) != target {
                bad.push(g.descriptor().to_string());
            }
            graphs += 1;
        }
    }
    Verdict::new(
        4,
        TITLE,
        bad.is_empty() && graphs == 50,
        format!("{graphs} random regular graphs, {} mismatches (merge and triple counts)", bad.len()),
    )
}

pub fn monte_carlo_concentration() -> Verdict {
    const TITLE: &str = "Monte Carlo concentration";
    let start = Instant::now();
    let (n, d, trials) = (2000usize, 20usize, 500usize);
    let run = || -> Result<Verdict, AnalysisError> {
        let g = GraphFamilySpec::circulant_with_degree(n, d).build()?;
        let ks: Vec<usize> = (0..=d).collect();
        let stats = monte_carlo(&g, &ks, trials, SEED)?;
        let mean = n as f64 / (d + 1) as f64;
        let radius = 4.0 * (17.0 * mean / trials as f64).sqrt();
        let worst_mean = stats.iter().map(|s| (s.mean - mean).abs()).fold(0.0, f64::max);
        let checks = stats.iter().map(|s| sampling_variance_check(&g, s)).collect::<Result<Vec<_>, _>>()?;
        let worst_upper = checks.iter().filter_map(|c| c.upper_bound).fold(0.0, f64::max);
        let elapsed = start.elapsed();
        let passed = worst_mean <= radius && checks.iter().all(|c| c.passed) && within(elapsed, 600);
        Ok(Verdict::new(
            5,
            TITLE,
            passed,
            format!(
                "max |mean - {mean:.3}| = {worst_mean:.3} <= {radius:.3}; largest variance upper bound {worst_upper:.1} \
                 vs 1.1 * {:.1}; {:.1}s",
                17.0 * mean,
                elapsed.as_secs_f64()
            ),
        ))
    };
    run().unwrap_or_else(|e| Verdict::error(5, TITLE, e))
}

fn plain_spec(k: usize, traces: usize) -> MartingaleStudySpec {
    MartingaleStudySpec {
        k,
        traces,
        order: TraceOrder::Random,
        quadrature: None,
        compare_oracle: false,
        check_decomposition: false,
    }
}

pub fn martingale_exactness() -> Verdict {
    const TITLE: &str = "martingale exactness";
    let run = || -> Result<Verdict, AnalysisError> {
        let g = GraphFamilySpec::circulant_with_degree(200, 10).build()?;
        let mut traces = 0;
        let mut worst_x0 = 0.0f64;
        let mut mismatched = 0;
        for k in 0..=g.d() {
            let (summary, records) = martingale_study(&g, &plain_spec(k, 100), SEED + k as u64)?;
            traces += records.len();
            worst_x0 = worst_x0.max(summary.x0_max_error);
            mismatched += records.iter().filter(|r| r.x_n != r.recount).count();
        }
        Ok(Verdict::new(
            6,
            TITLE,
            mismatched == 0 && worst_x0 <= 1e-9,
            format!("{traces} traces over k = 0..=10, {mismatched} X_n mismatches, max |X_0 - n/(d+1)| = {worst_x0:.2e}"),
        ))
    };
    run().unwrap_or_else(|e| Verdict::error(6, TITLE, e))
}

pub fn variance_proxy_consistency() -> Verdict {
    const TITLE: &str = "variance-proxy consistency";
    let start = Instant::now();
    let run = || -> Result<Verdict, AnalysisError> {
        let g = GraphFamilySpec::circulant(8, vec![1, 2]).build()?;
        let spec = MartingaleStudySpec { compare_oracle: true, ..plain_spec(2, 10_000) };
        let (summary, _) = martingale_study(&g, &spec, SEED)?;
        let (Some(var), Some(m_n)) = (&summary.exact_variance, &summary.m_n) else {
            return Ok(Verdict::new(7, TITLE, false, "no exact variance or M_n recorded".into()));
        };
        let elapsed = start.elapsed();
        let gap = (m_n.mean - var.to_f64()).abs();
        let passed = summary.variance_consistent == Some(true) && within(elapsed, 900);
        Ok(Verdict::new(
            7,
            TITLE,
            passed,
            format!(
                "mean M_n {:.5} vs exact Var {} = {:.5}: gap {gap:.5} = {:.2} s.e.; {:.1}s",
                m_n.mean,
                var,
                var.to_f64(),
                gap / m_n.standard_error,
                elapsed.as_secs_f64()
            ),
        ))
    };
    run().unwrap_or_else(|e| Verdict::error(7, TITLE, e))
}

/// The criterion itself, then the same count restricted to the neighbours'
/// part of the increment.
pub fn decomposition_inequality() -> Vec<Verdict> {
    const TITLE: &str = "increment decomposition";
    let run = || -> Result<Vec<Verdict>, AnalysisError> {
        let g = GraphFamilySpec::circulant_with_degree(100, 10).build()?;
        let (mut steps, mut full, mut neighbor) = (0, 0, 0);
        let mut worst = f64::NEG_INFINITY;
        for k in [0, 5, 10] {
            let spec = MartingaleStudySpec {
                quadrature: Some(QuadratureSpec::default()),
                check_decomposition: true,
                ..plain_spec(k, 10)
            };
            let (s, _) = martingale_study(&g, &spec, SEED + k as u64)?;
            steps += s.steps_checked;
            full += s.decomposition_violations;
            neighbor += s.neighbor_decomposition_violations;
            worst = worst.max(s.worst_decomposition_excess.unwrap_or(f64::NEG_INFINITY));
        }
        Ok(vec![
            Verdict::new(
                8,
                TITLE,
                full == 0 && steps > 0,
                format!(
                    "E[Y_j^2 | F_(j-1)] > 2 A_1 + 2 A_2 + 1e-6 at {full} of {steps} steps (largest excess {worst:.4})"
                ),
            ),
            Verdict::info(
                8,
                "decomposition without the revealed vertex's own term",
                neighbor == 0,
                format!("{neighbor} of {steps} steps exceed the bound"),
            ),
        ])
    };
    run().unwrap_or_else(|e| vec![Verdict::error(8, TITLE, e)])
}

pub fn f_inequality() -> Verdict {
    const TITLE: &str = "f inequality";
    match check_f_inequality(500) {
        Ok(c) => {
            let spot = f_alpha(0.5, 0.25);
            let spot_ok = (spot + 0.1308).abs() <= 1e-4;
            Verdict::new(
                9,
                TITLE,
                c.passed && spot_ok,
                format!(
                    "{0}x{0} grid: max f = {1:e}, diagonal max |f| = {2:e}, c_hat = {3:.4}; f(1/4 | x = 1/2) = {spot:.6}",
                    c.grid_points, c.max_f, c.diagonal_max_abs, c.c_hat
                ),
            )
        }
        Err(e) => Verdict::error(9, TITLE, e),
    }
}

pub fn interval_claims() -> Verdict {
    const TITLE: &str = "interval occupancy claims";
    let mut parts = Vec::new();
    let mut passed = true;
    for (i, h) in [40.0, 100.0].into_iter().enumerate() {
        match interval_claims_stats(10_000, h, 1000, SEED + i as u64, None) {
            Ok(c) => {
                passed &= c.passed;
                parts.push(format!(
                    "h = {h}: deviation {}/{:.3}, overfill {}/{:.1e}, gap {}/{:.3}",
                    c.count_deviation.frequency,
                    c.count_deviation.bound,
                    c.overfill.frequency,
                    c.overfill.bound,
                    c.empty_gap.frequency,
                    c.empty_gap.bound
                ));
            }
            Err(e) => return Verdict::error(10, TITLE, e),
        }
    }
    Verdict::new(10, TITLE, passed, format!("m = 10^4, 10^3 reps; {}", parts.join("; ")))
}

pub fn increment_trend() -> Verdict {
    const TITLE: &str = "increment trend";
    let spec = ScalingSpec {
        family: ScalingFamily::Circulant,
        n_list: vec![200, 400, 800, 1600],
        d: 20,
        k: None,
        traces: 100,
        proxy_traces: None,
        quadrature: QuadratureSpec::fast(),
        quantile: 0.999,
    };
    match scaling_study(&spec, SEED) {
        Ok(t) => {
            let rows: Vec<String> = t
                .rows
                .iter()
                .map(|r| {
                    format!(
                        "n={} q={:.3} ratio={:.3} M_n q={:.1}",
                        r.n,
                        r.max_abs_y_quantile,
                        r.ratio_y,
                        r.m_n_quantile.unwrap_or(f64::NAN)
                    )
                })
                .collect();
            Verdict::new(
                11,
                TITLE,
                t.passed,
                format!("factor {:.3} < 2; {}", t.trend_factor, rows.join(", ")),
            )
        }
        Err(e) => Verdict::error(11, TITLE, e),
    }
}

pub fn smoke_config_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.toml")
}

pub fn determinism() -> Verdict {
    const TITLE: &str = "determinism across thread counts";
    let run = || -> Result<Verdict, CliError> {
        let cfg = VerifyConfig::load(&smoke_config_path())?;
        let seed = cfg.seed.unwrap_or(SEED);
        let mut reports = Vec::new();
        for threads in [1, 4] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let (report, _) = pool.install(|| run_verify(&cfg, seed))?;
            reports.push(report.to_json());
        }
        let same = reports[0] == reports[1];
        Ok(Verdict::new(
            12,
            TITLE,
            same,
            format!("smoke reports with 1 and 4 threads: {} bytes, identical = {same}", reports[0].len()),
        ))
    };
    run().unwrap_or_else(|e| Verdict::error(12, TITLE, e))
}

/// Runs every check in order.
pub fn run_all(mut report: impl FnMut(&Verdict)) -> Vec<Verdict> {
    let mut all = Vec::new();
    let mut push = |v: Verdict| {
        report(&v);
        all.push(v);
    };
    match ExactSuite::build() {
        Ok(suite) => {
            push(exact_degree_law(&suite));
            push(exact_variance_bound(&suite));
            push(exact_joint_bound(&suite));
        }
        Err(e) => {
            push(Verdict::error(1, "exact degree law", &e));
            push(Verdict::error(2, "exact variance bound", &e));
            push(Verdict::error(3, "joint-probability bound", &e));
        }
    }
    push(codegree_identity());
    push(monte_carlo_concentration());
    push(martingale_exactness());
    push(variance_proxy_consistency());
    for v in decomposition_inequality() {
        push(v);
    }
    push(f_inequality());
    push(interval_claims());
    push(increment_trend());
    push(determinism());
    all
}
