use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use num_bigint::BigInt;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{
    check_f_inequality, check_stirling_delta, concentration_report, exact_report,
    interval_claims_stats, martingale_study, monte_carlo, sampling_variance_check, scaling_study,
    verify_variance_bound, BoundReport, ExperimentConfig, MartingaleStudySpec, MonteCarloReport,
};
use crate::exact::Exact;
use crate::graph::{read_edge_list, write_edge_list, Graph, GraphFamily, GraphFamilySpec};
use crate::martingale::{trace_for_stream, QuadratureSpec, TraceOrder};
use crate::oracle::ExactOracle;
use crate::rng::{entropy_seed, StreamId};
use crate::sampler::sample_histogram;

use super::config::VerifyConfig;
use super::manifest::{unix_now, write_atomic, GraphRecord, RunManifest};
use super::{CliError, Command, FamilyArg};

/// Trials sampled per parallel batch before writing.
const SAMPLE_BATCH: usize = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OracleQuery {
    /// Degree distribution of single vertices.
    Pmf,
    /// `P[deg u = deg v = k]` next to its bound.
    Joint,
    /// Mean and variance of `m(H, k)`.
    MeanVar,
    /// `P[|m(H, k) - n/(d+1)| >= z]`.
    Tail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureMode {
    /// Increments only; no `M_n`.
    None,
    /// Exact Gauss–Legendre rule without the node-doubling check.
    Fast,
    /// Exact rule, confirmed against twice the nodes.
    Verified,
}

impl QuadratureMode {
    fn spec(self) -> Option<QuadratureSpec> {
        match self {
            QuadratureMode::None => None,
            QuadratureMode::Fast => Some(QuadratureSpec::fast()),
            QuadratureMode::Verified => Some(QuadratureSpec::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub graph: GraphFamilySpec,
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub graph: PathBuf,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub graph: PathBuf,
    pub query: OracleQuery,
    pub k: Option<usize>,
    pub vertex: Option<usize>,
    pub u: Option<usize>,
    pub v: Option<usize>,
    pub z: Option<String>,
    pub cap: usize,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartingaleConfig {
    pub graph: PathBuf,
    pub k: usize,
    pub traces: usize,
    pub seed: u64,
    pub order: TraceOrder,
    pub quadrature: QuadratureMode,
    pub full: Option<PathBuf>,
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyRun {
    pub config_path: PathBuf,
    /// The parsed config, with its seed filled in.
    pub config: VerifyConfig,
    pub out: PathBuf,
}

/// A command with every default resolved, as stored in manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum ResolvedCommand {
    Generate(GenerateConfig),
    Sample(SampleConfig),
    Oracle(OracleConfig),
    Martingale(MartingaleConfig),
    Verify(VerifyRun),
}

impl ResolvedCommand {
    fn with_out(mut self, out: PathBuf) -> Self {
        match &mut self {
            ResolvedCommand::Generate(c) => c.out = out,
            ResolvedCommand::Sample(c) => c.out = out,
            ResolvedCommand::Oracle(c) => c.out = Some(out),
            ResolvedCommand::Martingale(c) => c.out = out,
            ResolvedCommand::Verify(c) => c.out = out,
        }
        self
    }
}

/// One line of `sample` output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub trial: u64,
    pub master_seed: u64,
    /// `m(H, k)` for `k = 0..=d`.
    pub counts: Vec<usize>,
    /// `m(H)`.
    pub max_count: usize,
}

fn seed_or_entropy(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = entropy_seed();
        eprintln!("no seed given; drew {s} from system entropy");
        s
    })
}

fn need<T>(value: Option<T>, flag: &str, family: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("--{flag} is required for --family {family}")))
}

pub(crate) fn resolve(cmd: Command) -> Result<ResolvedCommand, CliError> {
    Ok(match cmd {
        Command::Generate { family, n, d, offsets, a, dim, copies, size, seed, strategy, out } => {
            let name = family.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
            let graph = match family {
                FamilyArg::Complete => GraphFamilySpec::complete(need(n, "n", &name)?),
                FamilyArg::Circulant => match (offsets, d) {
                    (Some(o), _) => GraphFamilySpec::circulant(need(n, "n", &name)?, o),
                    (None, Some(d)) => GraphFamilySpec::circulant_with_degree(need(n, "n", &name)?, d),
                    (None, None) => {
                        return Err(CliError::Usage("circulant needs --offsets or --d".into()))
                    }
                },
                FamilyArg::CompleteBipartite => GraphFamilySpec::complete_bipartite(need(a, "a", &name)?),
                FamilyArg::Hypercube => GraphFamilySpec::hypercube(need(dim, "dim", &name)?),
                FamilyArg::DisjointCliques => GraphFamilySpec::disjoint_cliques(
                    need(copies, "copies", &name)?,
                    need(size, "size", &name)?,
                ),
                FamilyArg::RandomRegular => GraphFamilySpec(GraphFamily::RandomRegular {
                    n: need(n, "n", &name)?,
                    d: need(d, "d", &name)?,
                    seed: seed_or_entropy(seed),
                    strategy: strategy.map(Into::into),
                }),
            };
            ResolvedCommand::Generate(GenerateConfig { graph, out })
        }
        Command::Sample { graph, trials, seed, out } => {
            if trials == 0 {
                return Err(CliError::Usage("--trials must be at least 1".into()));
            }
            ResolvedCommand::Sample(SampleConfig { graph, trials, seed: seed_or_entropy(seed), out })
        }
        Command::Oracle { graph, query, k, vertex, u, v, z, cap, out } => {
            ResolvedCommand::Oracle(OracleConfig { graph, query, k, vertex, u, v, z, cap, out })
        }
        Command::Martingale { graph, k, traces, seed, order, quadrature, full, out } => {
            if traces == 0 {
                return Err(CliError::Usage("--traces must be at least 1".into()));
            }
            ResolvedCommand::Martingale(MartingaleConfig {
                graph,
                k,
                traces,
                seed: seed_or_entropy(seed),
                order: order.into(),
                quadrature,
                full,
                out,
            })
        }
        Command::Verify { config, seed, out } => {
            let mut cfg = VerifyConfig::load(&config)?;
            cfg.seed = Some(seed_or_entropy(seed.or(cfg.seed)));
            ResolvedCommand::Verify(VerifyRun { config_path: config, config: cfg, out })
        }
        Command::Replay { manifest, out } => {
            let m = RunManifest::load(&manifest)?;
            match out {
                Some(out) => m.config.with_out(out),
                None => m.config,
            }
        }
    })
}

/// Runs a resolved command, writing its outputs and manifest. `Ok(false)`
/// means the run finished but an assertion failed.
pub fn execute(cmd: &ResolvedCommand) -> Result<bool, CliError> {
    let started = unix_now();
    match cmd {
        ResolvedCommand::Generate(c) => generate(cmd, c, started),
        ResolvedCommand::Sample(c) => sample(cmd, c, started),
        ResolvedCommand::Oracle(c) => oracle(cmd, c, started),
        ResolvedCommand::Martingale(c) => martingale(cmd, c, started),
        ResolvedCommand::Verify(c) => verify(cmd, c, started),
    }
}

fn graph_record(g: &Graph) -> GraphRecord {
    GraphRecord { descriptor: g.descriptor().to_string(), hash: g.content_hash() }
}

fn load_graph(path: &Path) -> Result<Graph, CliError> {
    Ok(read_edge_list(path)?)
}

/// Streams output into a temporary sibling and renames it into place.
fn write_streamed(
    path: &Path,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let mut tmp_name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let file = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&tmp, e))?;
    drop(w);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn generate(cmd: &ResolvedCommand, c: &GenerateConfig, started: f64) -> Result<bool, CliError> {
    let g = c.graph.build()?;
    let mut buf = Vec::new();
    write_edge_list(&g, &mut buf).map_err(|e| CliError::io(&c.out, e))?;
    write_atomic(&c.out, &buf)?;
    let seed = match &c.graph.0 {
        GraphFamily::RandomRegular { seed, .. } => Some(*seed),
        _ => None,
    };
    let mut m = RunManifest::new(cmd.clone(), seed, started);
    m.graphs.push(graph_record(&g));
    m.add_output(&c.out)?;
    m.finish(&c.out)?;
    eprintln!("wrote {} ({} vertices, {} edges)", c.out.display(), g.n(), g.edge_count());
    Ok(true)
}

fn sample(cmd: &ResolvedCommand, c: &SampleConfig, started: f64) -> Result<bool, CliError> {
    let g = load_graph(&c.graph)?;
    eprintln!("master seed: {}", c.seed);
    let total = c.trials as u64;
    write_streamed(&c.out, |w| {
        let mut start = 0u64;
        while start < total {
            let end = (start + SAMPLE_BATCH as u64).min(total);
            let batch: Vec<_> = (start..end)
                .into_par_iter()
                .map(|t| sample_histogram(&g, StreamId::new(c.seed, t)))
                .collect();
            for (t, h) in (start..end).zip(batch) {
                let rec =
                    SampleRecord { trial: t, master_seed: c.seed, counts: h.counts, max_count: h.max_count };
                serde_json::to_writer(&mut *w, &rec)?;
                writeln!(w)?;
            }
            start = end;
        }
        Ok(())
    })?;
    let mut m = RunManifest::new(cmd.clone(), Some(c.seed), started);
    m.graphs.push(graph_record(&g));
    m.add_output(&c.out)?;
    m.finish(&c.out)?;
    eprintln!("wrote {} records to {}", c.trials, c.out.display());
    Ok(true)
}

/// Accepts `7`, `3/2`, `-1/4` or a decimal such as `1.5`.
fn parse_threshold(z: &str) -> Result<Exact, CliError> {
    let bad = || CliError::Usage(format!("cannot read threshold {z:?}"));
    if let Some((p, q)) = z.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q == BigInt::from(0) {
            return Err(bad());
        }
        return Ok(Exact::new(p, q));
    }
    if let Ok(i) = z.trim().parse::<BigInt>() {
        return Ok(Exact::from_integer(i));
    }
    z.trim().parse::<f64>().ok().and_then(Exact::from_f64).ok_or_else(bad)
}

fn oracle(cmd: &ResolvedCommand, c: &OracleConfig, started: f64) -> Result<bool, CliError> {
    let g = load_graph(&c.graph)?;
    let z = c.z.as_deref().map(parse_threshold).transpose()?;
    let oracle = ExactOracle::enumerate(&g, c.cap)?;
    let ks: Vec<usize> = match c.k {
        Some(k) => vec![k],
        None => (0..=g.d()).collect(),
    };
    let result = match c.query {
        OracleQuery::Pmf => {
            let vs: Vec<usize> = match c.vertex {
                Some(v) => vec![v],
                None => (0..g.n()).collect(),
            };
            let rows = vs
                .into_iter()
                .map(|v| Ok(json!({ "vertex": v, "pmf": oracle.degree_pmf(v)? })))
                .collect::<Result<Vec<_>, CliError>>()?;
            json!(rows)
        }
        OracleQuery::Joint => {
            let (u, v) = match (c.u, c.v) {
                (Some(u), Some(v)) => (u, v),
                _ => return Err(CliError::Usage("joint queries need --u and --v".into())),
            };
            let codegree = g.codegree(u, v)?;
            let bound = oracle.joint_bound(codegree);
            let rows = ks
                .iter()
                .map(|&k| {
                    let p = oracle.joint(u, v, k)?;
                    Ok(json!({ "k": k, "probability": p, "holds": p <= bound }))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            json!({ "u": u, "v": v, "codegree": codegree, "bound": bound, "rows": rows })
        }
        OracleQuery::MeanVar => {
            let rows = ks
                .iter()
                .map(|&k| {
                    let (mean, var) = oracle.mean_var(k)?;
                    Ok(json!({ "k": k, "mean": mean, "variance": var }))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            json!(rows)
        }
        OracleQuery::Tail => {
            let z = z.ok_or_else(|| CliError::Usage("tail queries need --z".into()))?;
            let rows = ks
                .iter()
                .map(|&k| Ok(json!({ "k": k, "probability": oracle.tail(k, &z)? })))
                .collect::<Result<Vec<_>, CliError>>()?;
            json!({ "z": z, "rows": rows })
        }
    };
    let doc = json!({
        "query": c.query,
        "graph": g.descriptor(),
        "n": g.n(),
        "d": g.d(),
        "order_types": oracle.order_types(),
        "result": result,
    });
    let text = serde_json::to_string_pretty(&doc).expect("json value serialises") + "\n";
    match &c.out {
        Some(out) => {
            write_atomic(out, text.as_bytes())?;
            let mut m = RunManifest::new(cmd.clone(), None, started);
            m.graphs.push(graph_record(&g));
            m.add_output(out)?;
            m.finish(out)?;
        }
        None => print!("{text}"),
    }
    Ok(true)
}

fn martingale(cmd: &ResolvedCommand, c: &MartingaleConfig, started: f64) -> Result<bool, CliError> {
    let g = load_graph(&c.graph)?;
    eprintln!("master seed: {}", c.seed);
    let quad = c.quadrature.spec();
    let spec = MartingaleStudySpec {
        k: c.k,
        traces: c.traces,
        order: c.order,
        quadrature: quad,
        compare_oracle: false,
        check_decomposition: false,
    };
    let (summary, records) = martingale_study(&g, &spec, c.seed)?;
    write_streamed(&c.out, |w| {
        for r in &records {
            serde_json::to_writer(&mut *w, r)?;
            writeln!(w)?;
        }
        Ok(())
    })?;
    let mut m = RunManifest::new(cmd.clone(), Some(c.seed), started);
    m.graphs.push(graph_record(&g));
    m.add_output(&c.out)?;
    if let Some(dir) = &c.full {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let paths = (0..c.traces as u64)
            .into_par_iter()
            .map(|i| {
                let tr = trace_for_stream(&g, c.k, StreamId::new(c.seed, i), c.order, quad.as_ref())?;
                let path = dir.join(format!("trace_{i:05}.csv"));
                let mut buf = Vec::new();
                tr.write_csv(&mut buf).map_err(|e| CliError::io(&path, e))?;
                write_atomic(&path, &buf)?;
                Ok(path)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        for p in &paths {
            m.add_output(p)?;
        }
    }
    m.finish(&c.out)?;
    eprintln!(
        "{} traces: max |Y| = {}, max |X_0 - n/(d+1)| = {:e}, endpoints {}",
        c.traces,
        summary.max_abs_y.max,
        summary.x0_max_error,
        if summary.endpoints_hold { "hold" } else { "FAIL" }
    );
    Ok(summary.endpoints_hold)
}

// Section kinds, mixed into per-section seeds.
const MONTE_CARLO: u64 = 1;
const VARIANCE: u64 = 2;
const CONCENTRATION: u64 = 3;
const MARTINGALE: u64 = 4;
const STIRLING: u64 = 5;
const INTERVAL: u64 = 6;
const SCALING: u64 = 7;

/// Seed for section `index` of kind `kind`, independent of every other
/// section's.
fn section_seed(master: u64, kind: u64, index: usize, own: Option<u64>) -> u64 {
    own.unwrap_or_else(|| StreamId::new(master, (kind << 32) | index as u64).rng().random())
}

/// Runs every check in `cfg`, returning the report and the graphs it used.
pub fn run_verify(cfg: &VerifyConfig, master: u64) -> Result<(BoundReport, Vec<GraphRecord>), CliError> {
    let mut report = BoundReport::new(master);
    let mut graphs: Vec<GraphRecord> = Vec::new();
    let mut note = |g: &Graph| {
        let rec = graph_record(g);
        if !graphs.contains(&rec) {
            graphs.push(rec);
        }
    };
    for s in &cfg.exact {
        let g = s.graph.build()?;
        note(&g);
        report.add_exact(exact_report(&g, &s.k.resolve(g.d())?, s.cap)?);
    }
    for (i, s) in cfg.monte_carlo.iter().enumerate() {
        let g = s.graph.build()?;
        note(&g);
        let seed = section_seed(master, MONTE_CARLO, i, s.seed);
        let exp = ExperimentConfig {
            graph: s.graph.clone(),
            k_set: s.k.clone(),
            trials: s.trials,
            master_seed: Some(seed),
            kappa_constant: s.kappa_constant,
            quadrature: QuadratureSpec::default(),
        };
        exp.validate()?;
        let ks = s.k.resolve(g.d())?;
        let stats = monte_carlo(&g, &ks, s.trials, seed)?;
        let (n, d) = (g.n() as f64, g.d() as f64);
        if s.check_variance {
            for st in &stats {
                report.add_variance(sampling_variance_check(&g, st)?);
            }
        }
        report.add_monte_carlo(MonteCarloReport {
            graph: g.descriptor().to_string(),
            n: g.n(),
            d: g.d(),
            trials: s.trials,
            master_seed: seed,
            expected_mean: n / (d + 1.0),
            variance_cap: 17.0 * n / (d + 1.0),
            kappa: s.kappa_constant * n.ln(),
            stats,
        });
    }
    for (i, s) in cfg.variance.iter().enumerate() {
        let g = s.graph.build()?;
        note(&g);
        let seed = section_seed(master, VARIANCE, i, s.seed);
        for k in s.k.resolve(g.d())? {
            report.add_variance(verify_variance_bound(&g, k, s.trials, seed)?);
        }
    }
    for (i, s) in cfg.concentration.iter().enumerate() {
        let g = s.graph.build()?;
        note(&g);
        let seed = section_seed(master, CONCENTRATION, i, s.seed);
        report.add_concentration(concentration_report(&g, s.k, s.trials, seed, &s.z, &s.pilot)?);
    }
    for (i, s) in cfg.martingale.iter().enumerate() {
        let g = s.graph.build()?;
        note(&g);
        let seed = section_seed(master, MARTINGALE, i, s.seed);
        let spec = MartingaleStudySpec {
            k: s.k,
            traces: s.traces,
            order: s.order,
            quadrature: s.quadrature,
            compare_oracle: s.compare_oracle,
            check_decomposition: s.check_decomposition,
        };
        report.add_martingale(martingale_study(&g, &spec, seed)?.0);
    }
    if let Some(claims) = &cfg.claims {
        if let Some(res) = claims.f_grid {
            report.add_f_inequality(check_f_inequality(res)?);
        }
        if let Some(samples) = claims.stirling_samples {
            report.add_stirling(check_stirling_delta(samples, section_seed(master, STIRLING, 0, None))?);
        }
        for (i, s) in claims.interval.iter().enumerate() {
            let seed = section_seed(master, INTERVAL, i, None);
            report.add_interval_claims(interval_claims_stats(s.m, s.h, s.reps, seed, s.kappa)?);
        }
    }
    for (i, s) in cfg.scaling.iter().enumerate() {
        report.add_scaling(scaling_study(s, section_seed(master, SCALING, i, None))?);
    }
    Ok((report, graphs))
}

fn verify(cmd: &ResolvedCommand, c: &VerifyRun, started: f64) -> Result<bool, CliError> {
    let master = c.config.seed.expect("seed resolved before running");
    eprintln!("master seed: {master}");
    let (report, graphs) = run_verify(&c.config, master)?;
    for a in &report.assertions {
        eprintln!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
    }
    let text = report.to_json() + "\n";
    write_atomic(&c.out, text.as_bytes())?;
    let mut m = RunManifest::new(cmd.clone(), Some(master), started);
    m.graphs = graphs;
    m.add_output(&c.out)?;
    m.finish(&c.out)?;
    Ok(report.passed)
}
