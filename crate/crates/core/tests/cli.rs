use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_irsub");

fn irsub(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).env_remove("IRSUB_THREADS").output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = irsub(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn jsonl(path: &Path) -> Vec<Value> {
    fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn generate_writes_edge_lists_and_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--family", "complete", "--n", "4", "--out", "k4.txt"]);
    let text = fs::read_to_string(d.join("k4.txt")).unwrap();
    assert_eq!(text.lines().next(), Some("4 3"));
    assert_eq!(text.lines().count(), 7);

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(d.join("k4.txt.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["tool"], "irsub");
    assert_eq!(manifest["config"]["command"], "generate");
    assert_eq!(manifest["config"]["graph"]["family"], "complete");
    assert!(manifest["finished"].as_f64() >= manifest["started"].as_f64());
    let digest = manifest["outputs"][0]["sha256"].as_str().unwrap();
    use sha2::Digest;
    assert_eq!(digest, hex::encode(sha2::Sha256::digest(text.as_bytes())));

    ok(d, &["generate", "--family", "circulant", "--n", "8", "--offsets", "1,2", "--out", "c8.txt"]);
    let text = fs::read_to_string(d.join("c8.txt")).unwrap();
    assert_eq!(text.lines().next(), Some("8 4"));
    assert_eq!(text.lines().count(), 17);

    let out = irsub(d, &["generate", "--family", "hypercube", "--out", "q.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--dim"));
}

#[test]
fn random_regular_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &[
        "generate", "--family", "random-regular", "--n", "10", "--d", "3", "--seed", "7", "--out", "rr.txt",
    ]);
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/random_regular_10_3_7.txt");
    assert_eq!(fs::read(dir.path().join("rr.txt")).unwrap(), fs::read(golden).unwrap());
}

#[test]
fn sample_is_deterministic_and_unbiased() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--family", "complete", "--n", "4", "--out", "k4.txt"]);
    ok(d, &["sample", "--graph", "k4.txt", "--trials", "1", "--seed", "3", "--out", "a.jsonl"]);
    ok(d, &["sample", "--graph", "k4.txt", "--trials", "1", "--seed", "3", "--out", "b.jsonl"]);
    assert_eq!(fs::read(d.join("a.jsonl")).unwrap(), fs::read(d.join("b.jsonl")).unwrap());
    let rec = &jsonl(&d.join("a.jsonl"))[0];
    assert_eq!(rec["master_seed"], 3);
    let counts: Vec<u64> = rec["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).collect();
    assert_eq!(counts.iter().sum::<u64>(), 4);
    assert_eq!(rec["max_count"].as_u64(), counts.iter().max().copied());

    let out = irsub(d, &["sample", "--graph", "k4.txt", "--trials", "0", "--seed", "3", "--out", "z.jsonl"]);
    assert_eq!(out.status.code(), Some(2));

    // every per-k mean is n/(d+1) = 1; the variance is at most 17
    let trials = 100_000;
    ok(d, &["sample", "--graph", "k4.txt", "--trials", &trials.to_string(), "--seed", "11", "--out", "big.jsonl"]);
    let recs = jsonl(&d.join("big.jsonl"));
    assert_eq!(recs.len(), trials);
    let radius = 4.0 * (17.0 / trials as f64).sqrt();
    for k in 0..4 {
        let mean = recs.iter().map(|r| r["counts"][k].as_f64().unwrap()).sum::<f64>() / trials as f64;
        assert!((mean - 1.0).abs() <= radius, "k = {k}: mean {mean}");
    }
}

#[test]
fn absent_seed_is_drawn_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--family", "complete", "--n", "4", "--out", "k4.txt"]);
    let out = ok(d, &["sample", "--graph", "k4.txt", "--trials", "2", "--out", "s.jsonl"]);
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(d.join("s.jsonl.manifest.json")).unwrap()).unwrap();
    let seed = manifest["master_seed"].as_u64().unwrap();
    assert_eq!(manifest["config"]["seed"].as_u64(), Some(seed));
    assert!(stderr(&out).contains(&seed.to_string()));
    assert_eq!(jsonl(&d.join("s.jsonl"))[1]["master_seed"].as_u64(), Some(seed));
}

#[test]
fn replaying_a_manifest_reproduces_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--family", "circulant", "--n", "12", "--offsets", "1,3", "--out", "g.txt"]);
    ok(d, &["sample", "--graph", "g.txt", "--trials", "50", "--out", "s.jsonl"]);
    ok(d, &["replay", "--manifest", "s.jsonl.manifest.json", "--out", "again.jsonl"]);
    assert_eq!(fs::read(d.join("s.jsonl")).unwrap(), fs::read(d.join("again.jsonl")).unwrap());
}

#[test]
fn oracle_queries() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--family", "complete", "--n", "4", "--out", "k4.txt"]);
    ok(d, &["generate", "--family", "complete", "--n", "2", "--out", "k2.txt"]);
    ok(d, &["generate", "--family", "circulant", "--n", "9", "--offsets", "1", "--out", "c9.txt"]);

    let out = ok(d, &["oracle", "--graph", "k4.txt", "--query", "pmf", "--vertex", "2"]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["order_types"], 384);
    let pmf = doc["result"][0]["pmf"].as_array().unwrap();
    assert_eq!(pmf.len(), 4);
    assert!(pmf.iter().all(|p| p["exact"] == "1/4"));

    ok(d, &["oracle", "--graph", "k2.txt", "--query", "mean-var", "--k", "0", "--out", "mv.json"]);
    let doc: Value = serde_json::from_str(&fs::read_to_string(d.join("mv.json")).unwrap()).unwrap();
    assert_eq!(doc["result"][0]["mean"]["exact"], "1/1");
    assert_eq!(doc["result"][0]["variance"]["exact"], "1/1");
    assert!(d.join("mv.json.manifest.json").exists());

    let out = ok(d, &["oracle", "--graph", "k4.txt", "--query", "joint", "--u", "0", "--v", "1"]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["result"]["codegree"], 2);
    assert_eq!(doc["result"]["bound"]["exact"], "9/16");
    assert!(doc["result"]["rows"].as_array().unwrap().iter().all(|r| r["holds"] == true));

    // X is 0 or 2 with probability 1/2 each, so |X - 1| >= 1 always
    let out = ok(d, &["oracle", "--graph", "k2.txt", "--query", "tail", "--k", "1", "--z", "1/1"]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["result"]["rows"][0]["probability"]["exact"], "1/1");

    let out = irsub(d, &["oracle", "--graph", "c9.txt", "--query", "pmf"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("185794560 order types"), "{msg}");

    let out = irsub(d, &["oracle", "--graph", "k4.txt", "--query", "tail", "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn martingale_records_match_the_sampler() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--family", "circulant", "--n", "30", "--offsets", "1,2,5", "--out", "g.txt"]);
    let args = ["martingale", "--graph", "g.txt", "--k", "3", "--traces", "12", "--seed", "21"];
    let with_out = |name: &str| {
        let mut a = args.to_vec();
        a.extend(["--out", name]);
        a.into_iter().map(String::from).collect::<Vec<_>>()
    };
    let a = with_out("m.jsonl");
    ok(d, &a.iter().map(String::as_str).collect::<Vec<_>>());
    let b = with_out("m2.jsonl");
    ok(d, &b.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(fs::read(d.join("m.jsonl")).unwrap(), fs::read(d.join("m2.jsonl")).unwrap());

    // trace i and sample trial i draw from the same stream
    ok(d, &["sample", "--graph", "g.txt", "--trials", "12", "--seed", "21", "--out", "s.jsonl"]);
    let samples = jsonl(&d.join("s.jsonl"));
    let records = jsonl(&d.join("m.jsonl"));
    assert_eq!(records.len(), 12);
    for (r, s) in records.iter().zip(&samples) {
        assert_eq!(r["x_n"], s["counts"][3]);
        assert_eq!(r["x_n"], r["recount"]);
        assert!((r["x0"].as_f64().unwrap() - 30.0 / 7.0).abs() <= 1e-9);
        assert!(r["m_n"].is_null());
    }

    ok(d, &[
        "martingale", "--graph", "g.txt", "--k", "3", "--traces", "2", "--seed", "21", "--quadrature", "fast",
        "--full", "traces", "--out", "f.jsonl",
    ]);
    let csv = fs::read_to_string(d.join("traces/trace_00001.csv")).unwrap();
    assert_eq!(csv.lines().count(), 32);
    assert!(csv.starts_with("j,X_j,Y_j,sq_increment,M_j\n"));
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(d.join("f.jsonl.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
    assert!(jsonl(&d.join("f.jsonl"))[0]["m_n"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_rejects_bad_configs_and_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.toml"), "[[variance]]\ngraph = { family = \"complete\", n = 4 }\ntrials = 1\n")
        .unwrap();
    let out = irsub(d, &["verify", "--config", "bad.toml", "--seed", "1", "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("variance[0].trials"), "{}", stderr(&out));

    fs::write(d.join("typo.toml"), "[[exact]]\ngraph = { family = \"complete\", n = 4 }\nks = 1\n").unwrap();
    let out = irsub(d, &["verify", "--config", "typo.toml", "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ks"));

    // vertex 3 loses an edge
    fs::write(d.join("tampered.txt"), "4 3\n0 1\n0 2\n0 3\n1 2\n1 3\n").unwrap();
    fs::write(d.join("t.toml"), "[[exact]]\ngraph = { family = \"from_file\", path = \"tampered.txt\" }\n").unwrap();
    let out = irsub(d, &["verify", "--config", "t.toml", "--seed", "1", "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("vertex 2"), "{}", stderr(&out));
    assert!(!d.join("r.json").exists());
}

#[test]
fn verify_passes_on_a_small_config_and_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--family", "complete", "--n", "5", "--out", "k5.txt"]);
    fs::write(
        d.join("v.toml"),
        r#"
seed = 99
[[exact]]
graph = { family = "from_file", path = "k5.txt" }
[[monte_carlo]]
graph = { family = "circulant", n = 60, offsets = [1, 4] }
trials = 200
check_variance = true
[[martingale]]
graph = { family = "complete", n = 4 }
k = 2
traces = 300
compare_oracle = true
[claims]
f_grid = 100
"#,
    )
    .unwrap();
    ok(d, &["--threads", "1", "verify", "--config", "v.toml", "--out", "one.json"]);
    let out = Command::new(BIN)
        .current_dir(d)
        .args(["verify", "--config", "v.toml", "--out", "three.json"])
        .env("IRSUB_THREADS", "3")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read(d.join("one.json")).unwrap(), fs::read(d.join("three.json")).unwrap());
    let report: Value = serde_json::from_str(&fs::read_to_string(d.join("one.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["master_seed"], 99);
    assert!(report["exact"][0]["graph"].as_str().unwrap().contains("k5.txt"));
}

#[test]
fn smoke_config_runs_and_reports_the_failing_joint_checks() {
    let config = workspace_root().join("configs/smoke.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = irsub(dir.path(), &["verify", "--config", config.to_str().unwrap(), "--out", "smoke.json"]);
    // the pair bound does not hold for the single edge of K_2
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("smoke.json")).unwrap()).unwrap();
    let failed: Vec<&str> = report["assertions"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|a| a["passed"] == false)
        .map(|a| a["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["joint bound on complete(n=2), k = 0", "joint bound on complete(n=2), k = 1"]);
    assert!(report["assertions"].as_array().unwrap().len() > 40);
}
