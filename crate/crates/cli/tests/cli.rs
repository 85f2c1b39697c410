use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CORPUS: &str = r#"{"doc_id":"d1","text":"Apple revenue in 2019 was 260174 million dollars from iPhone sales","subset":"finqa"}
{"doc_id":"d2","text":"Microsoft operating income grew to 42959 million in fiscal 2019","subset":"finqa"}
{"doc_id":"d3","text":"The company repurchased 15 million shares during the year","subset":"convfinqa"}
{"doc_id":"d4","text":"Total assets of the bank reached 2687 billion at year end","subset":"tatdqa"}
{"doc_id":"d5","text":"Amazon net sales increased 20 percent to 280522 million","subset":"tatdqa"}
"#;

const QUERIES: &str = r#"{"query_id":"q1","text":"What was Apple revenue in 2019?","gold_doc_id":"d1","gold_answer":260174,"subset":"finqa"}
{"query_id":"q2","text":"Microsoft operating income fiscal 2019","gold_doc_id":"d2","gold_answer":42959,"subset":"finqa"}
{"query_id":"q3","text":"How many shares were repurchased?","gold_doc_id":"d3","gold_answer":15,"subset":"convfinqa"}
{"query_id":"q4","text":"bank total assets at year end","gold_doc_id":"d4","gold_answer":2687,"subset":"tatdqa"}
{"query_id":"q5","text":"Amazon net sales growth","gold_doc_id":"d5","gold_answer":20,"subset":"tatdqa"}
"#;

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("corpus.jsonl"), CORPUS).unwrap();
    fs::write(dir.path().join("queries.jsonl"), QUERIES).unwrap();
    dir
}

fn ragbench(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ragbench"))
        .current_dir(dir)
        .env_remove("RAGBENCH_EMBED_KEY")
        .env_remove("RAGBENCH_LLM_KEY")
        .env_remove("RAGBENCH_RERANK_KEY")
        .args(["--offline", "--corpus", "corpus.jsonl", "--queries", "queries.jsonl", "--out-dir", "out"])
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn ingest_reports_counts() {
    let dir = setup();
    let stdout = ok(&ragbench(dir.path(), &["ingest"]));
    assert!(stdout.contains("documents: 5"));
    assert!(stdout.contains("queries: 5"));
}

#[test]
fn run_writes_report_and_csvs_then_eval_reproduces_it() {
    let dir = setup();
    let stdout = ok(&ragbench(dir.path(), &["run", "--methods", "bm25,hybrid_rrf,oracle"]));
    assert!(stdout.contains("hybrid_rrf"));
    let out = dir.path().join("out");
    for f in ["report.json", "per_query.csv", "recall_curve.csv", "significance.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let per_query = fs::read_to_string(out.join("per_query.csv")).unwrap();
    assert!(per_query.starts_with("method,query_id,subset,metric,value\n"));

    let first = fs::read(out.join("report.json")).unwrap();
    ok(&ragbench(dir.path(), &["run", "--methods", "bm25,hybrid_rrf,oracle"]));
    assert_eq!(first, fs::read(out.join("report.json")).unwrap());

    let stdout = ok(&ragbench(dir.path(), &["eval", "out/report.json", "--check"]));
    assert!(stdout.contains("byte-identical"));
}

#[test]
fn generate_and_sweep_outputs() {
    let dir = setup();
    let stdout = ok(&ragbench(dir.path(), &["generate", "--methods", "oracle"]));
    assert!(stdout.contains("number_match"));
    assert!(dir.path().join("out/generation.csv").exists());

    ok(&ragbench(dir.path(), &["sweep", "--axis", "alpha", "--values", "0,0.5,1"]));
    let sweep = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(sweep.lines().filter(|l| l.contains("recall@5")).count(), 3);
}

#[test]
fn failures_on_stored_report() {
    let dir = setup();
    ok(&ragbench(dir.path(), &["run", "--methods", "dense"]));
    ok(&ragbench(dir.path(), &["failures", "out/report.json", "--method", "dense", "--n", "10"]));
    let cases: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/failures.json")).unwrap()).unwrap();
    assert!(cases.is_array());
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = setup();
    let out = ragbench(dir.path(), &["run", "--methods", "nonsense"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonsense"));

    let out = ragbench(dir.path(), &["sweep", "--axis", "depth", "--values", "1"]);
    assert!(!out.status.success());
}

#[test]
fn online_mode_without_credentials_refuses() {
    let dir = setup();
    let out = Command::new(env!("CARGO_BIN_EXE_ragbench"))
        .current_dir(dir.path())
        .env_remove("RAGBENCH_EMBED_KEY")
        .args([
            "--corpus",
            "corpus.jsonl",
            "--queries",
            "queries.jsonl",
            "--out-dir",
            "out",
            "run",
            "--methods",
            "dense",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("RAGBENCH_EMBED_KEY"), "{stderr}");

    // bm25 needs no provider, so it still runs online without keys
    let out = Command::new(env!("CARGO_BIN_EXE_ragbench"))
        .current_dir(dir.path())
        .env_remove("RAGBENCH_EMBED_KEY")
        .args([
            "--corpus",
            "corpus.jsonl",
            "--queries",
            "queries.jsonl",
            "--out-dir",
            "out",
            "run",
            "--methods",
            "bm25",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn example_config_parses() {
    let dir = setup();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.toml");
    let out = Command::new(env!("CARGO_BIN_EXE_ragbench"))
        .current_dir(dir.path())
        .args(["--offline", "--config", config.to_str().unwrap()])
        .args(["--corpus", "corpus.jsonl", "--queries", "queries.jsonl", "ingest"])
        .output()
        .unwrap();
    ok(&out);
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = setup();
    fs::write(dir.path().join("bad.toml"), "seed = 1\n[bm25]\nk = 1.2\n").unwrap();
    let out = ragbench(dir.path(), &["--config", "bad.toml", "ingest"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));
}
