//! End-to-end checks of the `replyset` binary and its file formats.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use replyset::io::{load_dialogue_corpus, load_matrix, read_predictions};
use replyset::pipeline::{batch_top_n, encode_pairs, with_threads, Workspace};
use replyset::synthetic::{to_jsonl, zipf_pairs};
use replyset_core::corpus::build_candidate_pool;
use replyset_core::encoder::{HashedTfidfEncoder, Side};
use serde_json::Value;
use tempfile::TempDir;

fn replyset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_replyset")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Five pairs whose message equals the reply, over disjoint vocabularies.
const ECHO: &str = r#"{"context":"good morning to you","reply":"good morning to you"}
{"context":"see ya later alligator","reply":"see ya later alligator"}
{"context":"thanks so much friend","reply":"thanks so much friend"}
{"context":"what time is dinner","reply":"what time is dinner"}
{"context":"the weather looks nice","reply":"the weather looks nice"}
"#;

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new(corpus: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("train.jsonl"), corpus).unwrap();
        Self { dir }
    }

    fn p(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }

    fn prepare(&self) {
        let o = replyset(&["ingest", "--corpus", &self.p("train.jsonl"), "--output", &self.p("pool.jsonl")]);
        assert!(o.status.success(), "{}", stderr(&o));
        let o = replyset(&[
            "encode",
            "--corpus",
            &self.p("train.jsonl"),
            "--pool",
            &self.p("pool.jsonl"),
            "--emb-dir",
            &self.p("emb"),
            "--dim",
            "64",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }

    fn run(&self, cmd: &str, extra: &[&str]) -> Output {
        let (corpus, pool, emb) = (self.p("train.jsonl"), self.p("pool.jsonl"), self.p("emb"));
        let mut args = vec![cmd, "--corpus", corpus.as_str(), "--pool", pool.as_str(), "--emb-dir", emb.as_str()];
        args.extend_from_slice(extra);
        replyset(&args)
    }
}

#[test]
fn identity_predictions_score_100() {
    let f = Fixture::new(ECHO);
    f.prepare();
    let preds = f.p("preds.jsonl");
    let o = f.run("predict", &["--strategy", "matching", "--output", &preds]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = f.p("report.json");
    let o = replyset(&["evaluate", "--test-corpus", &f.p("train.jsonl"), "--predictions", &preds, "--output", &report]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("100.00"), "{}", stdout(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["rouge"], 100.0);
    assert_eq!(v["n"], 5);
    assert!(v["_meta"]["inputs"]["preds.jsonl"].is_string());
}

#[test]
fn bootstrap_records_follow_input_order() {
    let f = Fixture::new(ECHO);
    f.prepare();
    let out = f.p("boot.jsonl");
    let o = f.run(
        "bootstrap",
        &["--n", "5", "--m", "5", "--alpha", "0.75", "--lambda", "0.05", "--k", "3", "--output", &out],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let meta = &lines[0]["_meta"];
    assert_eq!(meta["config"]["alpha"], "0.75");
    assert_eq!(meta["inputs"].as_object().unwrap().len(), 4);
    let records = &lines[1..];
    assert_eq!(records.len(), 5);
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r["message_id"], i as u64);
        let mut ids: Vec<u64> = r["reply_ids"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
        assert_eq!(r["replies"].as_array().unwrap().len(), 3);
        assert_eq!(r["gains"].as_array().unwrap().len(), 3);
        assert_eq!(r["ranks"].as_array().unwrap().len(), 3);
        assert!(r["q_entropy"].as_f64().unwrap() >= 0.0);
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 3);
    }
    // bootstrap files are valid prediction files
    assert_eq!(read_predictions(Path::new(&out)).unwrap().len(), 5);
}

#[test]
fn flags_override_config_file() {
    let f = Fixture::new(ECHO);
    f.prepare();
    std::fs::write(f.dir.path().join("run.conf"), "k = 2\nn = 4\n").unwrap();
    let conf = f.p("run.conf");
    let count = |extra: &[&str]| {
        let out = f.p("o.jsonl");
        let mut args = vec!["--config", conf.as_str(), "--output", out.as_str()];
        args.extend_from_slice(extra);
        let o = f.run("predict", &args);
        assert!(o.status.success(), "{}", stderr(&o));
        let preds = read_predictions(Path::new(&out)).unwrap();
        preds[0].1.len()
    };
    assert_eq!(count(&[]), 2);
    assert_eq!(count(&["--k", "3"]), 3);
}

#[test]
fn exit_codes_and_error_lines() {
    let f = Fixture::new(ECHO);
    let o = replyset(&["bootstrap", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    let o = replyset(&["ingest", "--corpus", &f.p("train.jsonl")]);
    assert_eq!(o.status.code(), Some(1), "missing --output is a usage error");
    let o = replyset(&["ingest", "--corpus", &f.p("missing.jsonl"), "--output", &f.p("pool.jsonl")]);
    assert_eq!(o.status.code(), Some(2));
    let o = replyset(&["bootstrap", "--alpha", "1.5", "--corpus", "x"]);
    assert_eq!(o.status.code(), Some(1));

    std::fs::write(f.dir.path().join("bad.jsonl"), "{\"context\":\"a\",\"reply\":\"b\"}\n{\"context\":\"a\"}\n")
        .unwrap();
    let o = replyset(&["ingest", "--corpus", &f.p("bad.jsonl"), "--output", &f.p("pool.jsonl")]);
    assert_eq!(o.status.code(), Some(2));
    let line = stderr(&o).lines().find(|l| l.starts_with('{')).unwrap().to_owned();
    let v: Value = serde_json::from_str(&line).unwrap();
    assert_eq!(v["error"]["kind"], "missing_field");
    assert_eq!(v["error"]["line"], 2);
    assert_eq!(v["error"]["field"], "reply");
}

#[test]
fn help_lists_defaults() {
    let o = replyset(&["--help"]);
    assert!(o.status.success());
    let h = stdout(&o);
    for needle in ["[default: 100]", "[default: 0.75]", "[default: 0.05]", "[default: 32]", "bench"] {
        assert!(h.contains(needle), "missing {needle}");
    }
}

#[test]
fn bad_matrix_files_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let p: PathBuf = dir.path().join("m.emb");
    std::fs::write(&p, b"XXXX\x01\0\0\0\x01\0\0\0\0\0\0\0").unwrap();
    let e = load_matrix(&p).unwrap_err().to_string();
    assert!(e.contains("magic"), "{e}");
    std::fs::write(&p, b"EMB1\0\0\0\0\x04\0\0\0").unwrap();
    let e = load_matrix(&p).unwrap_err().to_string();
    assert!(e.contains("empty"), "{e}");
}

#[test]
fn fifty_thousand_line_corpus_loads() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("big.jsonl");
    std::fs::write(&p, to_jsonl(&zipf_pairs(50_000, 12_000, 1))).unwrap();
    let pairs = load_dialogue_corpus(&p, false).unwrap();
    assert_eq!(pairs.len(), 50_000);
    assert_eq!(pairs[49_999].message_id, 49_999);
}

#[test]
fn batch_top_n_is_thread_invariant() {
    let pairs = zipf_pairs(3_000, 2_000, 9);
    let pool = build_candidate_pool(&pairs).unwrap();
    let enc = HashedTfidfEncoder::fit(&pool, &pairs, 128, 1).unwrap();
    let matrix = enc.encode_pool(&pool);
    let ws = Workspace::build(pool, enc, matrix, 0.1).unwrap();
    let queries = encode_pairs(&ws.encoder, &pairs[..200], Side::Message);
    let single: Vec<_> = (0..queries.rows()).map(|i| ws.index.top_n(queries.row(i), 20, true).unwrap()).collect();
    for threads in [1, 2, 8] {
        let batched = with_threads(threads, || batch_top_n(&ws.index, &queries, 20, true)).unwrap().unwrap();
        assert_eq!(batched, single, "threads {threads}");
    }
}
