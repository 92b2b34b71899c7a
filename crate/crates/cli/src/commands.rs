//! One function per subcommand. Each returns the text printed on stdout.

use std::path::Path;

use replyset_core::corpus::build_candidate_pool;
use replyset_core::encoder::{HashedTfidfEncoder, Side};
use replyset_core::metrics::evaluate;
use serde_json::json;

use crate::bench;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{self, JsonlWriter, Prediction};
use crate::pipeline::{self, Selector, Workspace, ENCODER_FILE, POOL_MATRIX};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ingest,
    Encode,
    Bootstrap,
    Predict,
    Evaluate,
    Bench,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Self::Ingest, Self::Encode, Self::Bootstrap, Self::Predict, Self::Evaluate, Self::Bench];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ingest => "ingest",
            Self::Encode => "encode",
            Self::Bootstrap => "bootstrap",
            Self::Predict => "predict",
            Self::Evaluate => "evaluate",
            Self::Bench => "bench",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Self::Ingest => "Build the deduplicated candidate pool from --corpus into --output",
            Self::Encode => "Fit the built-in encoder and write matrices into --emb-dir",
            Self::Bootstrap => "Plan a reply set for every message of --corpus into --output",
            Self::Predict => "Predict reply sets for --test-corpus with --strategy into --output",
            Self::Evaluate => "Score --predictions against --test-corpus",
            Self::Bench => "Time every strategy on --test-corpus (or --corpus)",
        }
    }
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    pipeline::with_threads(cfg.threads, || match cmd {
        Command::Ingest => ingest(cfg),
        Command::Encode => encode(cfg),
        Command::Bootstrap => bootstrap(cfg),
        Command::Predict => predict(cfg),
        Command::Evaluate => evaluate_cmd(cfg),
        Command::Bench => bench_cmd(cfg),
    })?
}

fn ingest(cfg: &RunConfig) -> Result<String> {
    let corpus = cfg.require("corpus", &cfg.corpus)?;
    let output = cfg.require("output", &cfg.output)?;
    let pairs = io::load_dialogue_corpus(corpus, cfg.persona)?;
    let pool = build_candidate_pool(&pairs)?;
    io::write_pool(output, &pool, &io::meta(cfg.echo(), &[corpus])?)?;
    Ok(format!("pairs {} pool {} empty_replies {}\n", pairs.len(), pool.len(), pool.empty_replies().len()))
}

fn encode(cfg: &RunConfig) -> Result<String> {
    let corpus = cfg.require("corpus", &cfg.corpus)?;
    let pool_path = cfg.require("pool", &cfg.pool)?;
    let dir = cfg.require("emb_dir", &cfg.emb_dir)?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let pool = io::read_pool(pool_path)?;
    let pairs = io::load_dialogue_corpus(corpus, cfg.persona)?;
    let enc = HashedTfidfEncoder::fit(&pool, &pairs, cfg.dim, cfg.seed)?;
    let meta = io::meta(cfg.echo(), &[corpus, pool_path])?;
    io::save_encoder(&dir.join(ENCODER_FILE), &enc, &meta)?;
    io::save_matrix(&dir.join(POOL_MATRIX), &pipeline::encode_pool(&enc, &pool), &meta)?;
    let mut written = vec![POOL_MATRIX.to_string()];
    let mut corpora = vec![(corpus, pairs)];
    if let Some(test) = cfg.test_corpus.as_deref() {
        corpora.push((test, io::load_dialogue_corpus(test, cfg.persona)?));
    }
    for (path, pairs) in &corpora {
        let meta = io::meta(cfg.echo(), &[path, pool_path])?;
        for side in [Side::Message, Side::Reply] {
            let name = pipeline::matrix_name(path, side);
            io::save_matrix(&dir.join(&name), &pipeline::encode_pairs(&enc, pairs, side), &meta)?;
            written.push(name);
        }
    }
    Ok(format!("dim {} vocab {} wrote {}\n", enc.dim(), enc.vocab_len(), written.join(" ")))
}

fn inputs(data: &Path, pool: &Path, dir: &Path) -> Vec<std::path::PathBuf> {
    vec![data.to_path_buf(), pool.to_path_buf(), dir.join(ENCODER_FILE), dir.join(POOL_MATRIX)]
}

fn bootstrap(cfg: &RunConfig) -> Result<String> {
    let corpus = cfg.require("corpus", &cfg.corpus)?;
    let pool_path = cfg.require("pool", &cfg.pool)?;
    let dir = cfg.require("emb_dir", &cfg.emb_dir)?;
    let output = cfg.require("output", &cfg.output)?;
    let ws = Workspace::load(pool_path, dir, cfg.beta)?;
    let pairs = io::load_dialogue_corpus(corpus, cfg.persona)?;
    let messages = ws.vectors(&pairs, Some(dir), corpus, Side::Message)?;
    let replies = ws.vectors(&pairs, Some(dir), corpus, Side::Reply)?;
    let hashed = inputs(corpus, pool_path, dir);
    let refs: Vec<&Path> = hashed.iter().map(|p| p.as_path()).collect();
    let mut w = JsonlWriter::create(output, &io::meta(cfg.echo(), &refs)?)?;
    let mut n = 0usize;
    pipeline::bootstrap_dataset(&ws, &pairs, &messages, &replies, &cfg.planner(), cfg.mode, |r| {
        n += 1;
        io::write_bootstrap_record(&mut w, &r)
    })?;
    w.finish()?;
    Ok(format!("records {n}\n"))
}

fn test_corpus(cfg: &RunConfig) -> Result<&Path> {
    cfg.test_corpus
        .as_deref()
        .or(cfg.corpus.as_deref())
        .ok_or_else(|| CliError::Usage("--test-corpus is required".into()))
}

fn predict(cfg: &RunConfig) -> Result<String> {
    let test = test_corpus(cfg)?;
    let pool_path = cfg.require("pool", &cfg.pool)?;
    let dir = cfg.require("emb_dir", &cfg.emb_dir)?;
    let output = cfg.require("output", &cfg.output)?;
    let ws = Workspace::load(pool_path, dir, cfg.beta)?;
    let pairs = io::load_dialogue_corpus(test, cfg.persona)?;
    let messages = ws.vectors(&pairs, Some(dir), test, Side::Message)?;
    let selector = Selector::new(cfg.strategy, &ws, cfg)?;
    let hashed = inputs(test, pool_path, dir);
    let refs: Vec<&Path> = hashed.iter().map(|p| p.as_path()).collect();
    let mut w = JsonlWriter::create(output, &io::meta(cfg.echo(), &refs)?)?;
    pipeline::predict(&ws, &selector, &pairs, &messages, cfg.k, |(message_id, set)| {
        w.write(&Prediction { message_id, replies: set.texts })
    })?;
    w.finish()?;
    Ok(format!("strategy {} predictions {}\n", cfg.strategy, pairs.len()))
}

fn evaluate_cmd(cfg: &RunConfig) -> Result<String> {
    let test = test_corpus(cfg)?;
    let preds_path = cfg.require("predictions", &cfg.predictions)?;
    let pairs = io::load_dialogue_corpus(test, cfg.persona)?;
    let preds = io::read_predictions(preds_path)?;
    let report = evaluate(&preds, &pairs)?;
    if let Some(out) = cfg.output.as_deref() {
        io::write_json(out, &io::report_json(&report, &io::meta(cfg.echo(), &[test, preds_path])?))?;
    }
    Ok(io::report_table(&report))
}

fn bench_cmd(cfg: &RunConfig) -> Result<String> {
    let test = test_corpus(cfg)?;
    let pool_path = cfg.require("pool", &cfg.pool)?;
    let dir = cfg.require("emb_dir", &cfg.emb_dir)?;
    let ws = Workspace::load(pool_path, dir, cfg.beta)?;
    let pairs = io::load_dialogue_corpus(test, cfg.persona)?;
    let rows = bench::bench_all(&ws, cfg, &pairs)?;
    if let Some(out) = cfg.output.as_deref() {
        io::write_json(out, &json!({ "batch_size": cfg.batch_size, "pool": ws.pool.len(), "rows": rows }))?;
    }
    Ok(bench::table(&rows))
}
