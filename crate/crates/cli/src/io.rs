//! File formats: corpus, pool, matrix, encoder, bootstrap, predictions, report.
//!
//! Every file this crate writes carries a `_meta` record with the effective
//! configuration and a SHA-256 of each input. JSON-lines files put it on the
//! first line; readers skip it.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use replyset_core::corpus::{CandidatePool, DialoguePair};
use replyset_core::encoder::HashedTfidfEncoder;
use replyset_core::matrix::EmbeddingMatrix;
use replyset_core::metrics::{EvalReport, ExampleScore};
use replyset_core::planner::BootstrapRecord;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const META_KEY: &str = "_meta";

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// `{"config": ..., "inputs": {file name: sha256}}`.
pub fn meta(config: Value, inputs: &[&Path]) -> Result<Value> {
    let mut hashes = Map::new();
    for p in inputs {
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        hashes.insert(name, Value::String(sha256_file(p)?));
    }
    Ok(json!({ "config": config, "inputs": hashes }))
}

fn is_meta(v: &Value) -> bool {
    v.as_object().is_some_and(|o| o.contains_key(META_KEY))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

/// Yields `(1-based line number, parsed value)` for every non-blank,
/// non-header line.
fn json_lines(path: &Path) -> Result<impl Iterator<Item = Result<(usize, Value)>> + '_> {
    let reader = open(path)?;
    Ok(reader.lines().enumerate().filter_map(move |(i, line)| {
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(CliError::io(path, e))),
        };
        if line.trim().is_empty() {
            return None;
        }
        match serde_json::from_str::<Value>(&line) {
            Ok(v) if is_meta(&v) => None,
            Ok(v) => Some(Ok((i + 1, v))),
            Err(e) => Some(Err(CliError::MalformedLine { path: path.into(), line: i + 1, reason: e.to_string() })),
        }
    }))
}

fn str_field<'a>(path: &Path, line: usize, obj: &'a Map<String, Value>, field: &'static str) -> Result<&'a str> {
    match obj.get(field) {
        None | Some(Value::Null) => Err(CliError::MissingField { path: path.into(), line, field }),
        Some(Value::String(s)) => Ok(s),
        Some(_) => {
            Err(CliError::MalformedLine { path: path.into(), line, reason: format!("`{field}` must be a string") })
        }
    }
}

/// Loads a JSON-lines dialogue corpus. `message_id` is the 0-based line index.
pub fn load_dialogue_corpus(path: &Path, persona_mode: bool) -> Result<Vec<DialoguePair>> {
    let mut pairs = Vec::new();
    for item in json_lines(path)? {
        let (line, v) = item?;
        let malformed = |reason: String| CliError::MalformedLine { path: path.into(), line, reason };
        let obj = v.as_object().ok_or_else(|| malformed("expected a JSON object".into()))?;
        let context = str_field(path, line, obj, "context")?;
        let reply = str_field(path, line, obj, "reply")?;
        let persona = match obj.get("persona") {
            None | Some(Value::Null) => None,
            Some(Value::Array(items)) => Some(
                items
                    .iter()
                    .map(|s| s.as_str().map(str::to_owned))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| malformed("`persona` must be an array of strings".into()))?,
            ),
            Some(_) => return Err(malformed("`persona` must be an array of strings".into())),
        };
        let pair = DialoguePair::new((line - 1) as u64, context, reply, persona, persona_mode)
            .map_err(|e| malformed(e.to_string()))?;
        pairs.push(pair);
    }
    Ok(pairs)
}

/// Buffered JSON-lines writer that starts with a `_meta` header.
pub struct JsonlWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl JsonlWriter {
    pub fn create(path: &Path, meta: &Value) -> Result<Self> {
        let f = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = Self { path: path.into(), out: BufWriter::new(f) };
        w.write(&json!({ META_KEY: meta }))?;
        Ok(w)
    }

    pub fn write<T: Serialize>(&mut self, row: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, row).map_err(|e| CliError::bad_file(&self.path, e.to_string()))?;
        self.out.write_all(b"\n").map_err(|e| CliError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

#[derive(Serialize, Deserialize)]
struct PoolRow {
    reply_id: usize,
    text: String,
    lm_bias: f64,
}

pub fn write_pool(path: &Path, pool: &CandidatePool, meta: &Value) -> Result<()> {
    let mut w = JsonlWriter::create(path, meta)?;
    for (id, (text, bias)) in pool.replies().iter().zip(pool.lm_bias()).enumerate() {
        w.write(&PoolRow { reply_id: id, text: text.clone(), lm_bias: *bias })?;
    }
    w.finish()
}

pub fn read_pool(path: &Path) -> Result<CandidatePool> {
    let mut texts = Vec::new();
    let mut bias = Vec::new();
    for item in json_lines(path)? {
        let (line, v) = item?;
        let row: PoolRow = serde_json::from_value(v).map_err(|e| CliError::MalformedLine {
            path: path.into(),
            line,
            reason: e.to_string(),
        })?;
        if row.reply_id != texts.len() {
            return Err(CliError::MalformedLine {
                path: path.into(),
                line,
                reason: format!("reply_id {} out of order, expected {}", row.reply_id, texts.len()),
            });
        }
        texts.push(row.text);
        bias.push(row.lm_bias);
    }
    Ok(CandidatePool::from_parts(texts, bias)?)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes the binary matrix and a `<file>.meta.json` sidecar.
pub fn save_matrix(path: &Path, m: &EmbeddingMatrix, meta: &Value) -> Result<()> {
    std::fs::write(path, m.to_bytes()).map_err(|e| CliError::io(path, e))?;
    let side = sidecar(path);
    let body = json!({ META_KEY: meta, "rows": m.rows(), "dim": m.dim() });
    std::fs::write(&side, format!("{body}\n")).map_err(|e| CliError::io(&side, e))
}

pub fn load_matrix(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    EmbeddingMatrix::from_bytes(&bytes).map_err(|e| CliError::bad_file(path, e.to_string()))
}

#[derive(Serialize, Deserialize)]
struct EncoderFile {
    dim: usize,
    seed: u64,
    n_docs: usize,
    /// `(token, document frequency)`, sorted by token.
    df: Vec<(String, u64)>,
}

pub fn save_encoder(path: &Path, enc: &HashedTfidfEncoder, meta: &Value) -> Result<()> {
    let body = EncoderFile {
        dim: enc.dim(),
        seed: enc.seed(),
        n_docs: enc.n_docs(),
        df: enc.document_frequencies().map(|(t, d)| (t.to_owned(), d)).collect(),
    };
    let mut v = serde_json::to_value(body).expect("encoder serialises");
    v[META_KEY] = meta.clone();
    std::fs::write(path, format!("{v}\n")).map_err(|e| CliError::io(path, e))
}

pub fn load_encoder(path: &Path) -> Result<HashedTfidfEncoder> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let f: EncoderFile = serde_json::from_str(&text).map_err(|e| CliError::bad_file(path, e.to_string()))?;
    Ok(HashedTfidfEncoder::from_document_frequencies(f.dim, f.seed, f.n_docs, f.df)?)
}

#[derive(Serialize)]
struct BootstrapRow<'a> {
    message_id: u64,
    message: &'a str,
    reply_ids: &'a [usize],
    replies: &'a [String],
    gains: &'a [f64],
    ranks: &'a [usize],
    q_entropy: f64,
}

pub fn write_bootstrap_record(w: &mut JsonlWriter, r: &BootstrapRecord) -> Result<()> {
    w.write(&BootstrapRow {
        message_id: r.message_id,
        message: &r.message,
        reply_ids: &r.reply_set.reply_ids,
        replies: &r.reply_set.texts,
        gains: &r.reply_set.marginal_gains,
        ranks: &r.diagnostics.ranks,
        q_entropy: r.diagnostics.q_entropy,
    })
}

#[derive(Serialize, Deserialize)]
pub struct Prediction {
    pub message_id: u64,
    pub replies: Vec<String>,
}

/// Reads `{message_id, replies}` rows. Extra fields are ignored, so
/// bootstrap files can be scored directly.
pub fn read_predictions(path: &Path) -> Result<Vec<(u64, Vec<String>)>> {
    let mut out = Vec::new();
    for item in json_lines(path)? {
        let (line, v) = item?;
        for field in ["message_id", "replies"] {
            if v.get(field).is_none() {
                return Err(CliError::MissingField { path: path.into(), line, field });
            }
        }
        let p: Prediction = serde_json::from_value(v).map_err(|e| CliError::MalformedLine {
            path: path.into(),
            line,
            reason: e.to_string(),
        })?;
        out.push((p.message_id, p.replies));
    }
    Ok(out)
}

#[derive(Serialize)]
struct ReportRow {
    message_id: u64,
    rouge: f64,
    self_rouge: f64,
}

/// Report JSON with every score on the x100 display scale.
pub fn report_json(report: &EvalReport, meta: &Value) -> Value {
    let scale = EvalReport::display_scale;
    let rows: Vec<ReportRow> = report
        .per_example
        .iter()
        .map(|e: &ExampleScore| ReportRow {
            message_id: e.message_id,
            rouge: scale(e.max_rouge),
            self_rouge: scale(e.self_rouge),
        })
        .collect();
    json!({
        META_KEY: meta,
        "n": report.n,
        "rouge": scale(report.mean_rouge),
        "self_rouge": scale(report.mean_self_rouge),
        "per_example": rows,
    })
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).expect("json serialises");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

/// Fixed-width summary table.
pub fn report_table(report: &EvalReport) -> String {
    format!(
        "{:<12}{:>10}\n{:<12}{:>10}\n{:<12}{:>10.2}\n{:<12}{:>10.2}\n",
        "metric",
        "value",
        "n",
        report.n,
        "rouge",
        EvalReport::display_scale(report.mean_rouge),
        "self_rouge",
        EvalReport::display_scale(report.mean_self_rouge),
    )
}
