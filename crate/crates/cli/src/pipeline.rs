//! Parallel drivers over whole corpora.
//!
//! Work is split into fixed-size chunks of messages; each chunk is mapped in
//! parallel and then emitted in input order, so output never depends on the
//! thread count.

use std::path::Path;

use rayon::prelude::*;
use replyset_core::baselines::{assign_topics, matching_topk, mmr_select, topic_dedup_select, TopicAssignment};
use replyset_core::corpus::{CandidatePool, DialoguePair};
use replyset_core::encoder::{HashedTfidfEncoder, Side};
use replyset_core::index::{RetrievalIndex, ScoredHit};
use replyset_core::matrix::EmbeddingMatrix;
use replyset_core::planner::{plan_reply_set, BootstrapRecord, PlanMode, PlannerConfig, ReplySet};

use crate::config::{RunConfig, Strategy};
use crate::error::{CliError, Result};
use crate::io;

const CHUNK: usize = 512;

pub const POOL_MATRIX: &str = "pool.emb";
pub const ENCODER_FILE: &str = "encoder.json";

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// `top_n` for every row of `queries`, in row order.
pub fn batch_top_n(
    index: &RetrievalIndex,
    queries: &EmbeddingMatrix,
    n: usize,
    use_bias: bool,
) -> Result<Vec<Vec<ScoredHit>>> {
    let rows: Vec<usize> = (0..queries.rows()).collect();
    rows.par_iter().map(|&i| index.top_n(queries.row(i), n, use_bias).map_err(CliError::from)).collect()
}

/// Maps `f` over `0..len` in parallel chunks and hands results to `sink` in order.
fn ordered_map<T: Send>(
    len: usize,
    f: impl Fn(usize) -> Result<T> + Sync,
    mut sink: impl FnMut(T) -> Result<()>,
) -> Result<()> {
    let mut start = 0;
    while start < len {
        let end = (start + CHUNK).min(len);
        let chunk: Vec<T> = (start..end).into_par_iter().map(&f).collect::<Result<_>>()?;
        for item in chunk {
            sink(item)?;
        }
        start = end;
    }
    Ok(())
}

/// Pool, encoder and index loaded from an ingest/encode output.
pub struct Workspace {
    pub pool: CandidatePool,
    pub encoder: HashedTfidfEncoder,
    pub index: RetrievalIndex,
}

impl Workspace {
    pub fn build(pool: CandidatePool, encoder: HashedTfidfEncoder, matrix: EmbeddingMatrix, beta: f64) -> Result<Self> {
        if matrix.rows() != pool.len() {
            return Err(CliError::Core(replyset_core::Error::LengthMismatch {
                what: "pool matrix",
                expected: pool.len(),
                actual: matrix.rows(),
            }));
        }
        let index = RetrievalIndex::new(matrix, pool.lm_bias().to_vec(), beta)?;
        Ok(Self { pool, encoder, index })
    }

    pub fn load(pool_path: &Path, emb_dir: &Path, beta: f64) -> Result<Self> {
        let pool = io::read_pool(pool_path)?;
        let encoder = io::load_encoder(&emb_dir.join(ENCODER_FILE))?;
        let matrix = io::load_matrix(&emb_dir.join(POOL_MATRIX))?;
        Self::build(pool, encoder, matrix, beta)
    }

    /// Message or reply vectors for `pairs`: `<stem>.<side>.emb` from
    /// `emb_dir` when present, otherwise encoded on the fly.
    pub fn vectors(
        &self,
        pairs: &[DialoguePair],
        emb_dir: Option<&Path>,
        corpus: &Path,
        side: Side,
    ) -> Result<EmbeddingMatrix> {
        if let Some(dir) = emb_dir {
            let p = dir.join(matrix_name(corpus, side));
            if p.exists() {
                let m = io::load_matrix(&p)?;
                if m.rows() != pairs.len() || m.dim() != self.encoder.dim() {
                    return Err(CliError::bad_file(&p, "matrix shape does not match corpus and encoder"));
                }
                return Ok(m);
            }
        }
        Ok(encode_pairs(&self.encoder, pairs, side))
    }
}

pub fn matrix_name(corpus: &Path, side: Side) -> String {
    let stem = corpus.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tag = match side {
        Side::Message => "context",
        Side::Reply => "reply",
    };
    format!("{stem}.{tag}.emb")
}

/// Parallel `encode_messages`.
pub fn encode_pairs(enc: &HashedTfidfEncoder, pairs: &[DialoguePair], side: Side) -> EmbeddingMatrix {
    let rows: Vec<Vec<f32>> = pairs
        .par_iter()
        .map(|p| {
            enc.encode(match side {
                Side::Message => &p.context,
                Side::Reply => &p.reply,
            })
        })
        .collect();
    EmbeddingMatrix::from_rows(enc.dim(), rows).expect("encoder output is finite")
}

/// Parallel `encode_pool`.
pub fn encode_pool(enc: &HashedTfidfEncoder, pool: &CandidatePool) -> EmbeddingMatrix {
    let rows: Vec<Vec<f32>> = (0..pool.len()).into_par_iter().map(|i| enc.encode_tokens(pool.tokens(i))).collect();
    EmbeddingMatrix::from_rows(enc.dim(), rows).expect("encoder output is finite")
}

/// Plans one record per pair and streams them to `sink` in input order.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_dataset(
    ws: &Workspace,
    pairs: &[DialoguePair],
    messages: &EmbeddingMatrix,
    replies: &EmbeddingMatrix,
    cfg: &PlannerConfig,
    mode: PlanMode,
    sink: impl FnMut(BootstrapRecord) -> Result<()>,
) -> Result<()> {
    cfg.validate()?;
    ordered_map(
        pairs.len(),
        |i| {
            plan_reply_set(&pairs[i], messages.row(i), replies.row(i), &ws.index, &ws.pool, cfg, mode)
                .map_err(|source| CliError::Record { message_id: pairs[i].message_id, source })
        },
        sink,
    )
}

/// A prediction strategy with its precomputed state.
pub enum Selector {
    Matching,
    Mmr { theta: f64, shortlist: usize },
    Topic { topics: TopicAssignment, shortlist: usize },
    PlannerOnline(PlannerConfig),
}

impl Selector {
    pub fn new(strategy: Strategy, ws: &Workspace, cfg: &RunConfig) -> Result<Self> {
        Ok(match strategy {
            Strategy::Matching => Self::Matching,
            Strategy::Mmr => Self::Mmr { theta: cfg.theta, shortlist: cfg.n },
            Strategy::Topic => {
                Self::Topic { topics: assign_topics(ws.index.matrix(), cfg.n_topics, cfg.seed)?, shortlist: cfg.n }
            }
            Strategy::PlannerOnline => Self::PlannerOnline(cfg.planner()),
        })
    }

    pub fn select(&self, ws: &Workspace, pair: &DialoguePair, query: &[f32], k: usize) -> Result<ReplySet> {
        let set = match self {
            Self::Matching => matching_topk(&ws.index, &ws.pool, query, k)?,
            Self::Mmr { theta, shortlist } => mmr_select(&ws.index, &ws.pool, query, k, *theta, *shortlist)?,
            Self::Topic { topics, shortlist } => {
                topic_dedup_select(&ws.index, &ws.pool, query, k, topics, *shortlist)?.reply_set
            }
            Self::PlannerOnline(cfg) => {
                let cfg = PlannerConfig { set_size: k, ..cfg.clone() };
                plan_reply_set(pair, query, query, &ws.index, &ws.pool, &cfg, PlanMode::Online)?.reply_set
            }
        };
        Ok(set)
    }
}

/// Predicted reply sets for every pair, streamed in input order.
pub fn predict(
    ws: &Workspace,
    selector: &Selector,
    pairs: &[DialoguePair],
    messages: &EmbeddingMatrix,
    k: usize,
    sink: impl FnMut((u64, ReplySet)) -> Result<()>,
) -> Result<()> {
    ordered_map(pairs.len(), |i| Ok((pairs[i].message_id, selector.select(ws, &pairs[i], messages.row(i), k)?)), sink)
}
