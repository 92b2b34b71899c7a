//! Per-strategy latency and throughput at a fixed batch size.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use replyset_core::corpus::DialoguePair;
use serde::Serialize;

use crate::config::{RunConfig, Strategy};
use crate::error::Result;
use crate::pipeline::{Selector, Workspace};

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub strategy: String,
    pub messages: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p99_ms: f64,
    pub msgs_per_s: f64,
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Timed passes per strategy, after one untimed warm-up pass.
pub const PASSES: usize = 5;

/// One pass over `pairs`: per-message latencies in ms and summed batch wall time.
fn timed_pass(
    ws: &Workspace,
    selector: &Selector,
    pairs: &[DialoguePair],
    k: usize,
    batch_size: usize,
) -> Result<(Vec<f64>, Duration)> {
    let mut latencies = Vec::with_capacity(pairs.len());
    let mut wall = Duration::ZERO;
    for batch in pairs.chunks(batch_size) {
        let start = Instant::now();
        let times: Vec<Duration> = batch
            .par_iter()
            .map(|p| {
                let t = Instant::now();
                let q = ws.encoder.encode(&p.context);
                selector.select(ws, p, &q, k)?;
                Ok(t.elapsed())
            })
            .collect::<Result<_>>()?;
        wall += start.elapsed();
        latencies.extend(times.iter().map(|d| d.as_secs_f64() * 1e3));
    }
    Ok((latencies, wall))
}

fn row(name: &str, n: usize, mut latencies: Vec<f64>, mut walls: Vec<Duration>) -> BenchRow {
    walls.sort_unstable();
    let wall = walls.get(walls.len() / 2).copied().unwrap_or_default();
    let mean = if latencies.is_empty() { 0.0 } else { latencies.iter().sum::<f64>() / latencies.len() as f64 };
    latencies.sort_by(f64::total_cmp);
    BenchRow {
        strategy: name.to_owned(),
        messages: n,
        mean_ms: mean,
        p50_ms: percentile(&latencies, 50.0),
        p99_ms: percentile(&latencies, 99.0),
        msgs_per_s: if wall.is_zero() { 0.0 } else { n as f64 / wall.as_secs_f64() },
    }
}

/// Times several strategies on the same messages. Each message is encoded and
/// answered inside its own timer. Timed passes rotate through the strategies,
/// so slow drift in machine load hits all of them alike. Throughput comes from
/// each strategy's median-wall-time pass; latency percentiles pool all passes.
pub fn bench_selectors(
    ws: &Workspace,
    selectors: &[(&str, Selector)],
    pairs: &[DialoguePair],
    k: usize,
    batch_size: usize,
) -> Result<Vec<BenchRow>> {
    for (_, s) in selectors {
        timed_pass(ws, s, pairs, k, batch_size)?;
    }
    let mut latencies = vec![Vec::with_capacity(pairs.len() * PASSES); selectors.len()];
    let mut walls = vec![Vec::with_capacity(PASSES); selectors.len()];
    for _ in 0..PASSES {
        for (i, (_, s)) in selectors.iter().enumerate() {
            let (l, w) = timed_pass(ws, s, pairs, k, batch_size)?;
            latencies[i].extend(l);
            walls[i].push(w);
        }
    }
    Ok(selectors
        .iter()
        .zip(latencies.into_iter().zip(walls))
        .map(|((name, _), (l, w))| row(name, pairs.len(), l, w))
        .collect())
}

pub fn bench_all(ws: &Workspace, cfg: &RunConfig, pairs: &[DialoguePair]) -> Result<Vec<BenchRow>> {
    let pairs = if cfg.limit == 0 { pairs } else { &pairs[..cfg.limit.min(pairs.len())] };
    let selectors =
        Strategy::ALL.iter().map(|&s| Ok((s.name(), Selector::new(s, ws, cfg)?))).collect::<Result<Vec<_>>>()?;
    bench_selectors(ws, &selectors, pairs, cfg.k, cfg.batch_size)
}

pub fn table(rows: &[BenchRow]) -> String {
    let mut out = format!(
        "{:<16}{:>10}{:>12}{:>12}{:>12}{:>12}\n",
        "strategy", "messages", "mean_ms", "p50_ms", "p99_ms", "msgs/s"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<16}{:>10}{:>12.3}{:>12.3}{:>12.3}{:>12.1}\n",
            r.strategy, r.messages, r.mean_ms, r.p50_ms, r.p99_ms, r.msgs_per_s
        ));
    }
    out
}
