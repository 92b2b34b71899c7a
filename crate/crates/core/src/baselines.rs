//! Reference reply-set selectors: Matching top-K, MMR and topic dedup.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::CandidatePool;
use crate::index::{dot, RetrievalIndex, ScoredHit};
use crate::matrix::EmbeddingMatrix;
use crate::planner::ReplySet;
use crate::{Error, Result};

fn shortlist(index: &RetrievalIndex, query: &[f32], k: usize, n: usize) -> Result<Vec<ScoredHit>> {
    if k == 0 {
        return Err(Error::ZeroCount);
    }
    let hits = index.top_n(query, n.max(k), true)?;
    if hits.len() < k {
        return Err(Error::ShortlistTooSmall { available: hits.len(), requested: k });
    }
    Ok(hits)
}

/// Top `k` replies by biased score. Gains are the biased scores.
pub fn matching_topk(index: &RetrievalIndex, pool: &CandidatePool, query: &[f32], k: usize) -> Result<ReplySet> {
    let hits = shortlist(index, query, k, k)?;
    Ok(ReplySet::from_ids(pool, hits.iter().map(|h| h.reply_id).collect(), hits.iter().map(|h| h.score).collect()))
}

fn unit(v: &[f32]) -> Vec<f32> {
    let n = libm::sqrt(dot(v, v));
    if n == 0.0 {
        return vec![0.0; v.len()];
    }
    v.iter().map(|x| (*x as f64 / n) as f32).collect()
}

/// Maximal marginal relevance over the top-`shortlist_n` biased hits.
///
/// Each step takes the candidate maximising
/// `theta * score(n) - (1 - theta) * max_{s in selected} cos(n, s)`.
/// Ties go to the better-ranked candidate, so the first pick is always the
/// Matching top-1 and `theta = 1` reproduces [`matching_topk`].
pub fn mmr_select(
    index: &RetrievalIndex,
    pool: &CandidatePool,
    query: &[f32],
    k: usize,
    theta: f64,
    shortlist_n: usize,
) -> Result<ReplySet> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidConfig(format!("theta {theta} outside [0, 1]")));
    }
    let hits = shortlist(index, query, k, shortlist_n)?;
    let vecs: Vec<Vec<f32>> = hits.iter().map(|h| unit(index.matrix().row(h.reply_id))).collect();
    let mut max_sim = vec![f64::NEG_INFINITY; hits.len()];
    let mut taken = vec![false; hits.len()];
    let mut ids = Vec::with_capacity(k);
    let mut gains = Vec::with_capacity(k);
    for step in 0..k {
        let mut best: Option<(f64, usize)> = None;
        for i in (0..hits.len()).filter(|&i| !taken[i]) {
            let redundancy = if step == 0 { 0.0 } else { max_sim[i] };
            let s = theta * hits[i].score - (1.0 - theta) * redundancy;
            if best.is_none_or(|(b, _)| s > b) {
                best = Some((s, i));
            }
        }
        let (s, pick) = best.expect("k <= shortlist");
        taken[pick] = true;
        ids.push(hits[pick].reply_id);
        gains.push(s);
        for i in (0..hits.len()).filter(|&i| !taken[i]) {
            max_sim[i] = max_sim[i].max(dot(&vecs[i], &vecs[pick]));
        }
    }
    Ok(ReplySet::from_ids(pool, ids, gains))
}

/// Topic id per reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicAssignment {
    pub topics: Vec<u32>,
    pub n_topics: usize,
}

impl TopicAssignment {
    pub fn topic(&self, reply_id: usize) -> u32 {
        self.topics[reply_id]
    }
}

fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum()
}

fn nearest(point: &[f32], centroids: &[Vec<f32>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Seeded k-means over unit-normalized reply vectors.
///
/// k-means++ seeding, then 25 Lloyd iterations. A cluster that empties is
/// re-seeded from the point farthest from its current centroid.
pub fn assign_topics(matrix: &EmbeddingMatrix, n_topics: usize, seed: u64) -> Result<TopicAssignment> {
    const ITERATIONS: usize = 25;
    if n_topics < 2 {
        return Err(Error::InvalidConfig(format!("n_topics {n_topics} must be at least 2")));
    }
    let rows = matrix.rows();
    if n_topics > rows {
        return Err(Error::TooManyTopics { n_topics, rows });
    }
    let points: Vec<Vec<f32>> = matrix.iter_rows().map(unit).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding
    let mut centroids: Vec<Vec<f32>> = Vec::with_capacity(n_topics);
    let mut chosen = vec![false; rows];
    let first = rng.random_range(0..rows);
    chosen[first] = true;
    centroids.push(points[first].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < n_topics {
        let total: f64 = (0..rows).filter(|&i| !chosen[i]).map(|i| d2[i]).sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for i in (0..rows).filter(|&i| !chosen[i]) {
                if d2[i] > 0.0 {
                    pick = Some(i);
                    if target < d2[i] {
                        break;
                    }
                    target -= d2[i];
                }
            }
            pick.expect("positive mass has a support point")
        } else {
            (0..rows).find(|&i| !chosen[i]).expect("n_topics <= rows")
        };
        chosen[pick] = true;
        centroids.push(points[pick].clone());
        for i in 0..rows {
            d2[i] = d2[i].min(sq_dist(&points[i], &points[pick]));
        }
    }

    let dim = matrix.dim();
    let mut assign = vec![0usize; rows];
    for _ in 0..ITERATIONS {
        let mut dist = vec![0.0f64; rows];
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            assign[i] = c;
            dist[i] = d;
        }
        let mut sums = vec![vec![0.0f64; dim]; n_topics];
        let mut counts = vec![0usize; n_topics];
        for (i, p) in points.iter().enumerate() {
            counts[assign[i]] += 1;
            for (s, v) in sums[assign[i]].iter_mut().zip(p) {
                *s += *v as f64;
            }
        }
        for c in 0..n_topics {
            if counts[c] == 0 {
                // farthest point from its own centroid, ties to the lower index
                let far = (0..rows)
                    .filter(|&i| counts[assign[i]] > 1)
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
                if let Some(far) = far {
                    counts[assign[far]] -= 1;
                    assign[far] = c;
                    dist[far] = 0.0;
                    counts[c] = 1;
                    centroids[c] = points[far].clone();
                }
                continue;
            }
            let inv = 1.0 / counts[c] as f64;
            centroids[c] = sums[c].iter().map(|s| (s * inv) as f32).collect();
        }
    }
    for (i, p) in points.iter().enumerate() {
        assign[i] = nearest(p, &centroids).0;
    }
    Ok(TopicAssignment { topics: assign.into_iter().map(|c| c as u32).collect(), n_topics })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicSelection {
    pub reply_set: ReplySet,
    /// True when the shortlist ran out of fresh topics and repeats were used.
    pub used_fallback: bool,
}

/// Walks the biased ranking and skips replies whose topic is already used.
/// When the shortlist runs out first, the best-ranked skipped replies fill in.
pub fn topic_dedup_select(
    index: &RetrievalIndex,
    pool: &CandidatePool,
    query: &[f32],
    k: usize,
    topics: &TopicAssignment,
    shortlist_n: usize,
) -> Result<TopicSelection> {
    if topics.topics.len() != pool.len() {
        return Err(Error::LengthMismatch {
            what: "topic assignment",
            expected: pool.len(),
            actual: topics.topics.len(),
        });
    }
    let hits = shortlist(index, query, k, shortlist_n)?;
    let mut used_topics = Vec::with_capacity(k);
    let mut picked = Vec::with_capacity(k);
    let mut skipped = Vec::new();
    for (rank, h) in hits.iter().enumerate() {
        if picked.len() == k {
            break;
        }
        let t = topics.topic(h.reply_id);
        if used_topics.contains(&t) {
            skipped.push(rank);
        } else {
            used_topics.push(t);
            picked.push(rank);
        }
    }
    let used_fallback = picked.len() < k;
    for rank in skipped {
        if picked.len() == k {
            break;
        }
        picked.push(rank);
    }
    Ok(TopicSelection {
        reply_set: ReplySet::from_ids(
            pool,
            picked.iter().map(|&r| hits[r].reply_id).collect(),
            picked.iter().map(|&r| hits[r].score).collect(),
        ),
        used_fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;

    fn setup(rows: &[&[f32]]) -> (RetrievalIndex, CandidatePool) {
        let m = EmbeddingMatrix::from_rows(rows[0].len(), rows.iter().copied()).unwrap();
        let pool = CandidatePool::from_parts(
            (0..rows.len()).map(|i| alloc::format!("r{i}")).collect::<Vec<String>>(),
            vec![0.0; rows.len()],
        )
        .unwrap();
        (RetrievalIndex::new(m, vec![0.0; rows.len()], 0.1).unwrap(), pool)
    }

    #[test]
    fn matching_ties_and_k1() {
        let (idx, pool) = setup(&[&[1.0], &[1.0], &[1.0], &[1.0]]);
        let s = matching_topk(&idx, &pool, &[1.0], 3).unwrap();
        assert_eq!(s.reply_ids, vec![0, 1, 2]);
        let top = idx.top_n(&[1.0], 1, true).unwrap();
        assert_eq!(matching_topk(&idx, &pool, &[1.0], 1).unwrap().reply_ids, vec![top[0].reply_id]);
        assert!(matches!(matching_topk(&idx, &pool, &[1.0], 5), Err(Error::ShortlistTooSmall { .. })));
    }

    #[test]
    fn mmr_skips_identical_vector() {
        // candidates: A (0.9 rel), A' identical to A (0.9 rel), B orthogonal (0.5 rel)
        let (idx, pool) = setup(&[&[0.9, 0.0, 0.1], &[0.9, 0.0, 0.1], &[0.0, 0.5, 0.1]]);
        let q = [1.0, 1.0, 0.0];
        let s = mmr_select(&idx, &pool, &q, 2, 0.5, 10).unwrap();
        // step 2: A' -> 0.5*0.9 - 0.5*1.0 = -0.05; B -> 0.5*0.5 - 0.5*cos(A,B)
        let cos_ab = 0.01 / (libm::sqrt(0.82) * libm::sqrt(0.26));
        assert_eq!(s.reply_ids, vec![0, 2]);
        assert!((s.marginal_gains[1] - (0.25 - 0.5 * cos_ab)).abs() < 1e-6);
        // with theta = 1 the duplicate wins on relevance
        let s = mmr_select(&idx, &pool, &q, 2, 1.0, 10).unwrap();
        assert_eq!(s.reply_ids, vec![0, 1]);
    }

    #[test]
    fn mmr_first_pick_is_matching_top1_even_at_theta_zero() {
        let (idx, pool) = setup(&[&[0.1, 0.0], &[0.0, 0.9], &[0.5, 0.5]]);
        let q = [1.0, 1.0];
        let top = matching_topk(&idx, &pool, &q, 1).unwrap().reply_ids[0];
        for theta in [0.0, 0.3, 1.0] {
            assert_eq!(mmr_select(&idx, &pool, &q, 2, theta, 10).unwrap().reply_ids[0], top);
        }
    }

    #[test]
    fn kmeans_separates_two_clusters() {
        let mut rows: Vec<[f32; 2]> = Vec::new();
        for i in 0..10 {
            let e = i as f32 * 0.01;
            rows.push([1.0, e]);
            rows.push([e, 1.0]);
        }
        let m = EmbeddingMatrix::from_rows(2, rows.iter()).unwrap();
        for seed in 0..5 {
            let t = assign_topics(&m, 2, seed).unwrap();
            for i in 0..rows.len() {
                assert_eq!(t.topic(i) == t.topic(0), i % 2 == 0);
            }
            assert_eq!(t, assign_topics(&m, 2, seed).unwrap());
        }
    }

    #[test]
    fn kmeans_one_topic_per_reply_when_saturated() {
        let rows: Vec<[f32; 3]> = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]];
        let m = EmbeddingMatrix::from_rows(3, rows.iter()).unwrap();
        let mut t = assign_topics(&m, 4, 9).unwrap().topics;
        t.sort_unstable();
        assert_eq!(t, vec![0, 1, 2, 3]);
        assert_eq!(assign_topics(&m, 5, 0), Err(Error::TooManyTopics { n_topics: 5, rows: 4 }));
    }

    #[test]
    fn topic_dedup_paths() {
        let (idx, pool) = setup(&[&[0.9], &[0.8], &[0.7], &[0.6]]);
        let same = TopicAssignment { topics: vec![0; 4], n_topics: 2 };
        let s = topic_dedup_select(&idx, &pool, &[1.0], 3, &same, 10).unwrap();
        assert!(s.used_fallback);
        assert_eq!(s.reply_set.reply_ids, vec![0, 1, 2]);

        let distinct = TopicAssignment { topics: vec![0, 1, 2, 3], n_topics: 4 };
        let s = topic_dedup_select(&idx, &pool, &[1.0], 3, &distinct, 10).unwrap();
        assert!(!s.used_fallback);
        assert_eq!(s.reply_set, matching_topk(&idx, &pool, &[1.0], 3).unwrap());

        let mixed = TopicAssignment { topics: vec![0, 0, 1, 2], n_topics: 3 };
        let s = topic_dedup_select(&idx, &pool, &[1.0], 3, &mixed, 10).unwrap();
        assert_eq!(s.reply_set.reply_ids, vec![0, 2, 3]);
    }
}
