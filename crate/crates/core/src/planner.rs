//! Offline reply-set planning.
//!
//! For each message the planner
//!
//! 1. builds a query: the message embedding, optionally blended with the
//!    ground-truth reply embedding (`alpha`);
//! 2. retrieves a shortlist `Y_N` by LM-biased score and a simulation set
//!    `Y_M` by raw dot product;
//! 3. turns the `Y_M` scores into a simulated user `q` (softmax);
//! 4. greedily grows a set of `K` replies from `Y_N`, each step taking the
//!    candidate with the best
//!
//! ```text
//! sum_m q(y_m) * max_{y in Y_G + y_n} F1(y, y_m)  -  lambda * max_{y in Y_G} F1(y, y_n)
//! ```
//!
//! Run with `alpha = 1` (or [`PlanMode::Online`]) this is the online,
//! ground-truth-free variant used as a baseline at inference time.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{CandidatePool, DialoguePair};
use crate::encoder::augment_query;
use crate::index::{RetrievalIndex, ScoredHit};
use crate::text::{f_measure, sorted_overlap, TokenList};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    /// Shortlist size `N`.
    pub n_candidates: usize,
    /// Simulated replies `M`.
    pub n_simulations: usize,
    /// Reply set size `K`.
    pub set_size: usize,
    /// Query augmentation weight on the message embedding.
    pub alpha: f64,
    /// Redundancy penalty weight.
    pub lambda: f64,
    /// LM bias weight used when building the index.
    pub beta: f64,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self { n_candidates: 100, n_simulations: 100, set_size: 3, alpha: 0.75, lambda: 0.05, beta: 0.1, seed: 0 }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.set_size == 0 {
            return fail("set size K must be at least 1".into());
        }
        if self.set_size > self.n_candidates {
            return fail(alloc::format!("set size K={} exceeds shortlist size N={}", self.set_size, self.n_candidates));
        }
        if self.n_simulations == 0 {
            return fail("simulation count M must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return fail(alloc::format!("alpha {} outside [0, 1]", self.alpha));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail(alloc::format!("lambda {} must be finite and >= 0", self.lambda));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return fail(alloc::format!("beta {} must be finite and >= 0", self.beta));
        }
        Ok(())
    }
}

/// Whether the query may look at the ground-truth reply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanMode {
    Offline,
    Online,
}

/// Softmax distribution over the top-M retrieved replies.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedUser {
    pub reply_ids: Vec<usize>,
    pub probs: Vec<f64>,
}

impl SimulatedUser {
    pub fn len(&self) -> usize {
        self.reply_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reply_ids.is_empty()
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self.probs.iter().filter(|&&p| p > 0.0).map(|&p| p * libm::log(p)).sum::<f64>()
    }
}

pub fn simulate_user(raw_scores: &[f64], reply_ids: &[usize]) -> Result<SimulatedUser> {
    if raw_scores.is_empty() {
        return Err(Error::ZeroCount);
    }
    if raw_scores.len() != reply_ids.len() {
        return Err(Error::LengthMismatch {
            what: "simulated reply ids",
            expected: raw_scores.len(),
            actual: reply_ids.len(),
        });
    }
    if let Some(i) = raw_scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let max = raw_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = raw_scores.iter().map(|s| libm::exp(s - max)).collect();
    let z: f64 = exps.iter().sum();
    Ok(SimulatedUser { reply_ids: reply_ids.to_vec(), probs: exps.into_iter().map(|e| e / z).collect() })
}

/// Token-multiset F1 between two replies.
pub fn term_f1(a: &TokenList, b: &TokenList) -> f64 {
    let mut sa: Vec<&String> = a.iter().collect();
    let mut sb: Vec<&String> = b.iter().collect();
    sa.sort_unstable();
    sb.sort_unstable();
    f_measure(sorted_overlap(&sa, &sb), a.len(), b.len())
}

/// `max_k F1(y_k, y)` over the set; zero for the empty set.
pub fn set_similarity<'a, I>(set: I, y: &TokenList) -> f64
where
    I: IntoIterator<Item = &'a TokenList>,
{
    set.into_iter().map(|m| term_f1(m, y)).fold(0.0, f64::max)
}

fn pool_f1(pool: &CandidatePool, a: usize, b: usize) -> f64 {
    let (ta, tb) = (pool.token_ids(a), pool.token_ids(b));
    f_measure(sorted_overlap(ta, tb), ta.len(), tb.len())
}

/// `sum_m q(y_m) * f(Y, y_m)` for a set of pool replies.
pub fn expected_similarity(set: &[usize], user: &SimulatedUser, pool: &CandidatePool) -> f64 {
    user.reply_ids
        .iter()
        .zip(&user.probs)
        .map(|(&m, &q)| q * set.iter().map(|&s| pool_f1(pool, s, m)).fold(0.0, f64::max))
        .sum()
}

/// An ordered reply set. Order is selection order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplySet {
    pub reply_ids: Vec<usize>,
    pub texts: Vec<String>,
    /// Per-step winning objective value (selector specific).
    pub marginal_gains: Vec<f64>,
}

impl ReplySet {
    pub fn from_ids(pool: &CandidatePool, reply_ids: Vec<usize>, marginal_gains: Vec<f64>) -> Self {
        let texts = reply_ids.iter().map(|&id| String::from(pool.text(id))).collect();
        Self { reply_ids, texts, marginal_gains }
    }

    pub fn len(&self) -> usize {
        self.reply_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reply_ids.is_empty()
    }
}

/// Greedy set construction over the shortlist.
///
/// The `|shortlist| x M` F1 table is computed once; each step then costs
/// `O(N * M)` max/multiply-adds against the running per-simulation coverage.
pub fn greedy_select(
    shortlist: &[ScoredHit],
    user: &SimulatedUser,
    pool: &CandidatePool,
    k: usize,
    lambda: f64,
) -> Result<ReplySet> {
    let n = shortlist.len();
    if n < k {
        return Err(Error::ShortlistTooSmall { available: n, requested: k });
    }
    for (i, h) in shortlist.iter().enumerate() {
        if h.reply_id >= pool.len() {
            return Err(Error::ReplyOutOfRange(h.reply_id));
        }
        if shortlist[..i].iter().any(|o| o.reply_id == h.reply_id) {
            return Err(Error::DuplicateCandidate(h.reply_id));
        }
    }
    if let Some(&bad) = user.reply_ids.iter().find(|&&id| id >= pool.len()) {
        return Err(Error::ReplyOutOfRange(bad));
    }

    let m = user.len();
    let mut table = Vec::with_capacity(n * m);
    for h in shortlist {
        for &s in &user.reply_ids {
            table.push(pool_f1(pool, h.reply_id, s));
        }
    }

    // covered[j] = f(Y_G, y_j); penalty[i] = f(Y_G, y_i)
    let mut covered = vec![0.0f64; m];
    let mut penalty = vec![0.0f64; n];
    let mut taken = vec![false; n];
    let mut ids = Vec::with_capacity(k);
    let mut gains = Vec::with_capacity(k);

    for _ in 0..k {
        let mut best: Option<(f64, usize)> = None;
        for i in (0..n).filter(|&i| !taken[i]) {
            let row = &table[i * m..(i + 1) * m];
            let mut expected = 0.0;
            for j in 0..m {
                expected += user.probs[j] * covered[j].max(row[j]);
            }
            let objective = expected - lambda * penalty[i];
            let better = match best {
                None => true,
                Some((b, bi)) => objective > b || (objective == b && shortlist[i].reply_id < shortlist[bi].reply_id),
            };
            if better {
                best = Some((objective, i));
            }
        }
        let (objective, pick) = best.expect("k <= n leaves a candidate");
        taken[pick] = true;
        ids.push(shortlist[pick].reply_id);
        gains.push(objective);
        let row = &table[pick * m..(pick + 1) * m];
        for j in 0..m {
            covered[j] = covered[j].max(row[j]);
        }
        for i in (0..n).filter(|&i| !taken[i]) {
            penalty[i] = penalty[i].max(pool_f1(pool, shortlist[pick].reply_id, shortlist[i].reply_id));
        }
    }
    Ok(ReplySet::from_ids(pool, ids, gains))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanDiagnostics {
    /// 1-based rank of each selected reply within the shortlist.
    pub ranks: Vec<usize>,
    /// Entropy of the simulated user, in nats.
    pub q_entropy: f64,
}

/// One row of the bootstrapped dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapRecord {
    pub message_id: u64,
    pub message: String,
    pub reply_set: ReplySet,
    pub diagnostics: PlanDiagnostics,
}

/// Plans a reply set for one message.
///
/// `message_vec` and `reply_vec` are the embeddings of the message and its
/// ground-truth reply; the latter is ignored online. The index must be built
/// over `pool` with `cfg.beta`.
pub fn plan_reply_set(
    pair: &DialoguePair,
    message_vec: &[f32],
    reply_vec: &[f32],
    index: &RetrievalIndex,
    pool: &CandidatePool,
    cfg: &PlannerConfig,
    mode: PlanMode,
) -> Result<BootstrapRecord> {
    cfg.validate()?;
    if index.len() != pool.len() {
        return Err(Error::LengthMismatch { what: "retrieval index", expected: pool.len(), actual: index.len() });
    }
    let query = match mode {
        PlanMode::Offline => augment_query(message_vec, reply_vec, cfg.alpha)?,
        PlanMode::Online => message_vec.to_vec(),
    };
    let raw = index.raw_scores(&query)?;
    let shortlist = index.select(&raw, cfg.n_candidates, true)?;
    let simulated = index.select(&raw, cfg.n_simulations, false)?;
    let scores: Vec<f64> = simulated.iter().map(|h| h.raw_dot).collect();
    let ids: Vec<usize> = simulated.iter().map(|h| h.reply_id).collect();
    let user = simulate_user(&scores, &ids)?;
    let reply_set = greedy_select(&shortlist, &user, pool, cfg.set_size, cfg.lambda)?;
    let ranks = reply_set
        .reply_ids
        .iter()
        .map(|id| 1 + shortlist.iter().position(|h| h.reply_id == *id).expect("picked from shortlist"))
        .collect();
    Ok(BootstrapRecord {
        message_id: pair.message_id,
        message: pair.context.clone(),
        reply_set,
        diagnostics: PlanDiagnostics { ranks, q_entropy: user.entropy() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::normalize_and_tokenize as tok;

    fn pool_of(replies: &[&str]) -> CandidatePool {
        CandidatePool::from_parts(replies.iter().map(|s| String::from(*s)).collect(), vec![-1.0; replies.len()])
            .unwrap()
    }

    fn hits(ids: &[usize]) -> Vec<ScoredHit> {
        ids.iter().map(|&id| ScoredHit { reply_id: id, score: 0.0, raw_dot: 0.0 }).collect()
    }

    #[test]
    fn softmax_cases() {
        let u = simulate_user(&[0.3; 4], &[0, 1, 2, 3]).unwrap();
        assert!(u.probs.iter().all(|p| (p - 0.25).abs() < 1e-15));
        let u = simulate_user(&[libm::log(2.0), 0.0], &[5, 9]).unwrap();
        assert!((u.probs[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((u.probs[1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(u.reply_ids, vec![5, 9]);
        assert_eq!(simulate_user(&[7.0], &[0]).unwrap().probs, vec![1.0]);
        assert_eq!(simulate_user(&[0.0, f64::NAN], &[0, 1]), Err(Error::NonFinite(1)));
        // max-subtraction keeps large scores finite
        let u = simulate_user(&[1000.0, 1000.0], &[0, 1]).unwrap();
        assert_eq!(u.probs, vec![0.5, 0.5]);
    }

    #[test]
    fn f1_cases() {
        assert_eq!(term_f1(&tok("a b"), &tok("a b")), 1.0);
        assert!((term_f1(&tok("i am good"), &tok("i am fine")) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(term_f1(&tok("a"), &tok("b")), 0.0);
        assert_eq!(term_f1(&tok(""), &tok("b")), 0.0);
        // multiset: "a a" vs "a" overlaps once
        assert!((term_f1(&tok("a a"), &tok("a")) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn set_similarity_cases() {
        let y = tok("b c");
        assert_eq!(set_similarity([&y], &y), 1.0);
        assert_eq!(set_similarity(core::iter::empty(), &y), 0.0);
        let set = [tok("a"), tok("b c")];
        assert_eq!(set_similarity(&set, &y), 1.0);
    }

    #[test]
    fn expected_similarity_cases() {
        let pool = pool_of(&["a", "b"]);
        let u = SimulatedUser { reply_ids: vec![0, 1], probs: vec![0.5, 0.5] };
        assert_eq!(expected_similarity(&[0], &u, &pool), 0.5);
        assert_eq!(expected_similarity(&[0, 1], &u, &pool), 1.0);
        let single = SimulatedUser { reply_ids: vec![1], probs: vec![1.0] };
        assert_eq!(expected_similarity(&[0, 1], &single, &pool), 1.0);
        assert_eq!(expected_similarity(&[], &u, &pool), 0.0);
    }

    #[test]
    fn duplicate_is_skipped_for_new_content() {
        // ids 0 and 1 are both "a" (distinct entries after differing punctuation)
        let pool = pool_of(&["a", "a .", "b"]);
        // user: uniform over "a" and "b"
        let u = SimulatedUser { reply_ids: vec![0, 2], probs: vec![0.5, 0.5] };
        let set = greedy_select(&hits(&[0, 1, 2]), &u, &pool, 2, 0.05).unwrap();
        assert_eq!(set.reply_ids, vec![0, 2]);
        assert_eq!(set.marginal_gains, vec![0.5, 1.0]);
    }

    #[test]
    fn exact_duplicate_pays_penalty() {
        // Two shortlist entries with identical token multisets differ only
        // in id; after one is picked the other gains nothing and pays lambda.
        let pool = pool_of(&["x y", "y x", "z"]);
        let u = SimulatedUser { reply_ids: vec![0, 2], probs: vec![0.9, 0.1] };
        let set = greedy_select(&hits(&[0, 1, 2]), &u, &pool, 2, 0.05).unwrap();
        assert_eq!(set.reply_ids, vec![0, 2]);
        // duplicate objective: 0.9 - 0.05 = 0.85 < 1.0
        assert!((set.marginal_gains[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_step_ignores_lambda() {
        let pool = pool_of(&["a b", "a", "c"]);
        let u = SimulatedUser { reply_ids: vec![1, 2], probs: vec![0.7, 0.3] };
        for lambda in [0.0, 0.05, 10.0] {
            let s = greedy_select(&hits(&[0, 1, 2]), &u, &pool, 1, lambda).unwrap();
            assert_eq!(s.reply_ids, vec![1]);
        }
    }

    #[test]
    fn greedy_errors() {
        let pool = pool_of(&["a", "b"]);
        let u = SimulatedUser { reply_ids: vec![0], probs: vec![1.0] };
        assert_eq!(
            greedy_select(&hits(&[0]), &u, &pool, 2, 0.0),
            Err(Error::ShortlistTooSmall { available: 1, requested: 2 })
        );
        assert_eq!(greedy_select(&hits(&[0, 0]), &u, &pool, 1, 0.0), Err(Error::DuplicateCandidate(0)));
        assert_eq!(greedy_select(&hits(&[0, 7]), &u, &pool, 1, 0.0), Err(Error::ReplyOutOfRange(7)));
    }

    #[test]
    fn config_validation() {
        assert!(PlannerConfig::default().validate().is_ok());
        let bad = PlannerConfig { set_size: 5, n_candidates: 4, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = PlannerConfig { n_simulations: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = PlannerConfig { alpha: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
