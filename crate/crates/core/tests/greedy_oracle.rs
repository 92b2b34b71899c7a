//! Greedy set construction against a brute-force evaluation of the objective.

use std::collections::BTreeMap;

use proptest::prelude::*;
use replyset_core::corpus::CandidatePool;
use replyset_core::index::ScoredHit;
use replyset_core::planner::{expected_similarity, greedy_select, simulate_user, SimulatedUser};

/// Term F1 computed from token-count maps.
fn oracle_f1(a: &[String], b: &[String]) -> f64 {
    let mut ca: BTreeMap<&str, usize> = BTreeMap::new();
    for t in a {
        *ca.entry(t).or_default() += 1;
    }
    let mut cb: BTreeMap<&str, usize> = BTreeMap::new();
    for t in b {
        *cb.entry(t).or_default() += 1;
    }
    let o: usize = ca.iter().map(|(t, n)| (*n).min(cb.get(t).copied().unwrap_or(0))).sum();
    if o == 0 {
        return 0.0;
    }
    let p = o as f64 / a.len() as f64;
    let r = o as f64 / b.len() as f64;
    2.0 * p * r / (p + r)
}

fn oracle_objective(
    pool: &[Vec<String>],
    selected: &[usize],
    cand: usize,
    sim_ids: &[usize],
    probs: &[f64],
    lambda: f64,
) -> f64 {
    let mut total = 0.0;
    for (&m, &q) in sim_ids.iter().zip(probs) {
        let mut best = 0.0f64;
        for &s in selected.iter().chain(std::iter::once(&cand)) {
            best = best.max(oracle_f1(&pool[s], &pool[m]));
        }
        total += q * best;
    }
    let penalty = selected.iter().map(|&s| oracle_f1(&pool[s], &pool[cand])).fold(0.0, f64::max);
    total - lambda * penalty
}

/// Plain greedy loop: rescan the full objective for every remaining candidate.
fn oracle_greedy(
    pool: &[Vec<String>],
    shortlist: &[usize],
    sim_ids: &[usize],
    probs: &[f64],
    k: usize,
    lambda: f64,
) -> Vec<(usize, f64)> {
    let mut selected: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    for _ in 0..k {
        let mut best: Option<(f64, usize)> = None;
        for &c in shortlist.iter().filter(|c| !selected.contains(c)) {
            let v = oracle_objective(pool, &selected, c, sim_ids, probs, lambda);
            if best.is_none_or(|(bv, bc)| v > bv || (v == bv && c < bc)) {
                best = Some((v, c));
            }
        }
        let (v, c) = best.unwrap();
        selected.push(c);
        out.push((c, v));
    }
    out
}

fn instance() -> impl Strategy<Value = (Vec<String>, Vec<usize>, Vec<usize>, Vec<f64>, f64)> {
    let reply = prop::collection::vec(0u8..6, 1..5)
        .prop_map(|ts| ts.iter().map(|t| ((b'a' + t) as char).to_string()).collect::<Vec<_>>().join(" "));
    prop::collection::vec(reply, 3..50)
        .prop_flat_map(|mut replies| {
            let mut seen = std::collections::BTreeSet::new();
            replies.retain(|r| seen.insert(r.clone()));
            let len = replies.len();
            (
                Just(replies),
                Just(len),
                prop::sample::subsequence((0..len).collect::<Vec<_>>(), 1..=len.min(20)),
                prop::sample::select(vec![0.0, 0.05, 0.5]),
            )
        })
        .prop_filter("need 3 distinct replies", |(_, len, _, _)| *len >= 3)
        .prop_flat_map(|(replies, len, sim, lambda)| {
            let n_sim = sim.len();
            (
                Just(replies),
                prop::sample::subsequence((0..len).collect::<Vec<_>>(), 3..=len.min(12)).prop_shuffle(),
                Just(sim),
                prop::collection::vec(-2.0f64..2.0, n_sim),
                Just(lambda),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn greedy_steps_match_brute_force((replies, shortlist, sim, scores, lambda) in instance()) {
        let pool = CandidatePool::from_parts(replies.clone(), vec![-1.0; replies.len()]).unwrap();
        let tokens: Vec<Vec<String>> = (0..pool.len()).map(|i| pool.tokens(i).to_vec()).collect();
        let user = simulate_user(&scores, &sim).unwrap();
        let hits: Vec<ScoredHit> = shortlist
            .iter()
            .map(|&id| ScoredHit { reply_id: id, score: 0.0, raw_dot: 0.0 })
            .collect();
        let got = greedy_select(&hits, &user, &pool, 3, lambda).unwrap();
        let want = oracle_greedy(&tokens, &shortlist, &user.reply_ids, &user.probs, 3, lambda);
        for (step, (id, value)) in want.iter().enumerate() {
            prop_assert_eq!(got.reply_ids[step], *id, "step {}", step);
            prop_assert!((got.marginal_gains[step] - value).abs() < 1e-9);
        }
    }

    #[test]
    fn adding_a_reply_never_lowers_expected_similarity(
        (replies, shortlist, sim, scores, _l) in instance(),
        extra in 0usize..50,
    ) {
        let pool = CandidatePool::from_parts(replies.clone(), vec![-1.0; replies.len()]).unwrap();
        let user = simulate_user(&scores, &sim).unwrap();
        let extra = extra % pool.len();
        let base = expected_similarity(&shortlist, &user, &pool);
        let mut grown = shortlist.clone();
        grown.push(extra);
        prop_assert!(expected_similarity(&grown, &user, &pool) >= base);
    }
}

#[test]
fn duplicate_starves_when_an_alternative_scores_higher() {
    // "b a" duplicates "a b" exactly (same token multiset).
    let replies: Vec<String> = ["a b", "b a", "c d", "a c"].iter().map(|s| s.to_string()).collect();
    let pool = CandidatePool::from_parts(replies.clone(), vec![-1.0; 4]).unwrap();
    let tokens: Vec<Vec<String>> = (0..4).map(|i| pool.tokens(i).to_vec()).collect();
    let user = SimulatedUser { reply_ids: vec![0, 2], probs: vec![0.8, 0.2] };
    let hits: Vec<ScoredHit> = (0..4).map(|id| ScoredHit { reply_id: id, score: 0.0, raw_dot: 0.0 }).collect();
    let set = greedy_select(&hits, &user, &pool, 2, 0.05).unwrap();
    assert_eq!(set.reply_ids[0], 0);
    let dup = oracle_objective(&tokens, &[0], 1, &user.reply_ids, &user.probs, 0.05);
    let alt = oracle_objective(&tokens, &[0], 2, &user.reply_ids, &user.probs, 0.05);
    assert!(alt > dup);
    assert_eq!(set.reply_ids[1], 2);
    // without the penalty the duplicate only ties with the first pick's coverage
    assert!((dup - (0.8 - 0.05)).abs() < 1e-12);
}
