//! Dialogue pairs, the deduplicated candidate pool and the unigram LM bias.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::text::{normalize_and_tokenize, TokenList, Vocabulary};
use crate::{Error, Result};

/// One (message, reply) example.
#[derive(Debug, Clone, PartialEq)]
pub struct DialoguePair {
    pub message_id: u64,
    /// The message, with the persona prepended when persona mode is on.
    pub context: String,
    pub reply: String,
    pub persona: Option<Vec<String>>,
}

impl DialoguePair {
    /// Validates the pair and applies persona concatenation.
    pub fn new(
        message_id: u64,
        context: &str,
        reply: &str,
        persona: Option<Vec<String>>,
        persona_mode: bool,
    ) -> Result<Self> {
        if context.trim().is_empty() {
            return Err(Error::EmptyField { message_id, field: "context" });
        }
        if reply.trim().is_empty() {
            return Err(Error::EmptyField { message_id, field: "reply" });
        }
        let context = match &persona {
            Some(lines) if persona_mode && !lines.is_empty() => {
                let mut joined = lines.join(" ");
                joined.push(' ');
                joined.push_str(context);
                joined
            }
            _ => String::from(context),
        };
        Ok(Self { message_id, context, reply: String::from(reply), persona })
    }
}

/// Unigram counts over the reply side of a training split.
///
/// Counting can be sharded and merged; the result does not depend on merge order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UnigramCounts {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl UnigramCounts {
    pub fn add(&mut self, tokens: &[String]) {
        for t in tokens {
            *self.counts.entry(t.clone()).or_insert(0) += 1;
            self.total += 1;
        }
    }

    pub fn merge(&mut self, other: &UnigramCounts) {
        for (t, c) in &other.counts {
            *self.counts.entry(t.clone()).or_insert(0) += c;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn vocab_size(&self) -> usize {
        self.counts.len()
    }

    /// Add-one smoothed log probability, in nats.
    pub fn log_prob(&self, token: &str) -> f64 {
        let c = self.counts.get(token).copied().unwrap_or(0);
        let denom = self.total as f64 + self.counts.len() as f64;
        libm::log((c as f64 + 1.0) / denom.max(1.0))
    }
}

/// Per-reply LM bias: mean per-token add-one log unigram probability.
#[derive(Debug, Clone, PartialEq)]
pub struct LmBias {
    pub values: Vec<f64>,
    /// Replies with no tokens; these receive the pool's most negative bias.
    pub empty_replies: Vec<usize>,
}

pub fn compute_lm_bias(replies: &[TokenList], counts: &UnigramCounts) -> LmBias {
    let mut values = Vec::with_capacity(replies.len());
    let mut empty_replies = Vec::new();
    for (i, tokens) in replies.iter().enumerate() {
        if tokens.is_empty() {
            empty_replies.push(i);
            values.push(f64::NAN);
            continue;
        }
        let sum: f64 = tokens.iter().map(|t| counts.log_prob(t)).sum();
        values.push((sum / tokens.len() as f64).min(0.0));
    }
    if !empty_replies.is_empty() {
        let floor = values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
            .unwrap_or(0.0);
        for &i in &empty_replies {
            values[i] = floor;
        }
    }
    LmBias { values, empty_replies }
}

/// The deduplicated reply universe. `reply_id` is the position in `replies`.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    replies: Vec<String>,
    lm_bias: Vec<f64>,
    tokens: Vec<TokenList>,
    token_ids: Vec<Box<[u32]>>,
    empty_replies: Vec<usize>,
}

impl CandidatePool {
    /// Rebuilds a pool from stored texts and biases (e.g. a pool file).
    pub fn from_parts(replies: Vec<String>, lm_bias: Vec<f64>) -> Result<Self> {
        if replies.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if lm_bias.len() != replies.len() {
            return Err(Error::LengthMismatch { what: "lm_bias", expected: replies.len(), actual: lm_bias.len() });
        }
        if let Some(i) = lm_bias.iter().position(|b| !b.is_finite() || *b > 0.0) {
            return Err(Error::InvalidBias(i));
        }
        let mut seen = BTreeMap::new();
        let mut tokens = Vec::with_capacity(replies.len());
        for (i, r) in replies.iter().enumerate() {
            let toks = normalize_and_tokenize(r);
            if seen.insert(toks.joined(), i).is_some() {
                return Err(Error::DuplicateReply(i));
            }
            tokens.push(toks);
        }
        let empty_replies = tokens.iter().enumerate().filter(|(_, t)| t.is_empty()).map(|(i, _)| i).collect();
        Ok(Self::assemble(replies, lm_bias, tokens, empty_replies))
    }

    fn assemble(replies: Vec<String>, lm_bias: Vec<f64>, tokens: Vec<TokenList>, empty_replies: Vec<usize>) -> Self {
        let mut vocab = Vocabulary::default();
        let token_ids = tokens.iter().map(|t| vocab.sorted_ids(t).into_boxed_slice()).collect();
        Self { replies, lm_bias, tokens, token_ids, empty_replies }
    }

    pub fn len(&self) -> usize {
        self.replies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replies.is_empty()
    }

    pub fn replies(&self) -> &[String] {
        &self.replies
    }

    pub fn text(&self, reply_id: usize) -> &str {
        &self.replies[reply_id]
    }

    pub fn lm_bias(&self) -> &[f64] {
        &self.lm_bias
    }

    pub fn tokens(&self, reply_id: usize) -> &TokenList {
        &self.tokens[reply_id]
    }

    /// Sorted interned token ids of a reply (pool-local vocabulary).
    pub fn token_ids(&self, reply_id: usize) -> &[u32] {
        &self.token_ids[reply_id]
    }

    /// Replies whose bias was floored because they have no tokens.
    pub fn empty_replies(&self) -> &[usize] {
        &self.empty_replies
    }
}

/// Builds the pool from the reply side of `pairs`: one entry per distinct
/// normalized reply, in first-occurrence order, with LM bias computed from
/// unigram counts over every reply token in the split.
pub fn build_candidate_pool(pairs: &[DialoguePair]) -> Result<CandidatePool> {
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut counts = UnigramCounts::default();
    let mut seen = BTreeMap::new();
    let mut replies = Vec::new();
    let mut tokens = Vec::new();
    for pair in pairs {
        let toks = normalize_and_tokenize(&pair.reply);
        counts.add(&toks);
        let key = toks.joined();
        if !seen.contains_key(&key) {
            seen.insert(key.clone(), replies.len());
            replies.push(key);
            tokens.push(toks);
        }
    }
    let bias = compute_lm_bias(&tokens, &counts);
    Ok(CandidatePool::assemble(replies, bias.values, tokens, bias.empty_replies))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pair(id: u64, reply: &str) -> DialoguePair {
        DialoguePair::new(id, "msg", reply, None, false).unwrap()
    }

    #[test]
    fn persona_is_prepended_only_in_persona_mode() {
        let persona = Some(vec![String::from("i like jazz music.")]);
        let p = DialoguePair::new(0, "i was but am now divorced", "oh i am sorry to hear that", persona.clone(), true)
            .unwrap();
        assert_eq!(p.context, "i like jazz music. i was but am now divorced");
        let p = DialoguePair::new(0, "i was", "oh", persona, false).unwrap();
        assert_eq!(p.context, "i was");
    }

    #[test]
    fn rejects_blank_fields() {
        assert_eq!(
            DialoguePair::new(3, "  ", "x", None, false),
            Err(Error::EmptyField { message_id: 3, field: "context" })
        );
        assert_eq!(
            DialoguePair::new(4, "x", "\t", None, false),
            Err(Error::EmptyField { message_id: 4, field: "reply" })
        );
    }

    #[test]
    fn dedups_exact_matches_in_first_occurrence_order() {
        let pool = build_candidate_pool(&[pair(0, "ok"), pair(1, "ok"), pair(2, "hi")]).unwrap();
        assert_eq!(pool.replies(), &["ok", "hi"]);
        let pool = build_candidate_pool(&[pair(0, "OK  there"), pair(1, "ok there"), pair(2, "b")]).unwrap();
        assert_eq!(pool.replies(), &["ok there", "b"]);
        assert_eq!(build_candidate_pool(&[]).unwrap_err(), Error::EmptyCorpus);
    }

    #[test]
    fn lm_bias_matches_hand_computation() {
        // reply side "a a a b": p(a) = 4/6, p(b) = 2/6
        let mut counts = UnigramCounts::default();
        counts.add(&normalize_and_tokenize("a a a b"));
        let bias = compute_lm_bias(&[normalize_and_tokenize("a b"), normalize_and_tokenize("a")], &counts);
        let expected_ab = (libm::log(2.0 / 3.0) + libm::log(1.0 / 3.0)) / 2.0;
        assert!((bias.values[0] - expected_ab).abs() < 1e-12);
        assert!((bias.values[0] - -0.7520).abs() < 1e-4);
        assert!((bias.values[1] - -0.4055).abs() < 1e-4);
    }

    #[test]
    fn empty_reply_gets_most_negative_bias() {
        let mut counts = UnigramCounts::default();
        counts.add(&normalize_and_tokenize("a a a b"));
        let bias =
            compute_lm_bias(&[normalize_and_tokenize("a"), TokenList::default(), normalize_and_tokenize("b")], &counts);
        assert_eq!(bias.empty_replies, vec![1]);
        assert_eq!(bias.values[1], bias.values[2]);
    }

    #[test]
    fn sharded_counts_merge_identically() {
        let mut whole = UnigramCounts::default();
        let mut left = UnigramCounts::default();
        let mut right = UnigramCounts::default();
        for (i, s) in ["a b", "c a", "b b d"].iter().enumerate() {
            let t = normalize_and_tokenize(s);
            whole.add(&t);
            if i % 2 == 0 {
                left.add(&t)
            } else {
                right.add(&t)
            }
        }
        right.merge(&left);
        assert_eq!(whole, right);
    }

    #[test]
    fn from_parts_validates() {
        let ok = CandidatePool::from_parts(vec!["a".into(), "b".into()], vec![-1.0, -0.5]);
        assert!(ok.is_ok());
        assert_eq!(
            CandidatePool::from_parts(vec!["a".into(), "A".into()], vec![-1.0, -1.0]).unwrap_err(),
            Error::DuplicateReply(1)
        );
        assert_eq!(CandidatePool::from_parts(vec!["a".into()], vec![0.5]).unwrap_err(), Error::InvalidBias(0));
    }
}
