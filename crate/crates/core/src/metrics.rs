//! Weighted ROUGE relevance and Self-ROUGE diversity.
//!
//! ROUGE-N here is the n-gram F-measure (plain harmonic mean). Scores against
//! several references take the best reference. Sequences shorter than `n`
//! score zero.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::DialoguePair;
use crate::text::{f_measure, normalize_and_tokenize, sorted_overlap, TokenList};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RougeScores {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    /// `r1 / 6 + r2 / 3 + r3 / 2`.
    pub ensemble: f64,
}

impl RougeScores {
    pub fn from_components(r1: f64, r2: f64, r3: f64) -> Self {
        Self { r1, r2, r3, ensemble: r1 / 6.0 + r2 / 3.0 + r3 / 2.0 }
    }
}

fn ngrams(tokens: &[String], n: usize) -> Vec<&[String]> {
    if tokens.len() < n {
        return Vec::new();
    }
    let mut grams: Vec<&[String]> = tokens.windows(n).collect();
    grams.sort_unstable();
    grams
}

pub fn rouge_n(pred: &TokenList, refs: &[&TokenList], n: usize) -> Result<f64> {
    if !(1..=3).contains(&n) {
        return Err(Error::UnsupportedOrder(n));
    }
    if refs.is_empty() {
        return Err(Error::NoReferences);
    }
    let p = ngrams(pred, n);
    Ok(refs
        .iter()
        .map(|r| {
            let g = ngrams(r, n);
            f_measure(sorted_overlap(&p, &g), p.len(), g.len())
        })
        .fold(0.0, f64::max))
}

pub fn weighted_rouge(pred: &TokenList, refs: &[&TokenList]) -> Result<RougeScores> {
    Ok(RougeScores::from_components(rouge_n(pred, refs, 1)?, rouge_n(pred, refs, 2)?, rouge_n(pred, refs, 3)?))
}

/// Best ensemble score of any suggestion against the reference.
pub fn max_rouge_over_set(set: &[TokenList], reference: &TokenList) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut best = 0.0f64;
    for reply in set {
        best = best.max(weighted_rouge(reply, &[reference])?.ensemble);
    }
    Ok(best)
}

/// Mean leave-one-out ensemble score within the set. Lower is more diverse.
pub fn self_rouge(set: &[TokenList]) -> Result<f64> {
    if set.len() < 2 {
        return Err(Error::SetTooSmall(set.len()));
    }
    let mut total = 0.0;
    for (k, reply) in set.iter().enumerate() {
        let others: Vec<&TokenList> = set.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, r)| r).collect();
        total += weighted_rouge(reply, &others)?.ensemble;
    }
    Ok(total / set.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleScore {
    pub message_id: u64,
    pub max_rouge: f64,
    pub self_rouge: f64,
}

/// Scores in `[0, 1]`; use [`EvalReport::display_scale`] for the x100 view.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_example: Vec<ExampleScore>,
    pub mean_rouge: f64,
    pub mean_self_rouge: f64,
    pub n: usize,
}

impl EvalReport {
    pub const DISPLAY_SCALE: f64 = 100.0;

    pub fn display_scale(v: f64) -> f64 {
        v * Self::DISPLAY_SCALE
    }
}

/// Scores predicted reply sets against ground-truth replies.
///
/// Every test message must be predicted exactly once. Examples are reported
/// in test-split order.
pub fn evaluate(predictions: &[(u64, Vec<String>)], test: &[DialoguePair]) -> Result<EvalReport> {
    let mut by_id: BTreeMap<u64, &Vec<String>> = BTreeMap::new();
    for (id, replies) in predictions {
        if by_id.insert(*id, replies).is_some() {
            return Err(Error::DuplicatePrediction(*id));
        }
    }
    let mut per_example = Vec::with_capacity(test.len());
    for pair in test {
        let replies = by_id.remove(&pair.message_id).ok_or(Error::MissingPrediction(pair.message_id))?;
        let set: Vec<TokenList> = replies.iter().map(|r| normalize_and_tokenize(r)).collect();
        let reference = normalize_and_tokenize(&pair.reply);
        per_example.push(ExampleScore {
            message_id: pair.message_id,
            max_rouge: max_rouge_over_set(&set, &reference)?,
            self_rouge: self_rouge(&set)?,
        });
    }
    if let Some((&id, _)) = by_id.iter().next() {
        return Err(Error::UnknownPrediction(id));
    }
    let n = per_example.len();
    let mean = |f: fn(&ExampleScore) -> f64| {
        if n == 0 {
            0.0
        } else {
            per_example.iter().map(f).sum::<f64>() / n as f64
        }
    };
    Ok(EvalReport { mean_rouge: mean(|e| e.max_rouge), mean_self_rouge: mean(|e| e.self_rouge), per_example, n })
}
