//! Tokenization and token interning.
//!
//! Corpora are expected to be pre-tokenized with spaced punctuation
//! (`"let's go !"`), so tokenization is lowercase + Unicode whitespace
//! splitting. Punctuation stays attached to whatever it touches.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Deref;

/// Lowercased, whitespace-delimited tokens of a string. Never holds an empty token.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenList(Vec<String>);

impl TokenList {
    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Tokens joined by single spaces; the normalized form of the source text.
    pub fn joined(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for TokenList {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl FromIterator<String> for TokenList {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        Self(iter.into_iter().filter(|t| !t.is_empty()).collect())
    }
}

impl<'a> FromIterator<&'a str> for TokenList {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        iter.into_iter().map(String::from).collect()
    }
}

pub fn normalize_and_tokenize(text: &str) -> TokenList {
    TokenList(text.split_whitespace().map(str::to_lowercase).collect())
}

/// Lowercase and collapse whitespace runs; the key used for exact-match dedup.
pub fn normalize(text: &str) -> String {
    normalize_and_tokenize(text).joined()
}

/// Dense token ids assigned in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    ids: BTreeMap<String, u32>,
}

impl Vocabulary {
    pub fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.ids.len() as u32;
        self.ids.insert(String::from(token), id);
        id
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Interned ids of `tokens`, sorted so multiset overlap is a linear merge.
    pub fn sorted_ids(&mut self, tokens: &[String]) -> Vec<u32> {
        let mut ids: Vec<u32> = tokens.iter().map(|t| self.intern(t)).collect();
        ids.sort_unstable();
        ids
    }
}

/// Size of the multiset intersection of two sorted sequences.
pub fn sorted_overlap<T: Ord>(a: &[T], b: &[T]) -> usize {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    common
}

/// Harmonic mean of overlap precision `o/la` and recall `o/lb`; zero when degenerate.
///
/// Every F1 and ROUGE F-measure in the crate goes through this so that equal
/// inputs give bit-identical scores regardless of the call site.
pub fn f_measure(overlap: usize, la: usize, lb: usize) -> f64 {
    if overlap == 0 || la == 0 || lb == 0 {
        return 0.0;
    }
    let p = overlap as f64 / la as f64;
    let r = overlap as f64 / lb as f64;
    2.0 * p * r / (p + r)
}
