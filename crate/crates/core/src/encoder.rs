//! Built-in message/reply encoder and query augmentation.
//!
//! [`HashedTfidfEncoder`] maps text to a signed feature-hashed TF-IDF vector
//! with unit L2 norm. It stands in for a trained dual encoder: downstream
//! code only ever looks at dot products, so externally computed embeddings
//! (loaded as [`EmbeddingMatrix`]) can replace it without other changes.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::hash::Hasher;

use siphasher::sip::SipHasher13;

use crate::corpus::{CandidatePool, DialoguePair};
use crate::matrix::EmbeddingMatrix;
use crate::text::{normalize_and_tokenize, TokenList};
use crate::{Error, Result};

const SIGN_KEY: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Feature {
    df: u64,
    idf: f64,
    coord: u32,
    negative: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HashedTfidfEncoder {
    dim: usize,
    seed: u64,
    n_docs: usize,
    features: BTreeMap<String, Feature>,
}

/// Which text of a dialogue pair to encode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Message,
    Reply,
}

fn hash_token(token: &str, k0: u64, k1: u64) -> u64 {
    let mut h = SipHasher13::new_with_keys(k0, k1);
    h.write(token.as_bytes());
    h.finish()
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 64 || !dim.is_power_of_two() {
        return Err(Error::InvalidDim(dim));
    }
    Ok(())
}

impl HashedTfidfEncoder {
    /// Fits document frequencies over every message in `pairs` and every pool reply.
    pub fn fit(pool: &CandidatePool, pairs: &[DialoguePair], dim: usize, seed: u64) -> Result<Self> {
        check_dim(dim)?;
        if pairs.is_empty() || pool.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut df: BTreeMap<String, u64> = BTreeMap::new();
        let mut add_doc = |tokens: &TokenList| {
            let mut uniq: Vec<&String> = tokens.iter().collect();
            uniq.sort_unstable();
            uniq.dedup();
            for t in uniq {
                *df.entry(t.clone()).or_insert(0) += 1;
            }
        };
        for pair in pairs {
            add_doc(&normalize_and_tokenize(&pair.context));
        }
        for id in 0..pool.len() {
            add_doc(pool.tokens(id));
        }
        let n_docs = pairs.len() + pool.len();
        Self::from_document_frequencies(dim, seed, n_docs, df)
    }

    /// Rebuilds an encoder from its document-frequency table.
    pub fn from_document_frequencies(
        dim: usize,
        seed: u64,
        n_docs: usize,
        df: impl IntoIterator<Item = (String, u64)>,
    ) -> Result<Self> {
        check_dim(dim)?;
        let mut enc = Self { dim, seed, n_docs, features: BTreeMap::new() };
        for (token, count) in df {
            let feature = Feature {
                df: count,
                idf: enc.idf_for(count),
                coord: (hash_token(&token, seed, 0) & (dim as u64 - 1)) as u32,
                negative: hash_token(&token, seed ^ SIGN_KEY, 1) & 1 == 1,
            };
            enc.features.insert(token, feature);
        }
        Ok(enc)
    }

    fn idf_for(&self, df: u64) -> f64 {
        libm::log((1.0 + self.n_docs as f64) / (1.0 + df as f64)) + 1.0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn vocab_len(&self) -> usize {
        self.features.len()
    }

    /// Inverse document frequency; unseen tokens get the `df = 0` value.
    pub fn idf(&self, token: &str) -> f64 {
        match self.features.get(token) {
            Some(f) => f.idf,
            None => self.idf_for(0),
        }
    }

    /// Token document frequencies in token order; enough to rebuild the encoder.
    pub fn document_frequencies(&self) -> impl Iterator<Item = (&str, u64)> + '_ {
        self.features.iter().map(|(t, f)| (t.as_str(), f.df))
    }

    /// Hashed coordinate and sign (`+1.0`/`-1.0`) for an in-vocabulary token.
    pub fn feature_slot(&self, token: &str) -> Option<(usize, f32)> {
        self.features.get(token).map(|f| (f.coord as usize, if f.negative { -1.0 } else { 1.0 }))
    }

    pub fn encode(&self, text: &str) -> Vec<f32> {
        self.encode_tokens(&normalize_and_tokenize(text))
    }

    /// Out-of-vocabulary tokens are dropped; with no in-vocabulary tokens the
    /// result is the zero vector.
    pub fn encode_tokens(&self, tokens: &TokenList) -> Vec<f32> {
        let mut acc = vec![0.0f64; self.dim];
        let mut sorted: Vec<&String> = tokens.iter().collect();
        sorted.sort_unstable();
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i + 1;
            while j < sorted.len() && sorted[j] == sorted[i] {
                j += 1;
            }
            if let Some(f) = self.features.get(sorted[i].as_str()) {
                let w = (j - i) as f64 * f.idf;
                acc[f.coord as usize] += if f.negative { -w } else { w };
            }
            i = j;
        }
        let norm = libm::sqrt(acc.iter().map(|v| v * v).sum::<f64>());
        if norm == 0.0 {
            return vec![0.0; self.dim];
        }
        acc.iter().map(|v| (v / norm) as f32).collect()
    }

    pub fn encode_pool(&self, pool: &CandidatePool) -> EmbeddingMatrix {
        let rows = (0..pool.len()).map(|i| self.encode_tokens(pool.tokens(i)));
        EmbeddingMatrix::from_rows(self.dim, rows).expect("encoder rows have encoder dim")
    }

    pub fn encode_messages(&self, pairs: &[DialoguePair], side: Side) -> EmbeddingMatrix {
        let rows = pairs.iter().map(|p| match side {
            Side::Message => self.encode(&p.context),
            Side::Reply => self.encode(&p.reply),
        });
        EmbeddingMatrix::from_rows(self.dim, rows).expect("encoder rows have encoder dim")
    }
}

/// Blends the message embedding with the ground-truth reply embedding:
/// `alpha * x + (1 - alpha) * y`, without re-normalizing.
pub fn augment_query(x: &[f32], y: &[f32], alpha: f64) -> Result<Vec<f32>> {
    if x.len() != y.len() {
        return Err(Error::DimMismatch { expected: x.len(), actual: y.len() });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(alloc::format!("alpha {alpha} outside [0, 1]")));
    }
    if alpha == 1.0 {
        return Ok(x.to_vec());
    }
    if alpha == 0.0 {
        return Ok(y.to_vec());
    }
    let a = alpha as f32;
    let b = (1.0 - alpha) as f32;
    Ok(x.iter().zip(y).map(|(&xi, &yi)| a * xi + b * yi).collect())
}
