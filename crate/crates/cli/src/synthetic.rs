//! Seeded synthetic corpora for experiments and benchmarks.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use replyset_core::corpus::DialoguePair;

/// Replies drawn from disjoint per-cluster vocabularies.
pub struct ClusterCorpus {
    pub pairs: Vec<DialoguePair>,
    pub n_clusters: usize,
    pub vocab_per_cluster: usize,
}

fn word(cluster: usize, j: usize) -> String {
    format!("c{cluster}w{j}")
}

impl ClusterCorpus {
    /// `per_cluster` distinct replies per cluster, each a 3- or 4-token
    /// subset of the cluster vocabulary (no two replies share a token set).
    pub fn generate(n_clusters: usize, per_cluster: usize, vocab_per_cluster: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut subsets: Vec<u32> =
            (0u32..1 << vocab_per_cluster).filter(|m| matches!(m.count_ones(), 3 | 4)).collect();
        assert!(subsets.len() >= per_cluster, "vocabulary too small for {per_cluster} distinct replies");
        let mut pairs = Vec::with_capacity(n_clusters * per_cluster);
        for c in 0..n_clusters {
            subsets.shuffle(&mut rng);
            for &mask in &subsets[..per_cluster] {
                let mut tokens: Vec<String> =
                    (0..vocab_per_cluster).filter(|j| mask & (1 << j) != 0).map(|j| word(c, j)).collect();
                tokens.shuffle(&mut rng);
                let context: Vec<String> = (0..3).map(|_| word(c, rng.random_range(0..vocab_per_cluster))).collect();
                let id = pairs.len() as u64;
                pairs.push(
                    DialoguePair::new(id, &context.join(" "), &tokens.join(" "), None, false).expect("non-empty"),
                );
            }
        }
        Self { pairs, n_clusters, vocab_per_cluster }
    }

    /// Cluster of a reply or token sequence, read off its first token.
    pub fn cluster_of(text: &str) -> Option<usize> {
        let t = text.split_whitespace().next()?;
        t.strip_prefix('c')?.split('w').next()?.parse().ok()
    }

    /// Probe messages: two tokens of a dominant cluster plus one token from
    /// every other cluster. Returns `(probe, dominant cluster)`.
    pub fn probes(&self, n: usize, seed: u64) -> Vec<(DialoguePair, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab: Vec<usize> = (0..self.vocab_per_cluster).collect();
        (0..n)
            .map(|i| {
                let dominant = i % self.n_clusters;
                let mut tokens: Vec<String> = vocab.choose_multiple(&mut rng, 2).map(|&j| word(dominant, j)).collect();
                for c in (0..self.n_clusters).filter(|&c| c != dominant) {
                    tokens.push(word(c, *vocab.choose(&mut rng).expect("non-empty vocab")));
                }
                let pair = DialoguePair::new(i as u64, &tokens.join(" "), &tokens[0], None, false).expect("non-empty");
                (pair, dominant)
            })
            .collect()
    }
}

/// Chat-like pairs over a Zipf-distributed vocabulary. Short replies repeat,
/// so deduplication removes a few percent of them.
pub fn zipf_pairs(n_pairs: usize, vocab: usize, seed: u64) -> Vec<DialoguePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zipf = Zipf::new(vocab as f64, 1.1).expect("valid zipf parameters");
    let sentence = |rng: &mut ChaCha8Rng, lo: usize, hi: usize| {
        let len = rng.random_range(lo..=hi);
        (0..len).map(|_| format!("w{}", zipf.sample(rng) as u64)).collect::<Vec<_>>().join(" ")
    };
    (0..n_pairs)
        .map(|i| {
            let context = sentence(&mut rng, 4, 16);
            let reply = sentence(&mut rng, 2, 10);
            DialoguePair::new(i as u64, &context, &reply, None, false).expect("non-empty")
        })
        .collect()
}

/// JSON-lines corpus text for `pairs`.
pub fn to_jsonl(pairs: &[DialoguePair]) -> String {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&serde_json::json!({ "context": p.context, "reply": p.reply }).to_string());
        out.push('\n');
    }
    out
}
