use serde::{Deserialize, Serialize};

use super::model::guarded_cosine;
use super::params::GroundingParams;
use super::vocab::Vocabulary;

/// Drop candidates whose embedding is too close to any seed word.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub seeds: Vec<String>,
    /// Candidates with cosine strictly above this to any seed are removed.
    pub threshold: f64,
}

impl Exclusion {
    pub fn none() -> Self {
        Self {
            seeds: Vec::new(),
            threshold: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinedWord {
    pub index: usize,
    pub word: String,
    pub score: f64,
    pub frequency: u64,
    /// Largest cosine to any exclusion seed, if seeds were given.
    pub max_seed_similarity: Option<f64>,
}

/// Rank the vocabulary by word-importance logit and keep the top `k_cls`
/// words that pass the frequency and seed-similarity filters. Ties are broken
/// by ascending word index. Seeds missing from the vocabulary are ignored.
pub fn mine_vocabulary(
    vocab: &Vocabulary,
    params: &GroundingParams,
    k_cls: usize,
    min_freq: u64,
    exclusion: &Exclusion,
) -> Vec<MinedWord> {
    let seeds: Vec<usize> = exclusion
        .seeds
        .iter()
        .filter_map(|s| {
            let found = vocab.index_of(s);
            if found.is_none() {
                log::warn!("exclusion seed {s:?} is not in the vocabulary");
            }
            found
        })
        .collect();

    let mut ranked: Vec<(usize, f64)> = (0..vocab.len().min(params.vocab_size()))
        .map(|i| (i, params.word_logit(i)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut out = Vec::with_capacity(k_cls);
    for (index, score) in ranked {
        if out.len() == k_cls {
            break;
        }
        if vocab.frequency(index) < min_freq {
            continue;
        }
        let max_seed_similarity = seeds
            .iter()
            .map(|&s| guarded_cosine(params.embedding(index), params.embedding(s)))
            .reduce(f64::max);
        if max_seed_similarity.is_some_and(|sim| sim > exclusion.threshold) {
            continue;
        }
        out.push(MinedWord {
            index,
            word: vocab.word(index).to_string(),
            score,
            frequency: vocab.frequency(index),
            max_seed_similarity,
        });
    }
    out
}
