//! Vocabulary construction and unsupervised token embeddings learned with
//! skip-gram and negative sampling.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenize::TokenBag;
use crate::vector::{axpy, dot};

/// Bijective token ↔ row-index table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from `(token, count)` rows in index order.
    /// Duplicate tokens are rejected.
    pub fn from_counted<I: IntoIterator<Item = (String, u64)>>(rows: I) -> Result<Self> {
        let mut vocab = Vocabulary::default();
        for (token, count) in rows {
            if vocab.index.contains_key(&token) {
                return Err(Error::DuplicateId(token));
            }
            vocab.index.insert(token.clone(), vocab.tokens.len());
            vocab.tokens.push(token);
            vocab.counts.push(count);
        }
        Ok(vocab)
    }

    /// Vocabulary restored without frequencies (counts are zero).
    pub fn from_tokens<I: IntoIterator<Item = String>>(tokens: I) -> Result<Self> {
        Self::from_counted(tokens.into_iter().map(|t| (t, 0)))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, idx: usize) -> &str {
        &self.tokens[idx]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

/// Keeps tokens seen at least `min_count` times across `corpus`, ordered by
/// descending frequency and then lexicographically.
pub fn build_vocabulary(corpus: &[TokenBag], min_count: u64) -> Result<Vocabulary> {
    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for bag in corpus {
        for t in bag.iter() {
            *freq.entry(t).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = freq.into_iter().filter(|&(_, c)| c >= min_count).collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary { min_count });
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocabulary::from_counted(kept.into_iter().map(|(t, c)| (String::from(t), c)))
}

/// Row-major `rows × dim` table of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        EmbeddingMatrix {
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    /// Every row must have length `dim` and finite entries.
    pub fn from_rows(dim: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            if !crate::vector::is_finite(&row) {
                return Err(Error::InvalidConfig(String::from("non-finite embedding entry")));
            }
            data.extend(row);
        }
        Ok(EmbeddingMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn is_finite(&self) -> bool {
        crate::vector::is_finite(&self.data)
    }
}

/// A vocabulary together with its embedding matrix (the matrix `T`).
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbeddings {
    vocab: Vocabulary,
    matrix: EmbeddingMatrix,
}

impl TokenEmbeddings {
    pub fn new(vocab: Vocabulary, matrix: EmbeddingMatrix) -> Result<Self> {
        if vocab.len() != matrix.rows() {
            return Err(Error::DimensionMismatch {
                expected: vocab.len(),
                actual: matrix.rows(),
            });
        }
        Ok(TokenEmbeddings { vocab, matrix })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn matrix(&self) -> &EmbeddingMatrix {
        &self.matrix
    }

    pub fn matrix_mut(&mut self) -> &mut EmbeddingMatrix {
        &mut self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vocab.get(token).map(|i| self.matrix.row(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_count: u64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 2,
            seed: 0,
        }
    }
}

impl SkipGramConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("skip-gram {what}")));
        if self.dim < 2 {
            return bad("dim must be at least 2");
        }
        if self.window == 0 || self.negatives == 0 || self.epochs == 0 || self.min_count == 0 {
            return bad("window, negatives, epochs and min_count must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }
}

/// Positions at distance `1..=window` on each side of `center`, clipped to
/// `0..len`, left side first.
pub fn context_positions(len: usize, center: usize, window: usize) -> impl Iterator<Item = usize> {
    let lo = center.saturating_sub(window);
    let hi = (center + window).min(len.saturating_sub(1));
    (lo..=hi).filter(move |&p| p != center && p < len)
}

/// Draws negative samples with probability proportional to `count^0.75`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(counts: &[u64]) -> Self {
        let weights: Vec<f64> = counts.iter().map(|&c| libm::pow(c as f64, 0.75)).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        NegativeSampler { cumulative }
    }

    /// Probability of drawing each index.
    pub fn probabilities(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|&c| {
                let p = c - prev;
                prev = c;
                p
            })
            .collect()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.cumulative.len() - 1)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Learns token embeddings from `corpus` with skip-gram and negative
/// sampling.
///
/// Tokens below `min_count` are dropped before windows are taken. Each
/// (target, context) pair within `window` is a positive; `negatives` tokens
/// drawn from the unigram^0.75 distribution are negatives. Plain SGD on the
/// logistic loss with a learning rate decaying linearly to zero. The result
/// is fully determined by `corpus` and `cfg`.
pub fn train_skipgram(corpus: &[TokenBag], cfg: &SkipGramConfig) -> Result<TokenEmbeddings> {
    cfg.validate()?;
    let vocab = build_vocabulary(corpus, cfg.min_count)?;
    let docs: Vec<Vec<usize>> = corpus
        .iter()
        .map(|bag| bag.iter().filter_map(|t| vocab.get(t)).collect())
        .collect();

    let pairs_per_epoch: usize = docs
        .iter()
        .map(|d| (0..d.len()).map(|i| context_positions(d.len(), i, cfg.window).count()).sum::<usize>())
        .sum();
    if pairs_per_epoch == 0 {
        return Err(Error::NoTrainingPairs { window: cfg.window });
    }

    let dim = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound = 0.5 / dim as f64;
    let mut input = EmbeddingMatrix::zeros(vocab.len(), dim);
    for x in input.data.iter_mut() {
        *x = rng.random_range(-bound..bound);
    }
    let mut output = EmbeddingMatrix::zeros(vocab.len(), dim);
    let sampler = NegativeSampler::new(vocab.counts());

    let total = (cfg.epochs * pairs_per_epoch) as f64;
    let mut seen = 0usize;
    let mut grad = vec![0.0; dim];

    for _ in 0..cfg.epochs {
        for doc in &docs {
            for (i, &target) in doc.iter().enumerate() {
                for j in context_positions(doc.len(), i, cfg.window) {
                    let lr = cfg.learning_rate * (1.0 - seen as f64 / total).max(1e-4);
                    seen += 1;
                    grad.iter_mut().for_each(|g| *g = 0.0);

                    let context = doc[j];
                    let mut update = |sample: usize, label: f64, grad: &mut [f64]| {
                        let f = sigmoid(dot(input.row(target), output.row(sample)));
                        let g = lr * (label - f);
                        axpy(g, output.row(sample), grad);
                        let (inp, out) = (&input, &mut output);
                        axpy(g, inp.row(target), out.row_mut(sample));
                    };
                    update(context, 1.0, &mut grad);
                    for _ in 0..cfg.negatives {
                        let neg = sampler.sample(&mut rng);
                        if neg != context {
                            update(neg, 0.0, &mut grad);
                        }
                    }
                    axpy(1.0, &grad, input.row_mut(target));
                }
            }
        }
    }

    TokenEmbeddings::new(vocab, input)
}
