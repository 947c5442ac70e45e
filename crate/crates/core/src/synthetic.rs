//! Seeded generator of aligned, search and benchmark corpora with planted
//! code-token ↔ query-token correspondences.
//!
//! Every "concept" has one code token and one query token. Snippets are
//! random concept sets rendered as code-like text; descriptions and
//! benchmark queries name the same concepts with query tokens. With
//! `vocab_overlap = 0` the two vocabularies are disjoint, so only a model
//! trained on the aligned pairs can connect a query to its snippet.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub concepts: usize,
    pub aligned_pairs: usize,
    pub search_snippets: usize,
    pub benchmark_queries: usize,
    pub concepts_per_snippet: usize,
    /// Share of each bag made of noise tokens.
    pub noise_fraction: f64,
    /// Size of each side's noise-token pool.
    pub noise_vocab: usize,
    /// Share of concepts whose query token equals the code token.
    pub vocab_overlap: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            concepts: 100,
            aligned_pairs: 500,
            search_snippets: 500,
            benchmark_queries: 100,
            concepts_per_snippet: 4,
            noise_fraction: 0.2,
            noise_vocab: 40,
            vocab_overlap: 0.0,
            seed: 7,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("synthetic {what}")));
        if self.concepts_per_snippet == 0 || self.concepts_per_snippet > self.concepts {
            return bad("concepts_per_snippet must be in 1..=concepts");
        }
        if self.benchmark_queries > self.search_snippets {
            return bad("benchmark_queries cannot exceed search_snippets");
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return bad("noise_fraction must be in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.vocab_overlap) {
            return bad("vocab_overlap must be in [0, 1]");
        }
        if self.noise_fraction > 0.0 && self.noise_vocab == 0 {
            return bad("noise_vocab must be positive when noise_fraction > 0");
        }
        let sets = binomial(self.concepts, self.concepts_per_snippet);
        if sets < (self.search_snippets + self.aligned_pairs) as f64 {
            return bad("too few distinct concept sets for the requested corpus sizes");
        }
        Ok(())
    }

    /// Noise tokens added to a bag of `concepts_per_snippet` concept tokens.
    pub fn noise_per_bag(&self) -> usize {
        let c = self.concepts_per_snippet as f64;
        libm::round(c * self.noise_fraction / (1.0 - self.noise_fraction)) as usize
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPair {
    pub id: String,
    pub code: String,
    pub nl: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSnippet {
    pub id: String,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticQuery {
    pub id: String,
    pub query: String,
    pub truth_code: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpora {
    pub aligned: Vec<SyntheticPair>,
    pub search: Vec<SyntheticSnippet>,
    pub benchmark: Vec<SyntheticQuery>,
}

/// Lowercase letter name for `i`, at least three letters long.
fn letters(mut i: usize) -> String {
    let mut out = Vec::new();
    for _ in 0..3 {
        out.push(b'a' + (i % 26) as u8);
        i /= 26;
    }
    while i > 0 {
        out.push(b'a' + (i % 26) as u8);
        i /= 26;
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}

struct Vocab {
    code: Vec<String>,
    query: Vec<String>,
    code_noise: Vec<String>,
    query_noise: Vec<String>,
}

impl Vocab {
    fn new(cfg: &SyntheticConfig) -> Self {
        let shared = libm::round(cfg.vocab_overlap * cfg.concepts as f64) as usize;
        let code: Vec<String> = (0..cfg.concepts).map(|i| format!("code{}", letters(i))).collect();
        let query = (0..cfg.concepts)
            .map(|i| if i < shared { code[i].clone() } else { format!("word{}", letters(i)) })
            .collect();
        Vocab {
            code,
            query,
            code_noise: (0..cfg.noise_vocab).map(|i| format!("misc{}", letters(i))).collect(),
            query_noise: (0..cfg.noise_vocab).map(|i| format!("filler{}", letters(i))).collect(),
        }
    }
}

fn render_code(tokens: &[String]) -> String {
    match tokens {
        [] => String::new(),
        [only] => format!("{only}();"),
        [recv, method, args @ ..] => format!("{recv}.{method}({});", args.join(", ")),
    }
}

fn bag(concepts: &[usize], names: &[String], noise: &[String], n_noise: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut tokens: Vec<String> = concepts.iter().map(|&c| names[c].clone()).collect();
    for _ in 0..n_noise {
        tokens.push(noise[rng.random_range(0..noise.len())].clone());
    }
    tokens.shuffle(rng);
    tokens
}

/// Generates all three corpora. The output depends only on `cfg`.
pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticCorpora> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab = Vocab::new(cfg);
    let n_noise = cfg.noise_per_bag();
    let k = cfg.concepts_per_snippet;

    let mut used: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut draw = |rng: &mut ChaCha8Rng, first: Option<usize>| -> Vec<usize> {
        loop {
            let mut set: Vec<usize> = match first {
                Some(f) => {
                    let mut s: Vec<usize> = index::sample(rng, cfg.concepts - 1, k - 1)
                        .into_iter()
                        .map(|i| if i >= f { i + 1 } else { i })
                        .collect();
                    s.push(f);
                    s
                }
                None => index::sample(rng, cfg.concepts, k).into_vec(),
            };
            set.sort_unstable();
            if used.insert(set.clone()) {
                return set;
            }
        }
    };

    let search_sets: Vec<Vec<usize>> = (0..cfg.search_snippets).map(|_| draw(&mut rng, None)).collect();
    // Cycling the first concept guarantees every concept is seen in training.
    let train_sets: Vec<Vec<usize>> = (0..cfg.aligned_pairs)
        .map(|i| draw(&mut rng, Some(i % cfg.concepts)))
        .collect();

    let aligned = train_sets
        .iter()
        .enumerate()
        .map(|(i, set)| SyntheticPair {
            id: format!("pair-{i:05}"),
            code: render_code(&bag(set, &vocab.code, &vocab.code_noise, n_noise, &mut rng)),
            nl: bag(set, &vocab.query, &vocab.query_noise, n_noise, &mut rng).join(" "),
        })
        .collect();

    let search: Vec<SyntheticSnippet> = search_sets
        .iter()
        .enumerate()
        .map(|(i, set)| SyntheticSnippet {
            id: format!("snippet-{i:05}"),
            code: render_code(&bag(set, &vocab.code, &vocab.code_noise, n_noise, &mut rng)),
        })
        .collect();

    let picked = index::sample(&mut rng, search.len(), cfg.benchmark_queries).into_vec();
    let benchmark = picked
        .into_iter()
        .enumerate()
        .map(|(qi, si)| SyntheticQuery {
            id: format!("query-{qi:04}"),
            query: bag(&search_sets[si], &vocab.query, &vocab.query_noise, n_noise, &mut rng).join(" "),
            truth_code: search[si].code.clone(),
        })
        .collect();

    Ok(SyntheticCorpora {
        aligned,
        search,
        benchmark,
    })
}
