//! Automated retrieval evaluation: judge each retrieved snippet against the
//! ground-truth answer with a token-similarity threshold, then report how
//! many queries were answered within the top 1, 5 and 10 results and the
//! mean reciprocal rank.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::SearchDocument;
use crate::error::{Error, Result};
use crate::index::SearchIndex;
use crate::tokenize::{tokenize, TokenBag};
use crate::CodeSearchModel;

/// Cutoffs reported as Answered@k.
pub const ANSWERED_KS: [usize; 3] = [1, 5, 10];

pub const DEFAULT_THRESHOLD: f64 = 0.6;

/// A benchmark question with its ground-truth snippet.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkQuery {
    pub id: String,
    pub query: String,
    pub query_tokens: TokenBag,
    pub truth_code: String,
    pub truth: TokenBag,
}

impl BenchmarkQuery {
    pub fn new(id: impl Into<String>, query: impl Into<String>, truth_code: impl Into<String>) -> Result<Self> {
        let (query, truth_code) = (query.into(), truth_code.into());
        let truth = tokenize(&truth_code);
        if truth.is_empty() {
            return Err(Error::EmptyTruth);
        }
        Ok(BenchmarkQuery {
            id: id.into(),
            query_tokens: tokenize(&query),
            query,
            truth_code,
            truth,
        })
    }
}

/// Similarity between a retrieved snippet and the ground truth, in `[0, 1]`.
pub trait SnippetSimilarity {
    fn similarity(&self, candidate: &TokenBag, truth: &TokenBag) -> Result<f64>;
}

/// Fraction of the truth's distinct tokens that the candidate contains.
#[derive(Debug, Clone, Copy, Default)]
pub struct Containment;

impl SnippetSimilarity for Containment {
    fn similarity(&self, candidate: &TokenBag, truth: &TokenBag) -> Result<f64> {
        snippet_similarity(candidate, truth)
    }
}

/// `|unique(candidate) ∩ unique(truth)| / |unique(truth)|`
pub fn snippet_similarity(candidate: &TokenBag, truth: &TokenBag) -> Result<f64> {
    let truth: BTreeSet<&str> = truth.iter().collect();
    if truth.is_empty() {
        return Err(Error::EmptyTruth);
    }
    let candidate: BTreeSet<&str> = candidate.iter().collect();
    Ok(truth.intersection(&candidate).count() as f64 / truth.len() as f64)
}

/// Outcome for one benchmark query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    pub query_id: String,
    /// 1-based rank of the first result meeting the threshold.
    pub first_hit_rank: Option<usize>,
    pub retrieved: Vec<String>,
    pub scores: Vec<f64>,
    pub similarities: Vec<f64>,
    /// Set when the query had no known token and nothing was retrieved.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub embedding_failed: bool,
}

impl Judgment {
    pub fn unanswered(query_id: impl Into<String>) -> Self {
        Judgment {
            query_id: query_id.into(),
            first_hit_rank: None,
            retrieved: Vec::new(),
            scores: Vec::new(),
            similarities: Vec::new(),
            embedding_failed: false,
        }
    }
}

/// Scores `results` in order against `truth`.
pub fn judge(
    query_id: &str,
    results: &[(&str, &TokenBag)],
    truth: &TokenBag,
    threshold: f64,
) -> Result<Judgment> {
    judge_with(&Containment, query_id, results, truth, threshold)
}

pub fn judge_with<M: SnippetSimilarity + ?Sized>(
    metric: &M,
    query_id: &str,
    results: &[(&str, &TokenBag)],
    truth: &TokenBag,
    threshold: f64,
) -> Result<Judgment> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidThreshold(threshold));
    }
    let mut judgment = Judgment::unanswered(query_id);
    for (rank, (id, candidate)) in results.iter().enumerate() {
        let sim = metric.similarity(candidate, truth)?;
        if judgment.first_hit_rank.is_none() && sim >= threshold {
            judgment.first_hit_rank = Some(rank + 1);
        }
        judgment.retrieved.push(String::from(*id));
        judgment.similarities.push(sim);
    }
    Ok(judgment)
}

pub fn answered_at_k(judgments: &[Judgment], k: usize) -> usize {
    judgments
        .iter()
        .filter(|j| j.first_hit_rank.is_some_and(|r| r <= k))
        .count()
}

/// Mean of `1 / first_hit_rank`, counting unanswered queries as 0.
pub fn mrr(judgments: &[Judgment]) -> f64 {
    if judgments.is_empty() {
        return 0.0;
    }
    let sum: f64 = judgments
        .iter()
        .filter_map(|j| j.first_hit_rank)
        .map(|r| 1.0 / r as f64)
        .sum();
    sum / judgments.len() as f64
}

/// Mean similarity over the pairs labeled relevant.
pub fn calibrate_threshold(labeled: &[(TokenBag, TokenBag, bool)]) -> Result<f64> {
    let sims = labeled
        .iter()
        .filter(|(_, _, relevant)| *relevant)
        .map(|(c, t, _)| snippet_similarity(c, t))
        .collect::<Result<Vec<f64>>>()?;
    if sims.is_empty() {
        return Err(Error::NoRelevantPairs);
    }
    Ok(sims.iter().sum::<f64>() / sims.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub answered: BTreeMap<usize, usize>,
    pub mrr: f64,
    pub threshold: f64,
    /// Search documents that could not be embedded and were left out.
    #[serde(default)]
    pub unindexed: usize,
    pub queries: Vec<Judgment>,
}

impl EvalReport {
    pub fn from_judgments(judgments: Vec<Judgment>, threshold: f64, unindexed: usize) -> Self {
        EvalReport {
            answered: ANSWERED_KS.iter().map(|&k| (k, answered_at_k(&judgments, k))).collect(),
            mrr: mrr(&judgments),
            threshold,
            unindexed,
            queries: judgments,
        }
    }

    pub fn answered_at(&self, k: usize) -> usize {
        self.answered.get(&k).copied().unwrap_or_else(|| answered_at_k(&self.queries, k))
    }

    /// Fixed-width summary table, one row per `(label, report)`.
    pub fn table(rows: &[(&str, &EvalReport)]) -> String {
        let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(5);
        let mut out = format!(
            "{:<width$}  {:>10}  {:>10}  {:>11}  {:>6}\n",
            "Model", "Answered@1", "Answered@5", "Answered@10", "MRR"
        );
        for (label, r) in rows {
            out += &format!(
                "{:<width$}  {:>10}  {:>10}  {:>11}  {:>6.3}\n",
                label,
                r.answered_at(1),
                r.answered_at(5),
                r.answered_at(10),
                r.mrr
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub k_max: usize,
    pub threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k_max: 10,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// Embeds the search corpus, indexes it, and judges the top `k_max` results
/// of every benchmark query. Queries without a known token count as
/// unanswered and are flagged.
pub fn run_pipeline<M: CodeSearchModel + ?Sized>(
    model: &M,
    corpus: &[SearchDocument],
    benchmark: &[BenchmarkQuery],
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    run_pipeline_with(model, corpus, benchmark, cfg, &Containment)
}

pub fn run_pipeline_with<M, S>(
    model: &M,
    corpus: &[SearchDocument],
    benchmark: &[BenchmarkQuery],
    cfg: &EvalConfig,
    metric: &S,
) -> Result<EvalReport>
where
    M: CodeSearchModel + ?Sized,
    S: SnippetSimilarity + ?Sized,
{
    if benchmark.is_empty() {
        return Err(Error::EmptyBenchmark);
    }
    if cfg.k_max == 0 {
        return Err(Error::ZeroK);
    }
    let (index, docs) = index_corpus(model, corpus)?;
    let unindexed = corpus.len() - docs.len();

    let mut judgments = Vec::with_capacity(benchmark.len());
    for q in benchmark {
        let Ok(qv) = model.embed_query(&q.query_tokens) else {
            let mut j = Judgment::unanswered(q.id.clone());
            j.embedding_failed = true;
            judgments.push(j);
            continue;
        };
        let hits = index.search(&qv, cfg.k_max)?;
        let results: Vec<(&str, &TokenBag)> = hits
            .iter()
            .map(|h| {
                let d = docs[h.row];
                (d.id.as_str(), &d.code)
            })
            .collect();
        let mut j = judge_with(metric, &q.id, &results, &q.truth, cfg.threshold)?;
        j.scores = hits.iter().map(|h| h.score).collect();
        judgments.push(j);
    }
    Ok(EvalReport::from_judgments(judgments, cfg.threshold, unindexed))
}

/// Embeds and indexes every document the model can embed. Returns the
/// index and, per index row, the source document.
pub fn index_corpus<'a, M: CodeSearchModel + ?Sized>(
    model: &M,
    corpus: &'a [SearchDocument],
) -> Result<(SearchIndex, Vec<&'a SearchDocument>)> {
    let mut docs = Vec::with_capacity(corpus.len());
    let mut entries = Vec::with_capacity(corpus.len());
    for d in corpus {
        if let Ok(v) = model.embed_code(&d.code) {
            if crate::vector::norm(&v) >= crate::vector::MIN_NORM {
                entries.push((d.id.clone(), v));
                docs.push(d);
            }
        }
    }
    Ok((SearchIndex::build(entries)?, docs))
}
