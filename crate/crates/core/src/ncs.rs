//! The unsupervised model: one shared token embedding matrix, TF-IDF weighted
//! pooling for code and a plain average for queries.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::embedding::TokenEmbeddings;
use crate::error::{Error, Result};
use crate::tokenize::TokenBag;
use crate::vector::axpy;
use crate::CodeSearchModel;

/// How document frequency turns into an idf weight.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdfWeighting {
    /// `ln(N / df)`
    #[default]
    Classic,
    /// `ln((1 + N) / (1 + df)) + 1`, never zero.
    Smooth,
}

impl IdfWeighting {
    pub fn weight(self, n_docs: u64, df: u64) -> f64 {
        let (n, df) = (n_docs as f64, df as f64);
        match self {
            IdfWeighting::Classic => libm::log(n / df),
            IdfWeighting::Smooth => libm::log((1.0 + n) / (1.0 + df)) + 1.0,
        }
    }
}

/// Inverse document frequencies over a code corpus.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IdfTable {
    n_docs: u64,
    idf: BTreeMap<String, f64>,
}

impl IdfTable {
    pub fn compute(corpus: &[TokenBag], weighting: IdfWeighting) -> Self {
        let mut df: BTreeMap<&str, u64> = BTreeMap::new();
        for bag in corpus {
            for t in bag.counts().into_keys() {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let n_docs = corpus.len() as u64;
        let idf = df
            .into_iter()
            .map(|(t, d)| (String::from(t), weighting.weight(n_docs, d)))
            .collect();
        IdfTable { n_docs, idf }
    }

    /// Rebuilds a table from stored values.
    pub fn from_entries<I: IntoIterator<Item = (String, f64)>>(n_docs: u64, entries: I) -> Self {
        IdfTable {
            n_docs,
            idf: entries.into_iter().collect(),
        }
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    /// Idf of `token`; zero for tokens never seen.
    pub fn get(&self, token: &str) -> f64 {
        self.idf.get(token).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }

    /// Entries in token order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.idf.iter().map(|(t, &v)| (t.as_str(), v))
    }
}

/// `ln(N / df)` for every token of `corpus`.
pub fn compute_idf(corpus: &[TokenBag]) -> IdfTable {
    IdfTable::compute(corpus, IdfWeighting::Classic)
}

/// `e_c = Σ_u tf(u) · idf(u) · T[u]` over the unique known tokens `u`.
pub fn embed_code_ncs(code: &TokenBag, table: &TokenEmbeddings, idf: &IdfTable) -> Result<Vec<f64>> {
    let mut out = vec![0.0; table.dim()];
    let mut weighted = false;
    for (token, tf) in code.counts() {
        let Some(row) = table.get(token) else { continue };
        let w = tf as f64 * idf.get(token);
        if w != 0.0 {
            axpy(w, row, &mut out);
            weighted = true;
        }
    }
    if !weighted {
        return Err(Error::AllTokensUnweighted);
    }
    Ok(out)
}

/// Mean of `T[q]` over the known tokens of `query`, repeats included.
pub fn embed_query_ncs(query: &TokenBag, table: &TokenEmbeddings) -> Result<Vec<f64>> {
    mean_pool(query, table)
}

pub(crate) fn mean_pool(bag: &TokenBag, table: &TokenEmbeddings) -> Result<Vec<f64>> {
    let mut out = vec![0.0; table.dim()];
    let mut n = 0usize;
    for (token, count) in bag.counts() {
        if let Some(row) = table.get(token) {
            axpy(count as f64, row, &mut out);
            n += count;
        }
    }
    if n == 0 {
        return Err(Error::NoKnownTokens);
    }
    crate::vector::scale(&mut out, 1.0 / n as f64);
    Ok(out)
}

/// NCS as a [`CodeSearchModel`].
#[derive(Debug, Clone)]
pub struct NcsModel {
    pub embeddings: TokenEmbeddings,
    pub idf: IdfTable,
}

impl CodeSearchModel for NcsModel {
    fn dim(&self) -> usize {
        self.embeddings.dim()
    }

    fn embed_code(&self, code: &TokenBag) -> Result<Vec<f64>> {
        embed_code_ncs(code, &self.embeddings, &self.idf)
    }

    fn embed_query(&self, query: &TokenBag) -> Result<Vec<f64>> {
        embed_query_ncs(query, &self.embeddings)
    }
}
