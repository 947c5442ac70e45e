//! Neural code search over bags of token embeddings.
//!
//! Two retrieval models share one embedding contract: a code embedder and a
//! query embedder whose outputs are compared by cosine similarity.
//!
//! * [`ncs`]: unsupervised. One token embedding matrix learned by skip-gram,
//!   TF-IDF weighted code pooling, averaged query pooling.
//! * [`unif`]: supervised. Separate code and query matrices initialized from
//!   the same base embeddings, attention pooling over code tokens, trained
//!   with a cosine margin-ranking loss and hand-written gradients.
//!
//! [`index`] holds the exact top-k cosine index and [`eval`] the automated
//! Answered@k / MRR pipeline. Everything here is `no_std` with `alloc`; file
//! formats and the CLI live in the `ncs-cli` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod index;
pub mod ncs;
pub mod synthetic;
pub mod tokenize;
pub mod unif;
pub mod vector;

pub use corpus::{dedup, filter_forum_pair, AlignedPair, SearchDocument};
pub use embedding::{
    build_vocabulary, train_skipgram, EmbeddingMatrix, SkipGramConfig, TokenEmbeddings,
    Vocabulary,
};
pub use error::{Error, Result};
pub use eval::{BenchmarkQuery, EvalReport, Judgment};
pub use index::SearchIndex;
pub use ncs::{IdfTable, IdfWeighting, NcsModel};
pub use tokenize::{tokenize, TokenBag};
pub use unif::{UnifParameters, UnifTrainConfig};

/// Code and query embedders sharing one vector space.
pub trait CodeSearchModel {
    /// Dimension of produced vectors.
    fn dim(&self) -> usize;
    /// `E_c`: one vector for a code snippet.
    fn embed_code(&self, code: &TokenBag) -> Result<alloc::vec::Vec<f64>>;
    /// `E_q`: one vector for a natural-language query.
    fn embed_query(&self, query: &TokenBag) -> Result<alloc::vec::Vec<f64>>;
}
