//! File formats, corpus loading and command implementations behind the
//! `ncs` binary. The algorithms themselves live in `ncs-core`.

pub mod commands;
pub mod config;
pub mod corpus_io;
pub mod formats;

pub use config::{ModelKind, RunConfig};
pub use corpus_io::{load_aligned, load_benchmark, load_corpus, load_search, Corpus, CorpusKind};
