//! One function per subcommand. Each reads its inputs from the paths in a
//! [`RunConfig`], writes its artifacts, and returns what it produced.

use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use ncs_core::corpus::{AlignedPair, SearchDocument};
use ncs_core::eval::{index_corpus, run_pipeline, EvalConfig};
use ncs_core::ncs::{IdfTable, NcsModel};
use ncs_core::unif::{train_unif, UnifParameters};
use ncs_core::{synthetic, tokenize, train_skipgram, CodeSearchModel, EvalReport, TokenBag};

use crate::config::{ModelKind, RunConfig};
use crate::corpus_io::{load_aligned, load_benchmark, load_search, write_synthetic};
use crate::formats::embeddings::{read_embeddings, write_embeddings};
use crate::formats::idf::{read_idf, write_idf};
use crate::formats::index_file::{load_index_for, save_index};
use crate::formats::report::write_report;
use crate::formats::unif_bundle::{load_bundle, save_bundle, UnifBundle};

fn require(path: &Path, what: &str) -> Result<()> {
    ensure!(path.exists(), "{what} not found: {}", path.display());
    Ok(())
}

fn aligned(cfg: &RunConfig) -> Result<Vec<AlignedPair>> {
    require(&cfg.paths.aligned, "aligned corpus")?;
    Ok(load_aligned(&cfg.paths.aligned, cfg.forum_filter)?)
}

fn search_corpus(cfg: &RunConfig) -> Result<Vec<SearchDocument>> {
    require(&cfg.paths.search, "search corpus")?;
    Ok(load_search(&cfg.paths.search)?)
}

fn code_bags(docs: &[SearchDocument]) -> Vec<TokenBag> {
    docs.iter().map(|d| d.code.clone()).collect()
}

/// Writes the synthetic aligned, search and benchmark corpora. With `out`,
/// files go to `out/{aligned,search,benchmark}.jsonl`; otherwise to the
/// configured corpus paths.
pub fn cmd_gen_synthetic(cfg: &RunConfig, out: Option<&Path>) -> Result<[PathBuf; 3]> {
    let corpora = synthetic::generate(&cfg.synthetic_gen())?;
    let paths = match out {
        Some(dir) => ["aligned", "search", "benchmark"].map(|n| dir.join(format!("{n}.jsonl"))),
        None => [
            cfg.paths.aligned.clone(),
            cfg.paths.search.clone(),
            cfg.paths.benchmark.clone(),
        ],
    };
    write_synthetic(&corpora, &paths[0], &paths[1], &paths[2]).context("writing synthetic corpora")?;
    Ok(paths)
}

/// Trains skip-gram embeddings on the aligned code bags, the aligned
/// descriptions, and (when present) the search corpus, each as separate
/// documents.
pub fn cmd_train_embeddings(cfg: &RunConfig, out: Option<&Path>) -> Result<PathBuf> {
    let pairs = aligned(cfg)?;
    let mut docs: Vec<TokenBag> = pairs.iter().map(|p| p.code.clone()).collect();
    docs.extend(pairs.iter().map(|p| p.description.clone()));
    if cfg.paths.search.exists() {
        docs.extend(code_bags(&load_search(&cfg.paths.search)?));
    }
    let table = train_skipgram(&docs, &cfg.skipgram()).context("training skip-gram embeddings")?;
    let path = out.map_or_else(|| cfg.paths.embeddings.clone(), Path::to_path_buf);
    write_embeddings(&path, &table)?;
    Ok(path)
}

pub fn cmd_train_unif(cfg: &RunConfig, out: Option<&Path>) -> Result<PathBuf> {
    require(&cfg.paths.embeddings, "embeddings")?;
    let base = read_embeddings(&cfg.paths.embeddings)?;
    let pairs = aligned(cfg)?;
    let codes: Vec<TokenBag> = pairs.iter().map(|p| p.code.clone()).collect();
    let descs: Vec<TokenBag> = pairs.iter().map(|p| p.description.clone()).collect();
    let train_cfg = cfg.unif_train();
    let params = UnifParameters::init(&base, &codes, &descs, train_cfg.seed)?;
    let outcome = train_unif(&pairs, params, &train_cfg).context("training UNIF")?;
    let dir = out.map_or_else(|| cfg.paths.unif.clone(), Path::to_path_buf);
    save_bundle(
        &dir,
        &UnifBundle {
            params: outcome.params,
            config: train_cfg,
            loss_history: outcome.loss_history,
        },
    )?;
    Ok(dir)
}

/// A model ready to embed. NCS takes its idf table either from the search
/// corpus or from the stored table.
pub fn load_model(cfg: &RunConfig, kind: ModelKind, idf: Option<IdfTable>) -> Result<Box<dyn CodeSearchModel>> {
    Ok(match kind {
        ModelKind::Ncs => {
            require(&cfg.paths.embeddings, "embeddings")?;
            let embeddings = read_embeddings(&cfg.paths.embeddings)?;
            let idf = match idf {
                Some(idf) => idf,
                None => {
                    require(&cfg.paths.idf, "idf table (run `ncs index --model ncs` first)")?;
                    read_idf(&cfg.paths.idf)?
                }
            };
            Box::new(NcsModel { embeddings, idf })
        }
        ModelKind::Unif => {
            require(&cfg.paths.unif, "UNIF parameter bundle")?;
            Box::new(load_bundle(&cfg.paths.unif)?.params)
        }
    })
}

fn model_for_corpus(cfg: &RunConfig, kind: ModelKind, docs: &[SearchDocument]) -> Result<Box<dyn CodeSearchModel>> {
    let idf = (kind == ModelKind::Ncs).then(|| IdfTable::compute(&code_bags(docs), cfg.idf_weighting));
    load_model(cfg, kind, idf)
}

/// Embeds the search corpus and writes the index (plus, for NCS, the idf
/// table it was weighted with).
pub fn cmd_build_index(cfg: &RunConfig, kind: ModelKind, out: Option<&Path>) -> Result<PathBuf> {
    let docs = search_corpus(cfg)?;
    if kind == ModelKind::Ncs {
        let idf = IdfTable::compute(&code_bags(&docs), cfg.idf_weighting);
        write_idf(&cfg.paths.idf, &idf)?;
    }
    let model = model_for_corpus(cfg, kind, &docs)?;
    let (index, _) = index_corpus(model.as_ref(), &docs)?;
    let path = out.map_or_else(|| cfg.paths.index_for(kind), Path::to_path_buf);
    save_index(&path, &index)?;
    if index.len() < docs.len() {
        eprintln!(
            "warning: {} of {} documents had no weighted known token and were not indexed",
            docs.len() - index.len(),
            docs.len()
        );
    }
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub rank: usize,
    pub id: String,
    pub score: f64,
    pub excerpt: String,
}

fn excerpt(raw: &str) -> String {
    let flat = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    match flat.char_indices().nth(80) {
        Some((cut, _)) => format!("{}...", &flat[..cut]),
        None => flat,
    }
}

pub fn cmd_search(cfg: &RunConfig, kind: ModelKind, query: &str, k: usize) -> Result<Vec<SearchResult>> {
    ensure!(k >= 1, "k must be at least 1");
    let model = load_model(cfg, kind, None)?;
    let index_path = cfg.paths.index_for(kind);
    require(&index_path, "index")?;
    let index = load_index_for(&index_path, model.dim())?;
    let raw: std::collections::HashMap<String, String> = if cfg.paths.search.exists() {
        load_search(&cfg.paths.search)?
            .into_iter()
            .map(|d| (d.id, d.raw_code))
            .collect()
    } else {
        Default::default()
    };
    let qv = model
        .embed_query(&tokenize(query))
        .with_context(|| format!("cannot embed query `{query}`"))?;
    let hits = index.search(&qv, k)?;
    Ok(hits
        .into_iter()
        .enumerate()
        .map(|(i, h)| {
            let id = index.id(h.row).to_string();
            SearchResult {
                rank: i + 1,
                excerpt: raw.get(&id).map(|r| excerpt(r)).unwrap_or_default(),
                id,
                score: h.score,
            }
        })
        .collect())
}

/// Runs the evaluation pipeline and writes `eval-<model>.json` and
/// `eval-<model>.txt` into `out` (default: the configured report dir).
pub fn cmd_eval(cfg: &RunConfig, kind: ModelKind, out: Option<&Path>) -> Result<(EvalReport, PathBuf)> {
    cfg.validate()?;
    let docs = search_corpus(cfg)?;
    require(&cfg.paths.benchmark, "benchmark")?;
    let bench = load_benchmark(&cfg.paths.benchmark)?;
    let model = model_for_corpus(cfg, kind, &docs)?;
    let eval_cfg = EvalConfig {
        k_max: cfg.k.max(10),
        threshold: cfg.threshold,
    };
    let report = run_pipeline(model.as_ref(), &docs, &bench, &eval_cfg)?;
    let dir = out.map_or_else(|| cfg.paths.report_dir.clone(), Path::to_path_buf);
    let json = dir.join(format!("eval-{}.json", kind.name()));
    let text = dir.join(format!("eval-{}.txt", kind.name()));
    write_report(&json, &text, kind.label(), &report)?;
    Ok((report, json))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn excerpts_are_flattened_and_cut() {
        assert_eq!(excerpt("a(\n  b);\n"), "a( b);");
        let long = "x".repeat(100);
        assert_eq!(excerpt(&long).len(), 83);
    }
}
