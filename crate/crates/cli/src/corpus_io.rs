//! JSON-lines corpora.
//!
//! * aligned: `{"id": str, "code": str | [str], "nl": str | [str], "url"?: str}`
//! * search: `{"id": str, "code": str | [str]}`
//! * benchmark: `{"id": str, "query": str, "truth_code": str}`
//!
//! Token arrays are normalized with the same tokenizer as raw text, so a
//! pre-tokenized record and its raw original load identically.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use ncs_core::corpus::{dedup, filter_forum_pair, AlignedPair, SearchDocument};
use ncs_core::eval::BenchmarkQuery;
use ncs_core::synthetic::SyntheticCorpora;
use ncs_core::{tokenize, TokenBag};
use serde_json::{json, Map, Value};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed JSON: {message}")]
    Malformed { path: PathBuf, line: usize, message: String },
    #[error("{path}:{line}: missing required field `{field}`")]
    MissingField { path: PathBuf, line: usize, field: &'static str },
    #[error("{path}:{line}: field `{field}` must be {expected}")]
    WrongType {
        path: PathBuf,
        line: usize,
        field: &'static str,
        expected: &'static str,
    },
    #[error("{path}:{line}: {what} has no tokens")]
    Empty { path: PathBuf, line: usize, what: &'static str },
    #[error("{path}:{line}: duplicate id `{id}`")]
    DuplicateId { path: PathBuf, line: usize, id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusKind {
    Aligned,
    Search,
    Benchmark,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Corpus {
    Aligned(Vec<AlignedPair>),
    Search(Vec<SearchDocument>),
    Benchmark(Vec<BenchmarkQuery>),
}

impl Corpus {
    pub fn len(&self) -> usize {
        match self {
            Corpus::Aligned(v) => v.len(),
            Corpus::Search(v) => v.len(),
            Corpus::Benchmark(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn load_corpus(path: &Path, kind: CorpusKind) -> Result<Corpus, CorpusError> {
    Ok(match kind {
        CorpusKind::Aligned => Corpus::Aligned(load_aligned(path, false)?),
        CorpusKind::Search => Corpus::Search(load_search(path)?),
        CorpusKind::Benchmark => Corpus::Benchmark(load_benchmark(path)?),
    })
}

struct Record<'a> {
    path: &'a Path,
    line: usize,
    fields: Map<String, Value>,
}

impl Record<'_> {
    fn get(&self, field: &'static str) -> Result<&Value, CorpusError> {
        self.fields.get(field).ok_or_else(|| CorpusError::MissingField {
            path: self.path.into(),
            line: self.line,
            field,
        })
    }

    fn wrong(&self, field: &'static str, expected: &'static str) -> CorpusError {
        CorpusError::WrongType {
            path: self.path.into(),
            line: self.line,
            field,
            expected,
        }
    }

    fn string(&self, field: &'static str) -> Result<&str, CorpusError> {
        self.get(field)?.as_str().ok_or_else(|| self.wrong(field, "a string"))
    }

    fn optional_string(&self, field: &'static str) -> Result<Option<String>, CorpusError> {
        match self.fields.get(field) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(self.wrong(field, "a string")),
        }
    }

    /// Raw text (tokens joined by spaces for arrays) and its token bag.
    fn text_or_tokens(&self, field: &'static str) -> Result<(String, TokenBag), CorpusError> {
        const EXPECTED: &str = "a string or an array of strings";
        match self.get(field)? {
            Value::String(s) => Ok((s.clone(), tokenize(s))),
            Value::Array(items) => {
                let tokens = items
                    .iter()
                    .map(|v| v.as_str().ok_or_else(|| self.wrong(field, EXPECTED)))
                    .collect::<Result<Vec<&str>, _>>()?;
                Ok((tokens.join(" "), TokenBag::from_tokens(tokens)))
            }
            _ => Err(self.wrong(field, EXPECTED)),
        }
    }

    fn empty(&self, what: &'static str) -> CorpusError {
        CorpusError::Empty {
            path: self.path.into(),
            line: self.line,
            what,
        }
    }
}

fn for_each_record(
    path: &Path,
    mut f: impl FnMut(Record<'_>) -> Result<(), CorpusError>,
) -> Result<(), CorpusError> {
    let io = |source| CorpusError::Io {
        path: path.into(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line.map_err(io)?;
        if text.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| CorpusError::Malformed {
            path: path.into(),
            line: line_no,
            message,
        };
        let fields = match serde_json::from_str::<Value>(&text).map_err(|e| malformed(e.to_string()))? {
            Value::Object(map) => map,
            _ => return Err(malformed("expected a JSON object".into())),
        };
        f(Record {
            path,
            line: line_no,
            fields,
        })?;
    }
    Ok(())
}

/// Loads aligned (code, description) pairs. With `forum_filter`, pairs whose
/// raw `nl` title and `code` snippet fail the forum heuristics are dropped.
pub fn load_aligned(path: &Path, forum_filter: bool) -> Result<Vec<AlignedPair>, CorpusError> {
    let mut out = Vec::new();
    for_each_record(path, |r| {
        let id = r.string("id")?.to_string();
        let (raw_code, code) = r.text_or_tokens("code")?;
        let (raw_nl, description) = r.text_or_tokens("nl")?;
        let url = r.optional_string("url")?;
        if forum_filter && !filter_forum_pair(&raw_nl, &raw_code) {
            return Ok(());
        }
        if code.is_empty() {
            return Err(r.empty("code"));
        }
        if description.is_empty() {
            return Err(r.empty("nl"));
        }
        out.push(AlignedPair::new(id, code, description, raw_code, url).expect("bags checked"));
        Ok(())
    })?;
    Ok(out)
}

/// Loads a search corpus, rejecting repeated ids, then drops documents whose
/// token multiset was already seen.
pub fn load_search(path: &Path) -> Result<Vec<SearchDocument>, CorpusError> {
    let mut docs = Vec::new();
    let mut ids = HashSet::new();
    for_each_record(path, |r| {
        let id = r.string("id")?.to_string();
        let (raw_code, code) = r.text_or_tokens("code")?;
        if code.is_empty() {
            return Err(r.empty("code"));
        }
        if !ids.insert(id.clone()) {
            return Err(CorpusError::DuplicateId {
                path: path.into(),
                line: r.line,
                id,
            });
        }
        docs.push(SearchDocument { id, code, raw_code });
        Ok(())
    })?;
    Ok(dedup(docs))
}

pub fn load_benchmark(path: &Path) -> Result<Vec<BenchmarkQuery>, CorpusError> {
    let mut out = Vec::new();
    for_each_record(path, |r| {
        let id = r.string("id")?;
        let query = r.string("query")?;
        let truth = r.string("truth_code")?;
        let q = BenchmarkQuery::new(id, query, truth).map_err(|_| r.empty("truth_code"))?;
        out.push(q);
        Ok(())
    })?;
    Ok(out)
}

fn write_lines(path: &Path, lines: impl Iterator<Item = Value>) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = std::io::BufWriter::new(File::create(path)?);
    for v in lines {
        serde_json::to_writer(&mut w, &v)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Writes generated corpora as `aligned.jsonl`, `search.jsonl` and
/// `benchmark.jsonl` at the given paths.
pub fn write_synthetic(
    corpora: &SyntheticCorpora,
    aligned: &Path,
    search: &Path,
    benchmark: &Path,
) -> std::io::Result<()> {
    write_lines(
        aligned,
        corpora
            .aligned
            .iter()
            .map(|p| json!({"id": p.id, "code": p.code, "nl": p.nl})),
    )?;
    write_lines(
        search,
        corpora.search.iter().map(|s| json!({"id": s.id, "code": s.code})),
    )?;
    write_lines(
        benchmark,
        corpora
            .benchmark
            .iter()
            .map(|q| json!({"id": q.id, "query": q.query, "truth_code": q.truth_code})),
    )
}
