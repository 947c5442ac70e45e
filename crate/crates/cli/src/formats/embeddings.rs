//! Text vector format: a header line `d |V|`, then one line per token with
//! the token followed by `d` decimal reals, separated by single spaces.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ncs_core::embedding::{EmbeddingMatrix, TokenEmbeddings, Vocabulary};

use super::FormatError;

pub fn write_embeddings(path: &Path, t: &TokenEmbeddings) -> Result<(), FormatError> {
    super::create_parent(path)?;
    let io = || FormatError::io(path);
    let mut w = BufWriter::new(File::create(path).map_err(io())?);
    writeln!(w, "{} {}", t.dim(), t.vocab().len()).map_err(io())?;
    for (token, row) in t.vocab().tokens().iter().zip(t.matrix().iter_rows()) {
        w.write_all(token.as_bytes()).map_err(io())?;
        for x in row {
            // `{}` prints the shortest representation that parses back exactly.
            write!(w, " {x}").map_err(io())?;
        }
        w.write_all(b"\n").map_err(io())?;
    }
    w.flush().map_err(io())
}

pub fn read_embeddings(path: &Path) -> Result<TokenEmbeddings, FormatError> {
    let reader = BufReader::new(File::open(path).map_err(FormatError::io(path))?);
    let parse = |line: usize, message: String| FormatError::Parse {
        path: path.into(),
        line,
        message,
    };
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse(1, "empty file".into()))?
        .map_err(FormatError::io(path))?;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|e| parse(1, format!("bad header `{header}`: {e}")))?;
    let [dim, count] = nums[..] else {
        return Err(parse(1, format!("header must be `d |V|`, got `{header}`")));
    };

    let mut tokens = Vec::with_capacity(count);
    let mut rows = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(FormatError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().expect("non-empty line").to_string();
        let row: Vec<f64> = parts
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| parse(line_no, format!("bad number: {e}")))?;
        if row.len() != dim {
            return Err(parse(line_no, format!("expected {dim} values, found {}", row.len())));
        }
        tokens.push(token);
        rows.push(row);
    }
    if tokens.len() != count {
        return Err(FormatError::invalid(
            path,
            format!("header promises {count} rows, found {}", tokens.len()),
        ));
    }
    let vocab = Vocabulary::from_tokens(tokens).map_err(|e| FormatError::invalid(path, e.to_string()))?;
    let matrix = EmbeddingMatrix::from_rows(dim, rows).map_err(|e| FormatError::invalid(path, e.to_string()))?;
    TokenEmbeddings::new(vocab, matrix).map_err(|e| FormatError::invalid(path, e.to_string()))
}
