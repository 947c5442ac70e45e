//! Idf tables as JSON lines: a header `{"N": int}` then one
//! `{"token": str, "idf": real}` per token, in token order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ncs_core::IdfTable;
use serde::{Deserialize, Serialize};

use super::FormatError;

#[derive(Serialize, Deserialize)]
struct Header {
    #[serde(rename = "N")]
    n: u64,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    token: String,
    idf: f64,
}

pub fn write_idf(path: &Path, idf: &IdfTable) -> Result<(), FormatError> {
    super::create_parent(path)?;
    let io = || FormatError::io(path);
    let mut w = BufWriter::new(File::create(path).map_err(io())?);
    serde_json::to_writer(&mut w, &Header { n: idf.n_docs() }).map_err(|e| FormatError::invalid(path, e.to_string()))?;
    w.write_all(b"\n").map_err(io())?;
    for (token, v) in idf.iter() {
        let entry = Entry { token: token.into(), idf: v };
        serde_json::to_writer(&mut w, &entry).map_err(|e| FormatError::invalid(path, e.to_string()))?;
        w.write_all(b"\n").map_err(io())?;
    }
    w.flush().map_err(io())
}

pub fn read_idf(path: &Path) -> Result<IdfTable, FormatError> {
    let reader = BufReader::new(File::open(path).map_err(FormatError::io(path))?);
    let mut n = None;
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(FormatError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |e: serde_json::Error| FormatError::Parse {
            path: path.into(),
            line: i + 1,
            message: e.to_string(),
        };
        if n.is_none() {
            n = Some(serde_json::from_str::<Header>(&line).map_err(err)?.n);
        } else {
            let e: Entry = serde_json::from_str(&line).map_err(err)?;
            entries.push((e.token, e.idf));
        }
    }
    let n = n.ok_or_else(|| FormatError::invalid(path, "missing {\"N\": ...} header"))?;
    Ok(IdfTable::from_entries(n, entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ncs_core::ncs::compute_idf;
    use ncs_core::TokenBag;

    #[test]
    fn round_trip() {
        let corpus = [TokenBag::from_tokens(["a", "a", "b"]), TokenBag::from_tokens(["b", "c"])];
        let idf = compute_idf(&corpus);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("idf.jsonl");
        write_idf(&path, &idf).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("{\"N\":2}\n{\"token\":\"a\",\"idf\":0.69314"));
        assert_eq!(read_idf(&path).unwrap(), idf);
    }

    #[test]
    fn header_required() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("idf.jsonl");
        std::fs::write(&path, "{\"token\":\"a\",\"idf\":1.0}\n").unwrap();
        assert!(matches!(read_idf(&path), Err(FormatError::Parse { line: 1, .. })));
    }
}
