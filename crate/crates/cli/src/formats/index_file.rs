//! Binary index file, little-endian:
//!
//! ```text
//! "NCSI" | version: u32 | d: u32 | rows: u64
//! rows × (len: u32 | UTF-8 id bytes)
//! rows × d × f32, row-major
//! ```

use std::path::Path;

use ncs_core::SearchIndex;

use super::FormatError;

pub const MAGIC: &[u8; 4] = b"NCSI";
pub const VERSION: u32 = 1;

pub fn encode_index(index: &SearchIndex) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + index.vectors().len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(index.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(index.len() as u64).to_le_bytes());
    for id in index.ids() {
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id.as_bytes());
    }
    for x in index.vectors() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_index(bytes: &[u8]) -> Result<SearchIndex, String> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err("not an index file (bad magic)".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported index version {version}, expected {VERSION}"));
    }
    let dim = r.u32()? as usize;
    let rows = usize::try_from(r.u64()?).map_err(|_| "row count overflows usize".to_string())?;
    // Each row needs at least a length prefix; reject absurd counts before allocating.
    if rows > bytes.len() / 4 {
        return Err(format!("truncated: header claims {rows} rows"));
    }
    let mut ids = Vec::with_capacity(rows);
    for _ in 0..rows {
        let len = r.u32()? as usize;
        let id = std::str::from_utf8(r.take(len)?).map_err(|e| format!("id is not UTF-8: {e}"))?;
        ids.push(id.to_string());
    }
    let n = rows.checked_mul(dim).ok_or("vector block overflows")?;
    let block = r.take(n.checked_mul(4).ok_or("vector block overflows")?)?;
    let vectors = block
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    SearchIndex::from_raw(dim, ids, vectors).map_err(|e| e.to_string())
}

pub fn save_index(path: &Path, index: &SearchIndex) -> Result<(), FormatError> {
    super::create_parent(path)?;
    std::fs::write(path, encode_index(index)).map_err(FormatError::io(path))
}

pub fn load_index(path: &Path) -> Result<SearchIndex, FormatError> {
    let bytes = std::fs::read(path).map_err(FormatError::io(path))?;
    decode_index(&bytes).map_err(|m| FormatError::invalid(path, m))
}

/// Loads an index and checks it against the model dimension.
pub fn load_index_for(path: &Path, dim: usize) -> Result<SearchIndex, FormatError> {
    let index = load_index(path)?;
    if !index.is_empty() && index.dim() != dim {
        return Err(FormatError::invalid(
            path,
            format!("index dimension {} does not match model dimension {dim}", index.dim()),
        ));
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SearchIndex {
        SearchIndex::build([("x", vec![3.0, 4.0]), ("ünï", vec![-1.0, 0.5])]).unwrap()
    }

    #[test]
    fn layout() {
        let bytes = encode_index(&small());
        assert_eq!(&bytes[..4], b"NCSI");
        assert_eq!(bytes[4..8], 1u32.to_le_bytes());
        assert_eq!(bytes[8..12], 2u32.to_le_bytes());
        assert_eq!(bytes[12..20], 2u64.to_le_bytes());
        assert_eq!(bytes[20..24], 1u32.to_le_bytes());
        assert_eq!(bytes[24], b'x');
        assert_eq!(bytes.len(), 20 + 5 + 4 + "ünï".len() + 16);
        assert_eq!(bytes[bytes.len() - 16..bytes.len() - 12], 0.6f32.to_le_bytes());
    }

    #[test]
    fn round_trip_and_empty() {
        assert_eq!(decode_index(&encode_index(&small())).unwrap(), small());
        let empty = SearchIndex::default();
        assert_eq!(decode_index(&encode_index(&empty)).unwrap(), empty);
    }

    #[test]
    fn rejects_damaged_files() {
        let bytes = encode_index(&small());
        for cut in [0, 3, 10, 19, 22, bytes.len() - 1] {
            assert!(decode_index(&bytes[..cut]).is_err(), "cut at {cut}");
        }
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(decode_index(&bad).unwrap_err().contains("version"));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_index(&bad).unwrap_err().contains("magic"));
        let mut long = bytes;
        long.push(0);
        assert!(decode_index(&long).unwrap_err().contains("trailing"));
    }

    #[test]
    fn dimension_check_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.ncsi");
        save_index(&path, &small()).unwrap();
        assert!(load_index_for(&path, 2).is_ok());
        assert!(load_index_for(&path, 3).is_err());
    }
}
