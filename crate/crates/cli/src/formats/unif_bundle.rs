//! A trained UNIF model on disk: a directory holding `code_embeddings.txt`
//! (`T_c`), `query_embeddings.txt` (`T_q`) and `unif.json` with
//! `{"d", "a_c", "config", "loss_history"}`.

use std::path::Path;

use ncs_core::unif::{UnifParameters, UnifTrainConfig};
use serde::{Deserialize, Serialize};

use super::embeddings::{read_embeddings, write_embeddings};
use super::FormatError;

pub const CODE_FILE: &str = "code_embeddings.txt";
pub const QUERY_FILE: &str = "query_embeddings.txt";
pub const SIDECAR_FILE: &str = "unif.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub d: usize,
    pub a_c: Vec<f64>,
    pub config: UnifTrainConfig,
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnifBundle {
    pub params: UnifParameters,
    pub config: UnifTrainConfig,
    pub loss_history: Vec<f64>,
}

pub fn save_bundle(dir: &Path, bundle: &UnifBundle) -> Result<(), FormatError> {
    std::fs::create_dir_all(dir).map_err(FormatError::io(dir))?;
    write_embeddings(&dir.join(CODE_FILE), bundle.params.code())?;
    write_embeddings(&dir.join(QUERY_FILE), bundle.params.query())?;
    let sidecar = Sidecar {
        d: bundle.params.dim(),
        a_c: bundle.params.attention().to_vec(),
        config: bundle.config.clone(),
        loss_history: bundle.loss_history.clone(),
    };
    let path = dir.join(SIDECAR_FILE);
    let json = serde_json::to_string_pretty(&sidecar).map_err(|e| FormatError::invalid(&path, e.to_string()))?;
    std::fs::write(&path, json + "\n").map_err(FormatError::io(&path))
}

pub fn load_bundle(dir: &Path) -> Result<UnifBundle, FormatError> {
    let path = dir.join(SIDECAR_FILE);
    let text = std::fs::read_to_string(&path).map_err(FormatError::io(&path))?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| FormatError::invalid(&path, e.to_string()))?;
    if sidecar.a_c.len() != sidecar.d {
        return Err(FormatError::invalid(&path, format!("a_c has {} entries, d = {}", sidecar.a_c.len(), sidecar.d)));
    }
    let code = read_embeddings(&dir.join(CODE_FILE))?;
    let query = read_embeddings(&dir.join(QUERY_FILE))?;
    let params =
        UnifParameters::from_parts(code, query, sidecar.a_c).map_err(|e| FormatError::invalid(dir, e.to_string()))?;
    Ok(UnifBundle {
        params,
        config: sidecar.config,
        loss_history: sidecar.loss_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ncs_core::embedding::{EmbeddingMatrix, TokenEmbeddings, Vocabulary};
    use ncs_core::TokenBag;

    #[test]
    fn round_trip() {
        let vocab = Vocabulary::from_tokens(["a".into(), "b".into(), "c".into()]).unwrap();
        let m = EmbeddingMatrix::from_rows(2, vec![vec![0.1, 0.2], vec![-0.3, 0.4], vec![0.5, -0.6]]).unwrap();
        let base = TokenEmbeddings::new(vocab, m).unwrap();
        let params = UnifParameters::init(
            &base,
            &[TokenBag::from_tokens(["a", "b"])],
            &[TokenBag::from_tokens(["b", "c"])],
            3,
        )
        .unwrap();
        let bundle = UnifBundle {
            params,
            config: UnifTrainConfig::default(),
            loss_history: vec![0.05, 0.01],
        };
        let dir = tempfile::tempdir().unwrap();
        save_bundle(dir.path(), &bundle).unwrap();
        assert_eq!(load_bundle(dir.path()).unwrap(), bundle);

        let sidecar: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(SIDECAR_FILE)).unwrap()).unwrap();
        assert_eq!(sidecar["d"], 2);
        assert_eq!(sidecar["loss_history"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(CODE_FILE), "2 1\na 1 2\n").unwrap();
        std::fs::write(dir.path().join(QUERY_FILE), "3 1\nb 1 2 3\n").unwrap();
        let sidecar = Sidecar {
            d: 2,
            a_c: vec![0.0, 0.0],
            config: UnifTrainConfig::default(),
            loss_history: vec![],
        };
        std::fs::write(dir.path().join(SIDECAR_FILE), serde_json::to_string(&sidecar).unwrap()).unwrap();
        assert!(load_bundle(dir.path()).is_err());
    }
}
