//! Run configuration: one TOML file, every field optional, plus command-line
//! overrides applied on top.

use std::path::{Path, PathBuf};

use anyhow::Context;
use ncs_core::embedding::SkipGramConfig;
use ncs_core::ncs::IdfWeighting;
use ncs_core::synthetic::SyntheticConfig;
use ncs_core::unif::UnifTrainConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Ncs,
    Unif,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ncs => "ncs",
            ModelKind::Unif => "unif",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Ncs => "NCS",
            ModelKind::Unif => "UNIF",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub aligned: PathBuf,
    pub search: PathBuf,
    pub benchmark: PathBuf,
    pub embeddings: PathBuf,
    pub unif: PathBuf,
    pub idf: PathBuf,
    /// Defaults to `model/<kind>.ncsi`.
    pub index: Option<PathBuf>,
    pub report_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            aligned: "data/aligned.jsonl".into(),
            search: "data/search.jsonl".into(),
            benchmark: "data/benchmark.jsonl".into(),
            embeddings: "model/embeddings.txt".into(),
            unif: "model/unif".into(),
            idf: "model/idf.jsonl".into(),
            index: None,
            report_dir: "reports".into(),
        }
    }
}

impl Paths {
    pub fn index_for(&self, model: ModelKind) -> PathBuf {
        self.index
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("model/{}.ncsi", model.name())))
    }

    /// Resolves every relative path against `base`.
    fn rebase(&mut self, base: &Path) {
        for p in [
            &mut self.aligned,
            &mut self.search,
            &mut self.benchmark,
            &mut self.embeddings,
            &mut self.unif,
            &mut self.idf,
            &mut self.report_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(p) = &mut self.index {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelKind,
    pub threshold: f64,
    pub k: usize,
    /// Apply the forum title/snippet heuristics when loading aligned pairs.
    pub forum_filter: bool,
    pub idf_weighting: IdfWeighting,
    pub paths: Paths,
    pub embedding: SkipGramConfig,
    pub unif: UnifTrainConfig,
    pub synthetic: SyntheticConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            model: ModelKind::Ncs,
            threshold: ncs_core::eval::DEFAULT_THRESHOLD,
            k: 10,
            forum_filter: false,
            idf_weighting: IdfWeighting::Classic,
            paths: Paths::default(),
            embedding: SkipGramConfig::default(),
            unif: UnifTrainConfig::default(),
            synthetic: SyntheticConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses a TOML config. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if let Some(base) = path.parent() {
            cfg.paths.rebase(base);
        }
        Ok(cfg)
    }

    /// Sets the global seed and propagates it to every sub-config.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn skipgram(&self) -> SkipGramConfig {
        SkipGramConfig {
            seed: self.seed,
            ..self.embedding.clone()
        }
    }

    pub fn unif_train(&self) -> UnifTrainConfig {
        UnifTrainConfig {
            seed: self.seed,
            ..self.unif.clone()
        }
    }

    pub fn synthetic_gen(&self) -> SyntheticConfig {
        SyntheticConfig {
            seed: self.seed,
            ..self.synthetic.clone()
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!((0.0..=1.0).contains(&self.threshold), "threshold {} outside [0, 1]", self.threshold);
        anyhow::ensure!(self.k >= 1, "k must be at least 1");
        self.skipgram().validate()?;
        self.unif_train().validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_fills_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            r#"
seed = 3
model = "unif"
[paths]
search = "corpus/search.jsonl"
index = "/abs/i.ncsi"
[unif]
epochs = 2
"#,
        )
        .unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.model, ModelKind::Unif);
        assert_eq!(cfg.unif.epochs, 2);
        assert_eq!(cfg.unif.batch_size, UnifTrainConfig::default().batch_size);
        assert_eq!(cfg.paths.search, dir.path().join("corpus/search.jsonl"));
        assert_eq!(cfg.paths.index_for(ModelKind::Ncs), PathBuf::from("/abs/i.ncsi"));
        assert_eq!(cfg.unif_train().seed, 3);
        assert_eq!(cfg.with_seed(9).skipgram().seed, 9);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "sed = 3\n").unwrap();
        assert!(RunConfig::load(&path).is_err());
    }

    #[test]
    fn validation() {
        let cfg = RunConfig {
            threshold: 1.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }
}
