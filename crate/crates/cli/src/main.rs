use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use ncs_cli::commands;
use ncs_cli::{ModelKind, RunConfig};

/// Neural code search: train NCS / UNIF models, index a code corpus, search
/// it, and evaluate retrieval quality.
#[derive(Parser)]
#[command(name = "ncs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory of the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train skip-gram token embeddings (the shared NCS matrix).
    TrainEmbeddings {
        #[command(flatten)]
        common: Common,
    },
    /// Train UNIF starting from the skip-gram embeddings.
    TrainUnif {
        #[command(flatten)]
        common: Common,
    },
    /// Embed and index the search corpus.
    Index {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        model: Option<ModelKind>,
    },
    /// Search the index with a natural-language query.
    Search {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        model: Option<ModelKind>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        query: Vec<String>,
    },
    /// Run the benchmark and write Answered@k / MRR reports.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        model: Option<ModelKind>,
        /// Similarity threshold for judging a result as an answer.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Generate the synthetic aligned, search and benchmark corpora.
    GenSynthetic {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    Ok(match common.seed {
        Some(seed) => cfg.with_seed(seed),
        None => cfg,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TrainEmbeddings { common } => {
            let cfg = load_config(&common)?;
            let path = commands::cmd_train_embeddings(&cfg, common.out.as_deref())?;
            eprintln!("wrote {}", path.display());
        }
        Command::TrainUnif { common } => {
            let cfg = load_config(&common)?;
            let path = commands::cmd_train_unif(&cfg, common.out.as_deref())?;
            eprintln!("wrote {}", path.display());
        }
        Command::Index { common, model } => {
            let cfg = load_config(&common)?;
            let path = commands::cmd_build_index(&cfg, model.unwrap_or(cfg.model), common.out.as_deref())?;
            eprintln!("wrote {}", path.display());
        }
        Command::Search { common, model, k, query } => {
            let cfg = load_config(&common)?;
            anyhow::ensure!(!query.is_empty(), "missing query text");
            let results = commands::cmd_search(&cfg, model.unwrap_or(cfg.model), &query.join(" "), k)?;
            for r in results {
                println!("{}\t{}\t{:.4}\t{}", r.rank, r.id, r.score, r.excerpt);
            }
        }
        Command::Eval { common, model, threshold } => {
            let mut cfg = load_config(&common)?;
            if let Some(t) = threshold {
                cfg.threshold = t;
            }
            let kind = model.unwrap_or(cfg.model);
            let (report, path) = commands::cmd_eval(&cfg, kind, common.out.as_deref())?;
            print!("{}", ncs_core::EvalReport::table(&[(kind.label(), &report)]));
            eprintln!("wrote {}", path.display());
        }
        Command::GenSynthetic { common } => {
            let cfg = load_config(&common)?;
            for path in commands::cmd_gen_synthetic(&cfg, common.out.as_deref())? {
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
