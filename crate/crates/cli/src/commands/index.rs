use std::path::{Path, PathBuf};

use clap::Args;
use lexrag_core::corpus::{load_dictionary, load_parallel, to_documents, ParallelFormat};
use lexrag_core::index::{build_index, save_index, BuildStats, EmbeddingCache, IndexBundle};

use crate::config::AppConfig;
use crate::exit::{CliError, CliResult, Exit, ExitContext};

pub const CACHE_FILE: &str = "cache/embeddings.jsonl";

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Bilingual dictionary (JSONL).
    #[arg(long)]
    pub dict: Option<PathBuf>,
    /// Parallel examples (JSONL, or TSV for .tsv/.tab).
    #[arg(long)]
    pub parallel: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn build(args: BuildArgs, config: &AppConfig) -> CliResult<()> {
    if args.dict.is_none() && args.parallel.is_none() {
        return Err(CliError::msg(Exit::Usage, "give at least one of --dict / --parallel"));
    }
    let out = config.index_dir(args.out, "--out")?;

    let entries = match &args.dict {
        Some(p) => load_dictionary(p)?,
        None => Vec::new(),
    };
    let examples = match &args.parallel {
        Some(p) => load_parallel(p, ParallelFormat::from_path(p))?,
        None => Vec::new(),
    };
    let docs = to_documents(&entries, &examples)?;
    let (embedder, _) = config.backend.build()?;

    let existed = out.exists();
    let result = (|| -> CliResult<(IndexBundle, BuildStats)> {
        let cache = EmbeddingCache::open(&out.join(CACHE_FILE))?;
        let created_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        let (bundle, stats) =
            build_index(docs, embedder.as_ref(), config.batch_size, Some(&cache), created_at)?;
        save_index(&bundle, &out)?;
        Ok((bundle, stats))
    })();

    match result {
        Ok((bundle, stats)) => {
            println!("documents: {}", bundle.manifest.count);
            println!("dim: {}", bundle.manifest.dim);
            println!("embedder: {}", bundle.manifest.embedder_id);
            println!("cache_hits: {}", stats.cache_hits);
            println!("backend_calls: {}", stats.backend_calls);
            println!("embedded: {}", stats.embedded);
            Ok(())
        }
        Err(e) => {
            remove_partial(&out, existed);
            Err(e)
        }
    }
}

/// A directory this run created goes entirely; in a pre-existing one only
/// index files are removed so the embedding cache survives.
fn remove_partial(out: &Path, existed: bool) {
    use lexrag_core::index::{DOCS_FILE, KEYWORD_FILE, MANIFEST_FILE, VECTORS_FILE};
    let outcome = if existed {
        [MANIFEST_FILE, KEYWORD_FILE, DOCS_FILE, VECTORS_FILE]
            .iter()
            .map(|f| out.join(f))
            .filter(|p| p.exists())
            .try_for_each(std::fs::remove_file)
    } else {
        std::fs::remove_dir_all(out)
    };
    if let Err(e) = outcome.exit(Exit::Io, format!("removing partial output {}", out.display())) {
        log::warn!("{e}");
    }
}
