use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use lexrag_core::index::load_index;
use lexrag_core::pipeline::{
    BatchItem, Failure, FailureKind, Timings, TranslationRecord, Translator,
};
use lexrag_core::retrieval::RetrievalResult;
use serde::Serialize;
use serde_json::Value;

use crate::config::AppConfig;
use crate::exit::{CliError, CliResult, Exit, ExitContext};

#[derive(Debug, Args)]
pub struct TranslateArgs {
    /// Index directory written by `index build`.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Translate one sentence and print the result.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pub text: Option<String>,
    /// Batch input: one sentence per line, or JSONL {"id", "source"}.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Batch output file (JSONL); standard output when omitted.
    #[arg(long, requires = "input")]
    pub output: Option<PathBuf>,
    /// Include the assembled prompt in every record (single mode: print the
    /// whole record as JSON).
    #[arg(long)]
    pub trace: bool,
    /// Exit non-zero if any batch item fails.
    #[arg(long)]
    pub strict: bool,
    /// Concurrent batch items.
    #[arg(long)]
    pub parallelism: Option<usize>,
}

pub fn run(args: TranslateArgs, config: &AppConfig) -> CliResult<()> {
    let dir = config.index_dir(args.index.clone(), "--index")?;
    let index = load_index(&dir).exit(Exit::Io, format!("cannot load index {}", dir.display()))?;
    let (embedder, generator) = config.backend.build()?;
    if index.manifest.embedder_id != embedder.embedder_id() {
        return Err(CliError::msg(
            Exit::Data,
            format!(
                "index {} was built with embedder {} but the configured embedder is {}",
                dir.display(),
                index.manifest.embedder_id,
                embedder.embedder_id()
            ),
        ));
    }
    let translator = Translator {
        index: &index,
        embedder: embedder.as_ref(),
        generator: generator.as_ref(),
        retrieval: config.retrieval.clone(),
        template: config.prompt_template()?,
        languages: config.languages.clone(),
    };
    translator.validate()?;

    if let Some(text) = &args.text {
        let record = translator.translate(text).map_err(|e| CliError::from(e.source))?;
        if args.trace {
            println!("{}", serde_json::to_string_pretty(&record).expect("record serializes"));
        } else {
            println!("{}", record.output);
        }
        return Ok(());
    }

    let input = args.input.as_deref().expect("clap enforces --text or --input");
    let items = read_batch(input)?;
    let parallelism = args.parallelism.unwrap_or(config.parallelism);
    if parallelism == 0 {
        return Err(CliError::msg(Exit::Usage, "--parallelism must be at least 1"));
    }
    let records = translator.batch_translate(&items, parallelism)?;

    let mut text = String::new();
    for record in &records {
        text.push_str(&record_line(record, args.trace));
        text.push('\n');
    }
    match &args.output {
        Some(path) => std::fs::write(path, text)
            .exit(Exit::Io, format!("cannot write {}", path.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }

    let failed: Vec<&TranslationRecord> = records.iter().filter(|r| !r.is_ok()).collect();
    for r in &failed {
        let err = r.error.as_ref().expect("failed records carry an error");
        log::warn!("item {}: {}", r.id.as_deref().unwrap_or("?"), err.message);
    }
    if args.strict && !failed.is_empty() {
        let backend = failed
            .iter()
            .any(|r| r.error.as_ref().is_some_and(|e| e.kind == FailureKind::Backend));
        let exit = if backend { Exit::Backend } else { Exit::Data };
        return Err(CliError::msg(
            exit,
            format!("{} of {} items failed", failed.len(), records.len()),
        ));
    }
    Ok(())
}

/// Serialized shape of a batch record; `prompt` is only kept with `--trace`.
#[derive(Serialize)]
struct Line<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    id: Option<&'a str>,
    query: &'a str,
    results: &'a [RetrievalResult],
    #[serde(skip_serializing_if = "Option::is_none")]
    prompt: Option<&'a str>,
    output: &'a str,
    model_id: &'a str,
    sampling: &'a str,
    timings: &'a Timings,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a Failure>,
}

pub fn record_line(record: &TranslationRecord, trace: bool) -> String {
    let line = Line {
        id: record.id.as_deref(),
        query: &record.query,
        results: &record.results,
        prompt: trace.then_some(record.prompt.as_str()),
        output: &record.output,
        model_id: &record.model_id,
        sampling: &record.sampling,
        timings: &record.timings,
        error: record.error.as_ref(),
    };
    serde_json::to_string(&line).expect("record serializes")
}

/// Plain lines get their 1-based line number as id; blank lines are skipped.
pub fn read_batch(path: &Path) -> CliResult<Vec<BatchItem>> {
    let text = std::fs::read_to_string(path)
        .exit(Exit::Io, format!("cannot read {}", path.display()))?;
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('{') {
            let value: Value = serde_json::from_str(trimmed)
                .exit(Exit::Io, format!("{}:{line_no}: invalid JSON", path.display()))?;
            let source = value
                .get("source")
                .and_then(Value::as_str)
                .ok_or_else(|| {
                    CliError::msg(Exit::Io, format!("{}:{line_no}: missing \"source\"", path.display()))
                })?;
            let id = match value.get("id") {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Number(n)) => n.to_string(),
                _ => line_no.to_string(),
            };
            items.push(BatchItem {
                id,
                source: source.to_owned(),
            });
        } else {
            items.push(BatchItem {
                id: line_no.to_string(),
                source: trimmed.to_owned(),
            });
        }
    }
    if items.is_empty() {
        return Err(CliError::msg(Exit::Data, format!("{} has no sentences", path.display())));
    }
    Ok(items)
}
