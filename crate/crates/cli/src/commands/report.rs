use std::path::PathBuf;

use clap::Args;
use lexrag_core::metrics::MetricReport;
use serde::Deserialize;

use crate::config::{AppConfig, ReportFormat};
use crate::exit::{CliError, CliResult, Exit, ExitContext};
use crate::render;

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON reports from `evaluate` / `humaneval` (an object or an array).
    #[arg(required = true)]
    pub metrics: Vec<PathBuf>,
    #[arg(long)]
    pub format: Option<ReportFormat>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(MetricReport),
    Many(Vec<MetricReport>),
}

/// Fill `into`'s missing fields from `from`; a field present in both with
/// different values is a conflict.
fn merge_field(into: &mut Option<f64>, from: Option<f64>, name: &str) -> Result<(), String> {
    match (*into, from) {
        (Some(a), Some(b)) if a != b => Err(format!("{name}: {a} vs {b}")),
        (None, b) => {
            *into = b;
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Merge rows sharing (language, model), keeping first-appearance order.
pub fn merge(rows: Vec<MetricReport>) -> CliResult<Vec<MetricReport>> {
    let mut merged: Vec<MetricReport> = Vec::new();
    for row in rows {
        let Some(existing) = merged
            .iter_mut()
            .find(|m| m.language == row.language && m.model == row.model)
        else {
            merged.push(row);
            continue;
        };
        let conflict = |detail: String| {
            CliError::msg(
                Exit::Data,
                format!(
                    "conflicting rows for language {:?}, model {:?}: {detail}",
                    row.language.as_deref().unwrap_or(""),
                    row.model.as_deref().unwrap_or("")
                ),
            )
        };
        for (into, from, name) in [
            (&mut existing.bleu, row.bleu, "bleu"),
            (&mut existing.rouge_l_p, row.rouge_l_p, "rouge_l_p"),
            (&mut existing.rouge_l_r, row.rouge_l_r, "rouge_l_r"),
            (&mut existing.rouge_l_f, row.rouge_l_f, "rouge_l_f"),
            (&mut existing.bert_p, row.bert_p, "bert_p"),
            (&mut existing.bert_r, row.bert_r, "bert_r"),
            (&mut existing.bert_f1, row.bert_f1, "bert_f1"),
            (&mut existing.human_eval, row.human_eval, "human_eval"),
        ] {
            merge_field(into, from, name).map_err(conflict)?;
        }
        existing.n_sentences = existing.n_sentences.max(row.n_sentences);
    }
    Ok(merged)
}

pub fn run(args: ReportArgs, config: &AppConfig) -> CliResult<()> {
    let mut rows = Vec::new();
    for path in &args.metrics {
        let text = std::fs::read_to_string(path)
            .exit(Exit::Io, format!("cannot read {}", path.display()))?;
        let parsed: OneOrMany = serde_json::from_str(&text)
            .exit(Exit::Io, format!("{} is not a metrics report", path.display()))?;
        match parsed {
            OneOrMany::One(r) => rows.push(r),
            OneOrMany::Many(rs) => rows.extend(rs),
        }
    }
    let merged = merge(rows)?;
    print!("{}", render::render(&merged, args.format.unwrap_or(config.report_format)));
    Ok(())
}
