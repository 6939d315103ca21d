use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use lexrag_core::metrics::{
    evaluate_set, human_eval_normalize, HumanScoreSheet, MetricReport, TokenizationPolicy,
};

use crate::config::{AppConfig, ReportFormat};
use crate::exit::{CliError, CliResult, Exit, ExitContext};
use crate::render;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Bleu,
    Rouge,
    Bertscore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Tokenize {
    Whitespace,
    Codepoint,
}

impl From<Tokenize> for TokenizationPolicy {
    fn from(t: Tokenize) -> Self {
        match t {
            Tokenize::Whitespace => TokenizationPolicy::Whitespace,
            Tokenize::Codepoint => TokenizationPolicy::Codepoint,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Hypotheses, one per line.
    #[arg(long)]
    pub hyp: PathBuf,
    /// References, aligned line by line with --hyp.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long, value_delimiter = ',', default_values = ["bleu", "rouge"])]
    pub metrics: Vec<Metric>,
    #[arg(long)]
    pub tokenize: Option<Tokenize>,
    #[arg(long)]
    pub format: Option<ReportFormat>,
    /// Language label for the report row.
    #[arg(long)]
    pub language: Option<String>,
    /// Model label for the report row.
    #[arg(long)]
    pub model: Option<String>,
}

fn read_lines(path: &Path) -> CliResult<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .exit(Exit::Io, format!("cannot read {}", path.display()))?;
    Ok(text.lines().map(str::to_owned).collect())
}

pub fn evaluate(args: EvaluateArgs, config: &AppConfig) -> CliResult<()> {
    let hyps = read_lines(&args.hyp)?;
    let refs = read_lines(&args.reference)?;
    if hyps.len() != refs.len() {
        return Err(CliError::msg(
            Exit::Data,
            format!(
                "{} has {} lines but {} has {}",
                args.hyp.display(),
                hyps.len(),
                args.reference.display(),
                refs.len()
            ),
        ));
    }
    let policy = args.tokenize.map_or(config.tokenization, Into::into);
    let embedder = if args.metrics.contains(&Metric::Bertscore) {
        Some(config.backend.build()?.0)
    } else {
        None
    };
    let mut report = evaluate_set(&hyps, &refs, policy, embedder.as_deref())?;
    if !args.metrics.contains(&Metric::Bleu) {
        report.bleu = None;
    }
    if !args.metrics.contains(&Metric::Rouge) {
        report.rouge_l_p = None;
        report.rouge_l_r = None;
        report.rouge_l_f = None;
    }
    report.language = args.language;
    report.model = args.model;
    print!("{}", render::render(&[report], args.format.unwrap_or(config.report_format)));
    Ok(())
}

#[derive(Debug, Args)]
pub struct HumanevalArgs {
    /// CSV: sentence_id,model_id,fluency,grammaticality,faithfulness
    #[arg(long)]
    pub scores: PathBuf,
    /// One score per model instead of a single pooled score.
    #[arg(long)]
    pub per_model: bool,
    #[arg(long, conflicts_with = "json")]
    pub format: Option<ReportFormat>,
    /// Shorthand for --format json.
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub language: Option<String>,
}

pub fn humaneval_reports(sheet: &HumanScoreSheet, per_model: bool, language: Option<&str>) -> CliResult<Vec<MetricReport>> {
    let row = |model: Option<&str>, score: f64, n: usize| MetricReport {
        language: language.map(str::to_owned),
        model: model.map(str::to_owned),
        human_eval: Some(score),
        n_sentences: n,
        ..Default::default()
    };
    if !per_model {
        return Ok(vec![row(None, sheet.pooled()?, sheet.rows().len())]);
    }
    sheet
        .models()
        .into_iter()
        .map(|m| {
            let n = sheet.rows().iter().filter(|r| r.model_id == m).count();
            Ok(row(Some(m), human_eval_normalize(sheet, m)?, n))
        })
        .collect()
}

pub fn humaneval(args: HumanevalArgs, config: &AppConfig) -> CliResult<()> {
    let file = std::fs::File::open(&args.scores)
        .exit(Exit::Io, format!("cannot open {}", args.scores.display()))?;
    let sheet = HumanScoreSheet::from_csv(file)
        .map_err(CliError::from)
        .map_err(|e| CliError::new(e.exit, e.error.context(args.scores.display().to_string())))?;
    let reports = humaneval_reports(&sheet, args.per_model, args.language.as_deref())?;
    let format = if args.json {
        ReportFormat::Json
    } else {
        args.format.unwrap_or(config.report_format)
    };
    print!("{}", render::render(&reports, format));
    Ok(())
}
