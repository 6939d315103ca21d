//! Prompt assembly and translation driving.

mod template;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, Embedder, Generator};
use crate::index::IndexBundle;
use crate::retrieval::{retrieve, RetrievalConfig, RetrievalError, RetrievalResult};

pub use template::{
    Languages, PromptTemplate, TemplateError, DEFAULT_EXAMPLE_HEADER, DEFAULT_GLOSSARY_HEADER,
};

/// Recorded in every trace: no sampling parameters are sent to the model.
pub const SAMPLING_POLICY: &str = "provider-default";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Retrieval,
    Backend,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub retrieval_ms: f64,
    pub generation_ms: f64,
}

/// Full trace of one translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub query: String,
    pub results: Vec<RetrievalResult>,
    pub prompt: String,
    pub output: String,
    pub model_id: String,
    pub sampling: String,
    pub timings: Timings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<Failure>,
}

impl TranslationRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Retrieval(RetrievalError),
    #[error("generation failed: {0}")]
    Generation(#[from] BackendError),
    #[error("batch has no queries")]
    EmptyBatch,
}

/// A translation failure together with everything recorded before it.
#[derive(Debug, Error)]
#[error("{source}")]
pub struct TranslateError {
    pub source: PipelineError,
    pub record: Box<TranslationRecord>,
}

impl PipelineError {
    pub fn failure_kind(&self) -> FailureKind {
        match self {
            PipelineError::Generation(_) => FailureKind::Backend,
            PipelineError::Retrieval(RetrievalError::Backend(_)) => FailureKind::Backend,
            _ => FailureKind::Retrieval,
        }
    }
}

/// One batch input line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchItem {
    pub id: String,
    pub source: String,
}

/// Everything needed to translate: the loaded index, providers, and prompt
/// settings.
pub struct Translator<'a> {
    pub index: &'a IndexBundle,
    pub embedder: &'a dyn Embedder,
    pub generator: &'a dyn Generator,
    pub retrieval: RetrievalConfig,
    pub template: PromptTemplate,
    pub languages: Languages,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

impl Translator<'_> {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.template.validate()?;
        self.retrieval.validate().map_err(PipelineError::Retrieval)
    }

    pub fn assemble_prompt(&self, query: &str, results: &[RetrievalResult]) -> String {
        self.template.assemble(query, results, &self.languages)
    }

    /// Retrieve, assemble, generate. On failure the partially filled record
    /// (empty output, error set) travels inside the error.
    pub fn translate(&self, query: &str) -> Result<TranslationRecord, TranslateError> {
        let mut record = TranslationRecord {
            id: None,
            query: query.to_owned(),
            results: Vec::new(),
            prompt: String::new(),
            output: String::new(),
            model_id: self.generator.model_id(),
            sampling: SAMPLING_POLICY.to_owned(),
            timings: Timings::default(),
            error: None,
        };
        let fail = |mut record: TranslationRecord, source: PipelineError| {
            record.error = Some(Failure {
                kind: source.failure_kind(),
                message: source.to_string(),
            });
            TranslateError {
                source,
                record: Box::new(record),
            }
        };

        if let Err(e) = self.validate() {
            return Err(fail(record, e));
        }
        let started = Instant::now();
        let results = retrieve(query, self.index, self.embedder, &self.retrieval);
        record.timings.retrieval_ms = ms(started);
        record.results = match results {
            Ok(r) => r,
            Err(e) => return Err(fail(record, PipelineError::Retrieval(e))),
        };
        record.prompt = self.assemble_prompt(query, &record.results);

        let started = Instant::now();
        let generated = self.generator.generate(&record.prompt);
        record.timings.generation_ms = ms(started);
        match generated {
            Ok(g) => {
                record.output = g.text;
                record.model_id = g.model_id;
                Ok(record)
            }
            Err(e) => Err(fail(record, PipelineError::Generation(e))),
        }
    }

    /// Translate every item, up to `parallelism` at a time. Output order is
    /// input order; failed items carry `error` and an empty output.
    pub fn batch_translate(
        &self,
        items: &[BatchItem],
        parallelism: usize,
    ) -> Result<Vec<TranslationRecord>, PipelineError> {
        if items.is_empty() {
            return Err(PipelineError::EmptyBatch);
        }
        self.validate()?;
        let run = |item: &BatchItem| {
            let mut record = self.translate(&item.source).unwrap_or_else(|e| *e.record);
            record.id = Some(item.id.clone());
            record
        };
        let workers = parallelism.clamp(1, items.len());
        if workers == 1 {
            return Ok(items.iter().map(run).collect());
        }
        let slots: Mutex<Vec<Option<TranslationRecord>>> = Mutex::new(vec![None; items.len()]);
        let next = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(item) = items.get(i) else { break };
                    let record = run(item);
                    slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(record);
                });
            }
        });
        Ok(slots
            .into_inner()
            .unwrap_or_else(|e| e.into_inner())
            .into_iter()
            .map(|r| r.expect("every slot filled"))
            .collect())
    }
}
