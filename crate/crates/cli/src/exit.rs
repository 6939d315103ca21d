//! Process exit codes and the error type that carries them.

use std::fmt;

use lexrag_core::backends::BackendError;
use lexrag_core::corpus::CorpusError;
use lexrag_core::index::IndexError;
use lexrag_core::metrics::{HumanEvalError, MetricError};
use lexrag_core::pipeline::{PipelineError, TemplateError};
use lexrag_core::retrieval::RetrievalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    /// I/O failure or unreadable / malformed input.
    Io = 1,
    /// A model provider failed after retries.
    Backend = 2,
    /// Bad command-line usage.
    Usage = 64,
    /// Well-formed input that violates a data contract.
    Data = 65,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub error: anyhow::Error,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn new(exit: Exit, error: impl Into<anyhow::Error>) -> Self {
        Self {
            exit,
            error: error.into(),
        }
    }

    pub fn msg(exit: Exit, message: impl fmt::Display) -> Self {
        Self::new(exit, anyhow::anyhow!("{message}"))
    }

    pub fn code(&self) -> i32 {
        self.exit as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

/// Attach an exit code and a leading message to any error.
pub trait ExitContext<T> {
    fn exit(self, exit: Exit, context: impl fmt::Display) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> ExitContext<T> for Result<T, E> {
    fn exit(self, exit: Exit, context: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError::new(exit, e.into().context(context.to_string())))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(Exit::Io, e)
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        let exit = match e {
            BackendError::Config(_) => Exit::Data,
            _ => Exit::Backend,
        };
        CliError::new(exit, e)
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::new(Exit::Io, e)
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        let exit = match e {
            // Raised while embedding: the provider misbehaved.
            IndexError::Backend(_)
            | IndexError::DimensionMismatch { .. }
            | IndexError::ZeroVector { .. } => Exit::Backend,
            _ => Exit::Io,
        };
        CliError::new(exit, e)
    }
}

impl From<RetrievalError> for CliError {
    fn from(e: RetrievalError) -> Self {
        match e {
            RetrievalError::Backend(b) => b.into(),
            RetrievalError::Index(i) => i.into(),
            other => CliError::new(Exit::Data, other),
        }
    }
}

impl From<TemplateError> for CliError {
    fn from(e: TemplateError) -> Self {
        let exit = match e {
            TemplateError::Load { .. } => Exit::Io,
            _ => Exit::Data,
        };
        CliError::new(exit, e)
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Template(t) => t.into(),
            PipelineError::Retrieval(r) => r.into(),
            PipelineError::Generation(b) => b.into(),
            PipelineError::EmptyBatch => CliError::new(Exit::Data, e),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        let exit = match e {
            MetricError::Backend(_) | MetricError::ZeroVector => Exit::Backend,
            _ => Exit::Data,
        };
        CliError::new(exit, e)
    }
}

impl From<HumanEvalError> for CliError {
    fn from(e: HumanEvalError) -> Self {
        let exit = match e {
            HumanEvalError::Malformed { .. } => Exit::Io,
            _ => Exit::Data,
        };
        CliError::new(exit, e)
    }
}
