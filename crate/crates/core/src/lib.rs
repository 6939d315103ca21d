//! Dictionary-grounded retrieval-augmented translation for low-resource
//! languages.
//!
//! The crate is organised the way a translation request flows:
//!
//! * [`corpus`] loads bilingual dictionaries and parallel sentences and turns
//!   them into [`corpus::Document`]s.
//! * [`index`] builds the exact keyword index and the unit-vector store, and
//!   persists both to an index directory.
//! * [`backends`] defines the embedding / generation provider traits, with an
//!   OpenAI-compatible HTTP client and deterministic offline mocks.
//! * [`retrieval`] runs keyword lookup first and falls back to cosine top-K.
//! * [`pipeline`] renders the augmented prompt and drives generation.
//! * [`metrics`] scores translations (BLEU, ROUGE-L, BERTScore, normalized
//!   human ratings).

pub mod backends;
pub mod corpus;
pub mod index;
pub mod metrics;
pub mod pipeline;
pub mod retrieval;

pub use backends::{BackendError, Embedder, GenerationResult, Generator};
pub use corpus::{DictionaryEntry, DocId, DocKind, Document, ParallelExample};
pub use index::{IndexBundle, KeywordIndex, VectorIndex};
pub use retrieval::{Provenance, RetrievalConfig, RetrievalPolicy, RetrievalResult};
