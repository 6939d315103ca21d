use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{unit_normalize, BackendError, Embedder, GenerationResult, Generator, Result};

/// Output of [`MockGenerator`] when the prompt has no glossary lines.
pub const NO_ENTRIES: &str = "⟨no-entries⟩";

/// Deterministic embedder: each text maps to a unit vector drawn from a
/// ChaCha8 stream seeded with the SHA-256 digest of the text.
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    dim: usize,
}

impl MockEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "mock embedder needs a positive dimension");
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embed_one(&self, text: &str) -> Vec<f32> {
        let seed: [u8; 32] = Sha256::digest(text.as_bytes()).into();
        let mut rng = ChaCha8Rng::from_seed(seed);
        loop {
            let raw: Vec<f32> = (0..self.dim).map(|_| rng.gen_range(-1.0f32..=1.0)).collect();
            if let Some(v) = unit_normalize(&raw) {
                return v;
            }
        }
    }
}

impl Embedder for MockEmbedder {
    fn embedder_id(&self) -> String {
        format!("mock-sha256-d{}", self.dim)
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        if texts.is_empty() {
            return Err(BackendError::EmptyInput);
        }
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// Deterministic generator that echoes the glossary targets found in the
/// prompt, space-separated, or [`NO_ENTRIES`] when there are none.
///
/// The glossary section is the block of lines following a line equal to
/// `glossary_header`, up to the next blank line. Each line is expected in the
/// `headword → target` form.
#[derive(Debug, Clone)]
pub struct MockGenerator {
    pub glossary_header: String,
    pub separator: String,
}

impl Default for MockGenerator {
    fn default() -> Self {
        Self {
            glossary_header: crate::pipeline::DEFAULT_GLOSSARY_HEADER.to_owned(),
            separator: " → ".to_owned(),
        }
    }
}

impl MockGenerator {
    pub fn glossary_targets<'p>(&self, prompt: &'p str) -> Vec<&'p str> {
        let mut lines = prompt.lines();
        let mut targets = Vec::new();
        while let Some(line) = lines.next() {
            if line.trim_end() != self.glossary_header {
                continue;
            }
            for entry in lines.by_ref() {
                if entry.trim().is_empty() {
                    break;
                }
                if let Some((_, target)) = entry.split_once(self.separator.as_str()) {
                    targets.push(target.trim());
                }
            }
        }
        targets
    }
}

impl Generator for MockGenerator {
    fn model_id(&self) -> String {
        "mock-glossary-echo".into()
    }

    fn generate(&self, prompt: &str) -> Result<GenerationResult> {
        if prompt.is_empty() {
            return Err(BackendError::EmptyInput);
        }
        let targets = self.glossary_targets(prompt);
        let text = if targets.is_empty() {
            NO_ENTRIES.to_owned()
        } else {
            targets.join(" ")
        };
        Ok(GenerationResult {
            text,
            model_id: self.model_id(),
            prompt_tokens: None,
            completion_tokens: None,
            latency_ms: 0,
        })
    }
}

/// Wraps a provider and counts calls made through it.
#[derive(Debug, Default)]
pub struct CallCounter<T> {
    inner: T,
    calls: AtomicUsize,
    items: AtomicUsize,
}

impl<T> CallCounter<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
            items: AtomicUsize::new(0),
        }
    }

    /// Number of backend requests.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Number of texts (or prompts) sent across all requests.
    pub fn items(&self) -> usize {
        self.items.load(Ordering::SeqCst)
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }
}

impl<T: Embedder> Embedder for CallCounter<T> {
    fn embedder_id(&self) -> String {
        self.inner.embedder_id()
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.items.fetch_add(texts.len(), Ordering::SeqCst);
        self.inner.embed_texts(texts)
    }

    fn embed_tokens(&self, tokens: &[String]) -> Result<Vec<Vec<f32>>> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.items.fetch_add(tokens.len(), Ordering::SeqCst);
        self.inner.embed_tokens(tokens)
    }
}

impl<T: Generator> Generator for CallCounter<T> {
    fn model_id(&self) -> String {
        self.inner.model_id()
    }

    fn generate(&self, prompt: &str) -> Result<GenerationResult> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.items.fetch_add(1, Ordering::SeqCst);
        self.inner.generate(prompt)
    }
}
