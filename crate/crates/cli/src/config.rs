//! `lexrag.json`: one JSON object, every key optional, unknown keys rejected.
//!
//! ```json
//! {
//!   "backend": { "provider": "http", "chat_model_id": "gpt-4o" },
//!   "retrieval": { "k_vector": 5, "k_total": 8, "policy": "strict_fallback" },
//!   "template": "prompt.json",
//!   "tokenization": "whitespace",
//!   "index_dir": "index",
//!   "report_format": "markdown",
//!   "languages": { "source": "English", "target": "Cherokee" },
//!   "batch_size": 32,
//!   "parallelism": 1
//! }
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use lexrag_core::backends::BackendConfig;
use lexrag_core::metrics::TokenizationPolicy;
use lexrag_core::pipeline::{Languages, PromptTemplate};
use lexrag_core::retrieval::RetrievalConfig;
use serde::Deserialize;

use crate::exit::{CliError, CliResult, Exit, ExitContext};

pub const DEFAULT_CONFIG_PATH: &str = "lexrag.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    #[default]
    Markdown,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AppConfig {
    pub backend: BackendConfig,
    pub retrieval: RetrievalConfig,
    pub template: Option<PathBuf>,
    pub tokenization: TokenizationPolicy,
    pub index_dir: Option<PathBuf>,
    pub report_format: ReportFormat,
    pub languages: Languages,
    pub batch_size: usize,
    pub parallelism: usize,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            backend: BackendConfig::default(),
            retrieval: RetrievalConfig::default(),
            template: None,
            tokenization: TokenizationPolicy::default(),
            index_dir: None,
            report_format: ReportFormat::default(),
            languages: Languages::default(),
            batch_size: 32,
            parallelism: 1,
        }
    }
}

impl AppConfig {
    /// Load `explicit`, or `./lexrag.json` when present. With neither, the
    /// defaults apply, which means offline mock backends.
    pub fn load(explicit: Option<&Path>) -> CliResult<Self> {
        let path = match explicit {
            Some(p) => p.to_owned(),
            None => {
                let p = PathBuf::from(DEFAULT_CONFIG_PATH);
                if !p.exists() {
                    log::warn!("no {DEFAULT_CONFIG_PATH} found; using defaults (mock backends)");
                    return Ok(Self::default());
                }
                p
            }
        };
        let text = std::fs::read_to_string(&path)
            .exit(Exit::Io, format!("cannot read config {}", path.display()))?;
        let mut config = Self::parse(&text)
            .exit(Exit::Io, format!("invalid config {}", path.display()))?;
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn parse(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.template, &mut self.index_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.backend.validate()?;
        self.retrieval.validate()?;
        if self.batch_size == 0 {
            return Err(CliError::msg(Exit::Data, "batch_size must be at least 1"));
        }
        if self.parallelism == 0 {
            return Err(CliError::msg(Exit::Data, "parallelism must be at least 1"));
        }
        if let Some(t) = &self.template {
            if !t.is_file() {
                return Err(CliError::msg(
                    Exit::Io,
                    format!("template {} does not exist", t.display()),
                ));
            }
        }
        Ok(())
    }

    pub fn prompt_template(&self) -> CliResult<PromptTemplate> {
        match &self.template {
            Some(path) => Ok(PromptTemplate::load(path)?),
            None => Ok(PromptTemplate::default()),
        }
    }

    /// The command-line value, else the configured one, else a usage error.
    pub fn index_dir(&self, flag: Option<PathBuf>, what: &str) -> CliResult<PathBuf> {
        flag.or_else(|| self.index_dir.clone()).ok_or_else(|| {
            CliError::msg(Exit::Usage, format!("{what} is required (or set index_dir in the config)"))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        let c = AppConfig::parse("{}").unwrap();
        assert_eq!(c.retrieval, RetrievalConfig::default());
        assert_eq!(c.report_format, ReportFormat::Markdown);
        assert_eq!(c.batch_size, 32);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(AppConfig::parse(r#"{"retreival": {}}"#).is_err());
        assert!(AppConfig::parse(r#"{"retrieval": {"k_vectr": 3}}"#).is_err());
    }

    #[test]
    fn relative_paths_follow_config_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("p.json"), "{}").unwrap();
        let cfg = dir.path().join("lexrag.json");
        std::fs::write(&cfg, r#"{"template": "p.json", "index_dir": "idx"}"#).unwrap();
        let c = AppConfig::load(Some(&cfg)).unwrap();
        assert_eq!(c.index_dir.unwrap(), dir.path().join("idx"));
        assert_eq!(c.template.unwrap(), dir.path().join("p.json"));
    }

    #[test]
    fn missing_template_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("lexrag.json");
        std::fs::write(&cfg, r#"{"template": "nope.json"}"#).unwrap();
        assert_eq!(AppConfig::load(Some(&cfg)).unwrap_err().exit, Exit::Io);
    }

    #[test]
    fn invalid_values_are_data_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("lexrag.json");
        std::fs::write(&cfg, r#"{"retrieval": {"k_vector": 9, "k_total": 3}}"#).unwrap();
        assert_eq!(AppConfig::load(Some(&cfg)).unwrap_err().exit, Exit::Data);
    }
}
