use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DocKind;
use crate::retrieval::RetrievalResult;

pub const DEFAULT_GLOSSARY_HEADER: &str = "Glossary:";
pub const DEFAULT_EXAMPLE_HEADER: &str = "Examples:";

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("{field}: unknown placeholder {{{name}}}")]
    UnknownPlaceholder { field: &'static str, name: String },
    #[error("{field}: unterminated placeholder")]
    Unterminated { field: &'static str },
    #[error("{field} must not be empty")]
    Empty { field: &'static str },
    #[error("cannot read template {path}: {message}")]
    Load { path: String, message: String },
}

/// Source and target language names shown in the prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Languages {
    pub source: String,
    pub target: String,
}

impl Default for Languages {
    fn default() -> Self {
        Self {
            source: "English".into(),
            target: "Cherokee".into(),
        }
    }
}

/// Prompt layout. Sections are emitted in a fixed order separated by blank
/// lines: preamble, glossary, examples, directive, query. A section with no
/// lines is left out together with its header.
///
/// Placeholders: `{source_lang}` and `{target_lang}` in the preamble and
/// directive; `{headword}`, `{target}`, `{definition}`, `{render_text}` in
/// glossary lines; `{source}`, `{target}`, `{render_text}` in example lines.
/// `{{` and `}}` produce literal braces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PromptTemplate {
    pub preamble: String,
    pub glossary_header: String,
    pub example_header: String,
    pub glossary_line_format: String,
    pub example_line_format: String,
    pub directive: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            preamble: "You are an expert translator from {source_lang} to {target_lang}. \
                       Use the reference material below where it applies."
                .into(),
            glossary_header: DEFAULT_GLOSSARY_HEADER.into(),
            example_header: DEFAULT_EXAMPLE_HEADER.into(),
            glossary_line_format: "{headword} → {target}".into(),
            example_line_format: "{source} ⇒ {target}".into(),
            directive: "Translate the following sentence into {target_lang}. \
                        Output only the translation."
                .into(),
        }
    }
}

const LANG_KEYS: &[&str] = &["source_lang", "target_lang"];
const GLOSSARY_KEYS: &[&str] = &["headword", "target", "definition", "render_text"];
const EXAMPLE_KEYS: &[&str] = &["source", "target", "render_text"];

/// Single-pass `{name}` substitution; substituted values are never rescanned.
fn fill(
    field: &'static str,
    format: &str,
    allowed: &[&str],
    value: impl Fn(&str) -> String,
) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(format.len());
    let mut rest = format;
    while let Some(pos) = rest.find(['{', '}']) {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        if tail.starts_with("{{") || tail.starts_with("}}") {
            out.push_str(&tail[..1]);
            rest = &tail[2..];
            continue;
        }
        if let Some(after) = tail.strip_prefix('}') {
            out.push('}');
            rest = after;
            continue;
        }
        let end = tail.find('}').ok_or(TemplateError::Unterminated { field })?;
        let name = &tail[1..end];
        if !allowed.contains(&name) {
            return Err(TemplateError::UnknownPlaceholder {
                field,
                name: name.to_owned(),
            });
        }
        out.push_str(&value(name));
        rest = &tail[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

impl PromptTemplate {
    pub fn load(path: &Path) -> Result<Self, TemplateError> {
        let load_err = |message: String| TemplateError::Load {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
        let template: Self = serde_json::from_str(&text).map_err(|e| load_err(e.to_string()))?;
        template.validate()?;
        Ok(template)
    }

    /// Check every placeholder so rendering cannot fail later.
    pub fn validate(&self) -> Result<(), TemplateError> {
        for (field, value) in [
            ("glossary_header", &self.glossary_header),
            ("example_header", &self.example_header),
            ("glossary_line_format", &self.glossary_line_format),
            ("example_line_format", &self.example_line_format),
            ("directive", &self.directive),
        ] {
            if value.trim().is_empty() {
                return Err(TemplateError::Empty { field });
            }
        }
        let blank = |_: &str| String::new();
        fill("preamble", &self.preamble, LANG_KEYS, blank)?;
        fill("directive", &self.directive, LANG_KEYS, blank)?;
        fill("glossary_header", &self.glossary_header, &[], blank)?;
        fill("example_header", &self.example_header, &[], blank)?;
        fill("glossary_line_format", &self.glossary_line_format, GLOSSARY_KEYS, blank)?;
        fill("example_line_format", &self.example_line_format, EXAMPLE_KEYS, blank)?;
        Ok(())
    }

    pub fn glossary_line(&self, result: &RetrievalResult) -> String {
        let doc = &result.doc;
        fill("glossary_line_format", &self.glossary_line_format, GLOSSARY_KEYS, |k| {
            match k {
                "headword" => doc.source_text.clone(),
                "target" => doc.target_text.clone(),
                "definition" => doc.metadata.get("definition").cloned().unwrap_or_default(),
                _ => doc.render_text.clone(),
            }
        })
        .expect("template validated")
    }

    pub fn example_line(&self, result: &RetrievalResult) -> String {
        let doc = &result.doc;
        fill("example_line_format", &self.example_line_format, EXAMPLE_KEYS, |k| match k {
            "source" => doc.source_text.clone(),
            "target" => doc.target_text.clone(),
            _ => doc.render_text.clone(),
        })
        .expect("template validated")
    }

    /// Render the full prompt. The template must have passed
    /// [`PromptTemplate::validate`].
    pub fn assemble(&self, query: &str, results: &[RetrievalResult], langs: &Languages) -> String {
        let lang = |k: &str| match k {
            "source_lang" => langs.source.clone(),
            _ => langs.target.clone(),
        };
        let mut sections: Vec<String> = Vec::new();
        let preamble = fill("preamble", &self.preamble, LANG_KEYS, lang).expect("template validated");
        if !preamble.trim().is_empty() {
            sections.push(preamble);
        }
        let glossary: Vec<String> = results
            .iter()
            .filter(|r| r.doc.kind == DocKind::Dictionary)
            .map(|r| self.glossary_line(r))
            .collect();
        if !glossary.is_empty() {
            sections.push(format!("{}\n{}", self.glossary_header, glossary.join("\n")));
        }
        let examples: Vec<String> = results
            .iter()
            .filter(|r| r.doc.kind == DocKind::Example)
            .map(|r| self.example_line(r))
            .collect();
        if !examples.is_empty() {
            sections.push(format!("{}\n{}", self.example_header, examples.join("\n")));
        }
        sections.push(fill("directive", &self.directive, LANG_KEYS, lang).expect("template validated"));
        sections.push(query.to_owned());
        let mut prompt = sections.join("\n\n");
        prompt.push('\n');
        prompt
    }
}
