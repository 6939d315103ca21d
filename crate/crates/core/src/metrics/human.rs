use std::collections::HashSet;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper end of each expert rating scale.
pub const MAX_SCORE: u32 = 5;
const DIMENSIONS: u32 = 3;

#[derive(Debug, Error)]
pub enum HumanEvalError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: {field} = {value} is outside 0..=5")]
    OutOfRange {
        line: u64,
        field: &'static str,
        value: i64,
    },
    #[error("line {line}: duplicate row for sentence {sentence_id}, model {model_id}")]
    Duplicate {
        line: u64,
        sentence_id: String,
        model_id: String,
    },
    #[error("no rows for model {0}")]
    NoRows(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanScoreRow {
    pub sentence_id: String,
    pub model_id: String,
    pub fluency: u32,
    pub grammaticality: u32,
    pub faithfulness: u32,
}

impl HumanScoreRow {
    pub fn new(sentence_id: &str, model_id: &str, scores: (u32, u32, u32)) -> Self {
        Self {
            sentence_id: sentence_id.to_owned(),
            model_id: model_id.to_owned(),
            fluency: scores.0,
            grammaticality: scores.1,
            faithfulness: scores.2,
        }
    }

    fn total(&self) -> u32 {
        self.fluency + self.grammaticality + self.faithfulness
    }
}

/// Expert ratings: per sentence and model, fluency, grammaticality and
/// faithfulness on a 0–5 scale.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HumanScoreSheet {
    rows: Vec<HumanScoreRow>,
}

#[derive(Deserialize)]
struct CsvRow {
    sentence_id: String,
    model_id: String,
    fluency: i64,
    grammaticality: i64,
    faithfulness: i64,
}

impl HumanScoreSheet {
    /// Validate ranges and `(sentence_id, model_id)` uniqueness. Errors carry
    /// the 1-based row position, counting the header as line 1.
    pub fn new(rows: Vec<HumanScoreRow>) -> Result<Self, HumanEvalError> {
        let mut seen = HashSet::new();
        for (i, row) in rows.iter().enumerate() {
            let line = i as u64 + 2;
            for (field, value) in [
                ("fluency", row.fluency),
                ("grammaticality", row.grammaticality),
                ("faithfulness", row.faithfulness),
            ] {
                if value > MAX_SCORE {
                    return Err(HumanEvalError::OutOfRange {
                        line,
                        field,
                        value: value.into(),
                    });
                }
            }
            if !seen.insert((row.sentence_id.as_str(), row.model_id.as_str())) {
                return Err(HumanEvalError::Duplicate {
                    line,
                    sentence_id: row.sentence_id.clone(),
                    model_id: row.model_id.clone(),
                });
            }
        }
        Ok(Self { rows })
    }

    /// Parse `sentence_id,model_id,fluency,grammaticality,faithfulness`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, HumanEvalError> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut rows = Vec::new();
        for record in csv.deserialize::<CsvRow>() {
            let raw = record.map_err(|e| HumanEvalError::Malformed {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = rows.len() as u64 + 2;
            let check = |field: &'static str, value: i64| {
                u32::try_from(value)
                    .ok()
                    .filter(|v| *v <= MAX_SCORE)
                    .ok_or(HumanEvalError::OutOfRange { line, field, value })
            };
            rows.push(HumanScoreRow {
                fluency: check("fluency", raw.fluency)?,
                grammaticality: check("grammaticality", raw.grammaticality)?,
                faithfulness: check("faithfulness", raw.faithfulness)?,
                sentence_id: raw.sentence_id,
                model_id: raw.model_id,
            });
        }
        Self::new(rows)
    }

    pub fn rows(&self) -> &[HumanScoreRow] {
        &self.rows
    }

    /// Model ids in order of first appearance.
    pub fn models(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.rows
            .iter()
            .map(|r| r.model_id.as_str())
            .filter(|m| seen.insert(*m))
            .collect()
    }

    /// The normalized score over every row regardless of model.
    pub fn pooled(&self) -> Result<f64, HumanEvalError> {
        normalize(self.rows.iter()).ok_or_else(|| HumanEvalError::NoRows("*".into()))
    }
}

fn normalize<'a>(rows: impl Iterator<Item = &'a HumanScoreRow>) -> Option<f64> {
    let (total, n) = rows.fold((0u64, 0u64), |(t, n), r| (t + u64::from(r.total()), n + 1));
    (n > 0).then(|| total as f64 / (n * u64::from(MAX_SCORE * DIMENSIONS)) as f64)
}

/// Mean over the model's sentences of (fluency + grammaticality +
/// faithfulness) / 15.
pub fn human_eval_normalize(sheet: &HumanScoreSheet, model_id: &str) -> Result<f64, HumanEvalError> {
    normalize(sheet.rows.iter().filter(|r| r.model_id == model_id))
        .ok_or_else(|| HumanEvalError::NoRows(model_id.to_owned()))
}
