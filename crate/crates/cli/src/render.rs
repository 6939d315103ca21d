//! Output formatting for metric rows.

use lexrag_core::metrics::MetricReport;

use crate::config::ReportFormat;

type Column = (&'static str, fn(&MetricReport) -> Option<f64>);

/// Display columns, in table order. ROUGE-L shows the F-measure.
const COLUMNS: [Column; 6] = [
    ("BLEU", |r| r.bleu),
    ("ROUGE-L", |r| r.rouge_l_f),
    ("BERTScore P", |r| r.bert_p),
    ("BERTScore R", |r| r.bert_r),
    ("BERTScore F1", |r| r.bert_f1),
    ("Human Evaluation", |r| r.human_eval),
];

/// Three decimals, halves rounded away from zero. The nudge absorbs binary
/// representation error so that e.g. 0.0665 displays as 0.067.
pub fn round3(x: f64) -> String {
    let scaled = (x.abs() * 1000.0 + 0.5 + 1e-9).floor();
    let v = if scaled == 0.0 { 0.0 } else { scaled.copysign(x) / 1000.0 };
    format!("{v:.3}")
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), round3)
}

pub fn markdown(rows: &[MetricReport]) -> String {
    let mut out = String::from("| Language | Model |");
    for (title, _) in COLUMNS {
        out.push_str(&format!(" {title} |"));
    }
    out.push_str("\n|---|---|");
    out.push_str(&"---:|".repeat(COLUMNS.len()));
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "| {} | {} |",
            r.language.as_deref().unwrap_or(""),
            r.model.as_deref().unwrap_or("")
        ));
        for (_, get) in COLUMNS {
            out.push_str(&format!(" {} |", cell(get(r))));
        }
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Machine-readable: full precision, empty cells for missing metrics.
pub fn csv(rows: &[MetricReport]) -> String {
    let mut out = String::from("language,model,bleu,rouge_l_p,rouge_l_r,rouge_l_f,bert_p,bert_r,bert_f1,human_eval,n_sentences\n");
    for r in rows {
        let nums = [
            r.bleu, r.rouge_l_p, r.rouge_l_r, r.rouge_l_f, r.bert_p, r.bert_r, r.bert_f1, r.human_eval,
        ];
        let mut fields = vec![
            csv_field(r.language.as_deref().unwrap_or("")),
            csv_field(r.model.as_deref().unwrap_or("")),
        ];
        fields.extend(nums.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
        fields.push(r.n_sentences.to_string());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// A single report is emitted as an object, several as an array.
pub fn json(rows: &[MetricReport]) -> String {
    let text = match rows {
        [one] => serde_json::to_string_pretty(one),
        _ => serde_json::to_string_pretty(rows),
    };
    text.expect("reports serialize") + "\n"
}

pub fn render(rows: &[MetricReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => json(rows),
        ReportFormat::Csv => csv(rows),
        ReportFormat::Markdown => markdown(rows),
    }
}
