//! Flat text rendering of tables, questions and answers for seq2seq models.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::Table;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SerializeError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("answer list is empty")]
    EmptyAnswers,
}

/// Whitespace collapsed to single spaces, reserved `|` replaced by `/`.
/// Returns the number of replacements made.
fn clean_cell(raw: &str, lowercase: bool, out: &mut String) -> usize {
    let mut replaced = 0;
    for (i, word) in raw.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        for ch in word.chars() {
            if ch == '|' {
                out.push('/');
                replaced += 1;
            } else if lowercase {
                out.extend(ch.to_lowercase());
            } else {
                out.push(ch);
            }
        }
    }
    replaced
}

/// Flattened table plus the number of `|` characters replaced in cells.
pub fn flatten_table_counted(t: &Table) -> (String, usize) {
    flatten(t, false)
}

fn flatten(t: &Table, lowercase: bool) -> (String, usize) {
    let mut out = String::from("[HEAD] ");
    let mut replaced = 0;
    for (i, c) in t.columns().iter().enumerate() {
        if i > 0 {
            out.push_str(" | ");
        }
        replaced += clean_cell(&c.name, lowercase, &mut out);
    }
    for row in t.rows() {
        out.push_str(" [ROW] ");
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                out.push_str(" | ");
            }
            replaced += clean_cell(&cell.raw, lowercase, &mut out);
        }
    }
    (out, replaced)
}

/// `[HEAD] h1 | h2 [ROW] c11 | c12 [ROW] ...`
pub fn flatten_table(t: &Table) -> String {
    flatten_table_counted(t).0
}

pub fn render_model_input(question: &str, t: &Table) -> Result<String, SerializeError> {
    let q = question.trim();
    if q.is_empty() {
        return Err(SerializeError::EmptyQuestion);
    }
    Ok(format!("{q} {}", flatten_table(t)))
}

pub fn render_answer<S: AsRef<str>>(answers: &[S]) -> Result<String, SerializeError> {
    if answers.is_empty() {
        return Err(SerializeError::EmptyAnswers);
    }
    Ok(answers.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(", "))
}

/// Like [`render_model_input`] with question and cells lower-cased; the
/// region tokens keep their case.
pub fn render_model_input_lowercase(question: &str, t: &Table) -> Result<String, SerializeError> {
    let q = question.trim();
    if q.is_empty() {
        return Err(SerializeError::EmptyQuestion);
    }
    Ok(format!("{} {}", q.to_lowercase(), flatten(t, true).0))
}

/// One training pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seq2SeqRecord {
    pub input: String,
    pub target: String,
}

pub fn seq2seq_record<S: AsRef<str>>(
    question: &str,
    t: &Table,
    answers: &[S],
    lowercase: bool,
) -> Result<Seq2SeqRecord, SerializeError> {
    let target = render_answer(answers)?;
    if lowercase {
        Ok(Seq2SeqRecord { input: render_model_input_lowercase(question, t)?, target: target.to_lowercase() })
    } else {
        Ok(Seq2SeqRecord { input: render_model_input(question, t)?, target })
    }
}

/// Splits a flattened table back into its header and rows.
pub fn parse_flat_table(s: &str) -> Option<(Vec<String>, Vec<Vec<String>>)> {
    let body = s.strip_prefix("[HEAD]")?;
    let mut parts = body.split("[ROW]");
    let split = |p: &str| p.split('|').map(|c| c.trim().to_string()).collect::<Vec<_>>();
    let header = split(parts.next()?);
    Some((header, parts.map(split).collect()))
}
