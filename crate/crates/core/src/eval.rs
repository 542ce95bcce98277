//! Denotation accuracy.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::typeinfer::parse_number;

/// Trimmed, whitespace-collapsed, case-folded; numbers lose their
/// thousands separators.
pub fn normalize_item(s: &str) -> String {
    let collapsed = s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    if collapsed.contains(',') && parse_number(&collapsed).is_some() {
        collapsed.replace(',', "")
    } else {
        collapsed
    }
}

fn split_prediction(pred: &str) -> Vec<String> {
    // A grouped number such as "1,574,013" never contains ", ", so the split
    // leaves it whole.
    pred.split(", ").map(normalize_item).collect()
}

/// True iff the normalized multiset of predicted items equals the gold one.
pub fn denotation_match<S: AsRef<str>>(pred: &str, gold: &[S]) -> bool {
    let mut p = split_prediction(pred);
    let mut g: Vec<String> = gold.iter().map(|s| normalize_item(s.as_ref())).collect();
    p.sort();
    g.sort();
    p == g
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("{pred} predictions for {gold} gold records")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("prediction id {0:?} has no gold record")]
    IdMismatch(String),
    #[error("gold line {line}: {message}")]
    Gold { line: usize, message: String },
    #[error("prediction line {line}: {message}")]
    Pred { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SkillScore {
    pub matched: usize,
    pub total: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub matched: usize,
    pub total: usize,
    pub accuracy: f64,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub per_skill: BTreeMap<String, SkillScore>,
}

#[derive(Deserialize)]
struct GoldRecord {
    #[serde(default)]
    id: Option<serde_json::Value>,
    #[serde(default)]
    answers: Option<Vec<String>>,
    #[serde(default)]
    target: Option<String>,
    #[serde(default)]
    skill: Option<String>,
}

struct Gold {
    id: String,
    answers: Vec<String>,
    skill: Option<String>,
}

#[derive(Deserialize)]
struct PredRecord {
    id: serde_json::Value,
    prediction: String,
}

fn id_string(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn read_gold<R: BufRead>(gold: R) -> Result<Vec<Gold>, ScoreError> {
    let mut out = Vec::new();
    for (i, line) in gold.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| ScoreError::Gold { line: i + 1, message };
        let rec: GoldRecord = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let answers = match (rec.answers, rec.target) {
            (Some(a), _) => a,
            (None, Some(t)) => t.split(", ").map(str::to_string).collect(),
            (None, None) => return Err(err("record has neither answers nor target".into())),
        };
        let id = rec.id.as_ref().map(id_string).unwrap_or_else(|| out.len().to_string());
        out.push(Gold { id, answers, skill: rec.skill });
    }
    Ok(out)
}

/// Predictions as `(id, text)`. Plain lines get their 0-based index as id.
fn read_predictions<R: BufRead>(pred: R) -> Result<(Vec<(String, String)>, bool), ScoreError> {
    let lines: Vec<String> = pred.lines().collect::<Result<_, _>>()?;
    let keyed = lines
        .iter()
        .find(|l| !l.trim().is_empty())
        .is_some_and(|l| serde_json::from_str::<PredRecord>(l).is_ok());
    if !keyed {
        let mut lines = lines;
        while lines.last().is_some_and(|l| l.is_empty()) {
            lines.pop();
        }
        return Ok((lines.into_iter().enumerate().map(|(i, l)| (i.to_string(), l)).collect(), false));
    }
    let mut out = Vec::new();
    for (i, l) in lines.iter().enumerate() {
        if l.trim().is_empty() {
            continue;
        }
        let rec: PredRecord =
            serde_json::from_str(l).map_err(|e| ScoreError::Pred { line: i + 1, message: e.to_string() })?;
        out.push((id_string(&rec.id), rec.prediction));
    }
    Ok((out, true))
}

fn ratio(matched: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        matched as f64 / total as f64
    }
}

/// Scores predictions against gold JSONL records carrying `answers` (or a
/// rendered `target`), an optional `id` and an optional `skill`.
/// Plain-text predictions align by line; JSONL predictions align by id.
pub fn score<P: BufRead, G: BufRead>(pred: P, gold: G) -> Result<ScoreReport, ScoreError> {
    let gold = read_gold(gold)?;
    let (preds, keyed) = read_predictions(pred)?;
    if preds.len() != gold.len() {
        return Err(ScoreError::LengthMismatch { pred: preds.len(), gold: gold.len() });
    }
    let by_id: BTreeMap<&str, &Gold> = gold.iter().map(|g| (g.id.as_str(), g)).collect();
    let mut report = ScoreReport::default();
    for (i, (id, text)) in preds.iter().enumerate() {
        let g = if keyed {
            *by_id.get(id.as_str()).ok_or_else(|| ScoreError::IdMismatch(id.clone()))?
        } else {
            &gold[i]
        };
        let hit = denotation_match(text, &g.answers);
        report.total += 1;
        report.matched += hit as usize;
        if let Some(skill) = &g.skill {
            let s = report.per_skill.entry(skill.clone()).or_default();
            s.total += 1;
            s.matched += hit as usize;
        }
    }
    report.accuracy = ratio(report.matched, report.total);
    for s in report.per_skill.values_mut() {
        s.accuracy = ratio(s.matched, s.total);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_rules() {
        assert!(denotation_match("alpha, gamma", &["Alpha", "Gamma"]));
        assert!(denotation_match("gamma, alpha", &["Alpha", "Gamma"]));
        assert!(denotation_match("1,574,013", &["1574013"]));
        assert!(denotation_match("  Sky   OMC Sports, ESPN", &["Sky OMC Sports", "ESPN"]));
        assert!(!denotation_match("Alpha", &["Alpha", "Gamma"]));
        assert!(!denotation_match("Alpha, Alpha", &["Alpha"]));
        assert!(denotation_match("Alpha, Alpha", &["Alpha", "alpha"]));
    }

    #[test]
    fn plain_and_keyed_files() {
        let gold = "{\"answers\":[\"a\"],\"skill\":\"counting\"}\n{\"target\":\"b, c\"}\n";
        let r = score("a\nc, b\n".as_bytes(), gold.as_bytes()).unwrap();
        assert_eq!((r.matched, r.total, r.accuracy), (2, 2, 1.0));
        assert_eq!(r.per_skill["counting"].total, 1);
        let r = score("a\nx\n".as_bytes(), gold.as_bytes()).unwrap();
        assert_eq!(r.accuracy, 0.5);

        let gold = "{\"id\":\"q1\",\"answers\":[\"a\"]}\n{\"id\":\"q2\",\"answers\":[\"b\"]}\n";
        let pred = "{\"id\":\"q2\",\"prediction\":\"b\"}\n{\"id\":\"q1\",\"prediction\":\"a\"}\n";
        assert_eq!(score(pred.as_bytes(), gold.as_bytes()).unwrap().accuracy, 1.0);
        let pred = "{\"id\":\"q3\",\"prediction\":\"b\"}\n{\"id\":\"q1\",\"prediction\":\"a\"}\n";
        assert!(matches!(score(pred.as_bytes(), gold.as_bytes()), Err(ScoreError::IdMismatch(id)) if id == "q3"));
        assert!(matches!(score("a\n".as_bytes(), gold.as_bytes()), Err(ScoreError::LengthMismatch { pred: 1, gold: 2 })));
    }
}
