use std::collections::BTreeMap;

use serde::Deserialize;
use tabsynth::fixtures::t_fix;
use tabsynth::serialize::{flatten_table, render_answer, render_model_input};
use tabsynth::Table;

#[derive(Deserialize)]
pub struct Golden {
    pub case: String,
    pub flat: String,
    pub input: String,
    pub target: String,
}

fn table(id: &str, header: &[&str], rows: &[&[&str]]) -> Table {
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect();
    Table::from_typed(id, &header, &[], &rows).unwrap()
}

/// Case name → (question, table, answers).
pub fn cases() -> BTreeMap<&'static str, (&'static str, Table, Vec<&'static str>)> {
    let mut m = BTreeMap::new();
    m.insert("minimal", ("Q?", table("g1", &["a", "b"], &[&["x", "y"]]), vec!["x"]));
    m.insert(
        "fixture",
        (
            "What was the Company when the Country was United States and the Profit was greater than 4?",
            t_fix(),
            vec!["Alpha", "Gamma"],
        ),
    );
    m.insert(
        "whitespace",
        ("  Which   b?  ", table("g3", &["a", " b "], &[&["x\n y", "p|q"], &["\tz", "w  v"]]), vec!["x y"]),
    );
    m.insert(
        "multi_answer",
        (
            "What was the Network when the Season was later than 2000?",
            table("g4", &["Season", "Network", "Commentator"], &[&["2001", "Sky OMC Sports", "A. Gray"], &["2002", "ESPN", "B. Long"]]),
            vec!["Sky OMC Sports", "ESPN"],
        ),
    );
    m.insert(
        "empty_cell",
        ("How many?", table("g5", &["Name", "Städte", "Pop"], &[&["Ünye", "", "1,200"], &["Oslo", "n/a", "709,000"]]), vec!["2"]),
    );
    m
}

pub fn load(path: &str) -> Vec<Golden> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Names of cases whose rendering differs from the pinned bytes.
pub fn mismatches(path: &str) -> Vec<String> {
    let cases = cases();
    let golden = load(path);
    let mut bad = Vec::new();
    if golden.len() != cases.len() {
        bad.push(format!("{} golden records for {} cases", golden.len(), cases.len()));
    }
    for g in &golden {
        let Some((q, t, answers)) = cases.get(g.case.as_str()) else {
            bad.push(format!("unknown case {}", g.case));
            continue;
        };
        if flatten_table(t) != g.flat
            || render_model_input(q, t).unwrap() != g.input
            || render_answer(answers).unwrap() != g.target
        {
            bad.push(g.case.clone());
        }
    }
    bad
}
