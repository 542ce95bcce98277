//! Question templates with typed slots, the tab-separated template file
//! format, and instantiation against a table.
//!
//! A template line is `SKILL<TAB>pattern[<TAB>constraints]`. Patterns use
//! `{col:i}`, `{val:i}`, `{CONDITION:i}`, `{OPERATOR}` and `{ORDINAL}`.
//! Constraints are a comma-separated list of `i:Type[|Type...]` (types
//! `Text`, `Number`, `Date`, `Any`), or `-` for none. Lines starting with
//! `#` are comments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::condition::{sample_condition, Condition, SamplePolicy};
use crate::oracle::{ordinal, select_all};
use crate::table::{DataType, Table};

const BUILTIN: &str = include_str!("../templates/builtin.tsv");

/// The seven reasoning skills.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkillKind {
    Conjunction,
    Quantifiers,
    TemporalComparison,
    DateDifference,
    Counting,
    NumericalOperation,
    NumericalComparison,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    Every,
    Only,
    Sum,
    Average,
}

impl Operator {
    pub fn word(&self) -> &'static str {
        match self {
            Operator::Every => "every",
            Operator::Only => "only",
            Operator::Sum => "sum",
            Operator::Average => "average",
        }
    }
}

/// Which slots a skill's templates must contain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub cols: BTreeSet<u8>,
    pub conditions: BTreeSet<u8>,
    pub values: BTreeSet<u8>,
    pub operator: bool,
    pub ordinal: bool,
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.cols.iter().map(|i| format!("col:{i}")).collect();
        parts.extend(self.values.iter().map(|i| format!("val:{i}")));
        parts.extend(self.conditions.iter().map(|i| format!("CONDITION:{i}")));
        if self.operator {
            parts.push("OPERATOR".into());
        }
        if self.ordinal {
            parts.push("ORDINAL".into());
        }
        write!(f, "{{{}}}", parts.join(", "))
    }
}

fn set(items: &[u8]) -> BTreeSet<u8> {
    items.iter().copied().collect()
}

impl SkillKind {
    pub const ALL: [SkillKind; 7] = [
        SkillKind::Conjunction,
        SkillKind::Quantifiers,
        SkillKind::TemporalComparison,
        SkillKind::DateDifference,
        SkillKind::Counting,
        SkillKind::NumericalOperation,
        SkillKind::NumericalComparison,
    ];

    pub fn slug(&self) -> &'static str {
        match self {
            SkillKind::Conjunction => "conjunction",
            SkillKind::Quantifiers => "quantifiers",
            SkillKind::TemporalComparison => "temporal_comparison",
            SkillKind::DateDifference => "date_difference",
            SkillKind::Counting => "counting",
            SkillKind::NumericalOperation => "numerical_operation",
            SkillKind::NumericalComparison => "numerical_comparison",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SkillKind::Conjunction => "Conjunction",
            SkillKind::Quantifiers => "Quantifiers",
            SkillKind::TemporalComparison => "TemporalComparison",
            SkillKind::DateDifference => "DateDifference",
            SkillKind::Counting => "Counting",
            SkillKind::NumericalOperation => "NumericalOperation",
            SkillKind::NumericalComparison => "NumericalComparison",
        }
    }

    /// Accepts labels, slugs and spaced names, case-insensitively
    /// (`Counting`, `temporal_comparison`, `Numerical Operation`).
    pub fn parse(s: &str) -> Option<SkillKind> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        let key = if key == "quantifier" { "quantifiers".to_string() } else { key };
        SkillKind::ALL.into_iter().find(|k| k.label().to_lowercase() == key)
    }

    pub fn signature(&self) -> Signature {
        let (cols, conditions, values, operator, ordinal): (&[u8], &[u8], &[u8], bool, bool) = match self {
            SkillKind::Conjunction => (&[1, 2, 3], &[2, 3], &[], false, false),
            SkillKind::Quantifiers => (&[1, 2, 3], &[2, 3], &[], true, false),
            SkillKind::TemporalComparison => (&[1, 2, 3], &[2], &[], false, true),
            SkillKind::DateDifference => (&[1, 2], &[], &[1, 2], false, false),
            SkillKind::Counting => (&[1, 2], &[2], &[], false, false),
            SkillKind::NumericalOperation => (&[1, 2], &[2], &[], true, false),
            SkillKind::NumericalComparison => (&[1, 2, 3], &[2], &[], false, true),
        };
        Signature { cols: set(cols), conditions: set(conditions), values: set(values), operator, ordinal }
    }

    /// Column-type requirements every template of the skill inherits.
    pub fn intrinsic_constraints(&self) -> Vec<(u8, TypeSet)> {
        match self {
            SkillKind::TemporalComparison => vec![(3, TypeSet::only(DataType::Date))],
            SkillKind::NumericalOperation => vec![(1, TypeSet::only(DataType::Number))],
            SkillKind::NumericalComparison => vec![(3, TypeSet::only(DataType::Number))],
            SkillKind::DateDifference => {
                let non_date = TypeSet::only(DataType::Text).with(DataType::Number);
                vec![(1, non_date), (2, non_date)]
            }
            _ => vec![],
        }
    }

    pub fn operators(&self) -> &'static [Operator] {
        match self {
            SkillKind::Quantifiers => &[Operator::Every, Operator::Only],
            SkillKind::NumericalOperation => &[Operator::Sum, Operator::Average],
            _ => &[],
        }
    }

    /// Counting may ask about every row; other skills need conditions that
    /// select a proper subset of the table.
    pub fn condition_policy(&self) -> SamplePolicy {
        match self {
            SkillKind::Counting => SamplePolicy::NONEMPTY,
            _ => SamplePolicy::PROPER,
        }
    }
}

impl fmt::Display for SkillKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A set of admissible column types.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct TypeSet(u8);

impl TypeSet {
    pub const ANY: TypeSet = TypeSet(0b111);

    fn bit(t: DataType) -> u8 {
        match t {
            DataType::Text => 1,
            DataType::Number => 2,
            DataType::Date => 4,
        }
    }

    pub fn only(t: DataType) -> Self {
        TypeSet(Self::bit(t))
    }

    pub fn with(self, t: DataType) -> Self {
        TypeSet(self.0 | Self::bit(t))
    }

    pub fn intersect(self, o: TypeSet) -> Self {
        TypeSet(self.0 & o.0)
    }

    pub fn contains(&self, t: DataType) -> bool {
        self.0 & Self::bit(t) != 0
    }

    fn parse(s: &str) -> Option<TypeSet> {
        let mut out = TypeSet(0);
        for part in s.split('|') {
            out.0 |= match part.trim().to_lowercase().as_str() {
                "text" => 1,
                "number" => 2,
                "date" => 4,
                "any" => 7,
                _ => return None,
            };
        }
        Some(out)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Slot {
    Col(u8),
    Val(u8),
    Condition(u8),
    Operator,
    Ordinal,
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Segment {
    Literal(String),
    Slot(Slot),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("line {line}: bad placeholder `{placeholder}`")]
    BadPlaceholder { line: usize, placeholder: String },
    #[error("line {line}: index {index} is used without a matching {{col:{index}}}")]
    DanglingIndex { line: usize, index: u8 },
    #[error("line {line}: unknown skill `{name}`")]
    UnknownSkill { line: usize, name: String },
    #[error("line {line}: {skill} templates need slots {expected}, found {found}")]
    SlotMismatch { line: usize, skill: SkillKind, expected: String, found: String },
    #[error("line {line}: bad constraint `{text}`")]
    BadConstraint { line: usize, text: String },
    #[error("line {line}: expected `SKILL<TAB>pattern[<TAB>constraints]`")]
    Malformed { line: usize },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Template {
    id: String,
    skill: SkillKind,
    pattern: String,
    segments: Vec<Segment>,
    constraints: BTreeMap<u8, TypeSet>,
}

fn parse_slot(body: &str) -> Option<Slot> {
    match body {
        "OPERATOR" => return Some(Slot::Operator),
        "ORDINAL" => return Some(Slot::Ordinal),
        _ => {}
    }
    let (kind, index) = body.split_once(':')?;
    if index.is_empty() || index.len() > 2 || !index.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let i: u8 = index.parse().ok()?;
    if i == 0 {
        return None;
    }
    match kind {
        "col" => Some(Slot::Col(i)),
        "val" => Some(Slot::Val(i)),
        "CONDITION" => Some(Slot::Condition(i)),
        _ => None,
    }
}

fn parse_pattern(pattern: &str, line: usize) -> Result<Vec<Segment>, TemplateError> {
    let mut segments = Vec::new();
    let mut literal = String::new();
    let mut rest = pattern;
    while let Some(pos) = rest.find(['{', '}']) {
        literal.push_str(&rest[..pos]);
        let bad = |p: &str| TemplateError::BadPlaceholder { line, placeholder: p.to_string() };
        if rest[pos..].starts_with('}') {
            return Err(bad("}"));
        }
        let close = rest[pos..].find('}').ok_or_else(|| bad(&rest[pos..]))? + pos;
        let body = &rest[pos + 1..close];
        let slot = parse_slot(body).ok_or_else(|| bad(&rest[pos..=close]))?;
        if !literal.is_empty() {
            segments.push(Segment::Literal(std::mem::take(&mut literal)));
        }
        segments.push(Segment::Slot(slot));
        rest = &rest[close + 1..];
    }
    literal.push_str(rest);
    if !literal.is_empty() {
        segments.push(Segment::Literal(literal));
    }
    Ok(segments)
}

impl Template {
    pub fn parse(skill: SkillKind, pattern: &str, constraints: &str, id: String, line: usize) -> Result<Template, TemplateError> {
        let segments = parse_pattern(pattern, line)?;
        let mut found = Signature {
            cols: BTreeSet::new(),
            conditions: BTreeSet::new(),
            values: BTreeSet::new(),
            operator: false,
            ordinal: false,
        };
        for s in &segments {
            match s {
                Segment::Slot(Slot::Col(i)) => {
                    found.cols.insert(*i);
                }
                Segment::Slot(Slot::Val(i)) => {
                    found.values.insert(*i);
                }
                Segment::Slot(Slot::Condition(i)) => {
                    found.conditions.insert(*i);
                }
                Segment::Slot(Slot::Operator) => found.operator = true,
                Segment::Slot(Slot::Ordinal) => found.ordinal = true,
                Segment::Literal(_) => {}
            }
        }
        if let Some(&index) = found.values.iter().chain(&found.conditions).find(|i| !found.cols.contains(i)) {
            return Err(TemplateError::DanglingIndex { line, index });
        }
        let expected = skill.signature();
        if found != expected {
            return Err(TemplateError::SlotMismatch {
                line,
                skill,
                expected: expected.to_string(),
                found: found.to_string(),
            });
        }

        let mut map: BTreeMap<u8, TypeSet> = BTreeMap::new();
        for (i, t) in skill.intrinsic_constraints() {
            map.insert(i, t);
        }
        let constraints = constraints.trim();
        if !constraints.is_empty() && constraints != "-" {
            for item in constraints.split(',') {
                let bad = || TemplateError::BadConstraint { line, text: item.trim().to_string() };
                let (idx, types) = item.split_once(':').ok_or_else(bad)?;
                let idx: u8 = idx.trim().parse().map_err(|_| bad())?;
                if !found.cols.contains(&idx) {
                    return Err(TemplateError::DanglingIndex { line, index: idx });
                }
                let types = TypeSet::parse(types).ok_or_else(bad)?;
                let merged = map.get(&idx).map_or(types, |t| t.intersect(types));
                map.insert(idx, merged);
            }
        }
        Ok(Template { id, skill, pattern: pattern.to_string(), segments, constraints: map })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn skill(&self) -> SkillKind {
        self.skill
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    pub fn allowed(&self, slot: u8) -> TypeSet {
        self.constraints.get(&slot).copied().unwrap_or(TypeSet::ANY)
    }

    fn col_slots(&self) -> Vec<u8> {
        self.skill.signature().cols.into_iter().collect()
    }

    fn candidates(&self, t: &Table, bindable: &[usize], slot: u8) -> Vec<usize> {
        let allowed = self.allowed(slot);
        bindable.iter().copied().filter(|&c| allowed.contains(t.columns()[c].dtype)).collect()
    }

    /// Whether distinct columns satisfying every type constraint exist.
    pub fn columns_satisfiable(&self, t: &Table) -> bool {
        let bindable = t.unique_name_columns();
        let slots = self.col_slots();
        let cands: Vec<Vec<usize>> = slots.iter().map(|&s| self.candidates(t, &bindable, s)).collect();
        fn assign(cands: &[Vec<usize>], used: &mut Vec<usize>) -> bool {
            let Some((first, rest)) = cands.split_first() else { return true };
            for &c in first {
                if !used.contains(&c) {
                    used.push(c);
                    if assign(rest, used) {
                        return true;
                    }
                    used.pop();
                }
            }
            false
        }
        let skill_ok = self.skill != SkillKind::DateDifference || unique_date_column(t, &bindable).is_some();
        skill_ok && assign(&cands, &mut Vec::new())
    }

    /// Renders the question for a binding.
    pub fn render(&self, t: &Table, b: &Binding) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Literal(s) => out.push_str(s),
                Segment::Slot(Slot::Col(i)) => out.push_str(&t.columns()[b.columns[i]].name),
                Segment::Slot(Slot::Val(i)) => out.push_str(&surface_text(&t.cell(b.values[i], b.columns[i]).raw)),
                Segment::Slot(Slot::Condition(i)) => out.push_str(b.conditions[i].render()),
                Segment::Slot(Slot::Operator) => out.push_str(b.operator.map_or("", |o| o.word())),
                Segment::Slot(Slot::Ordinal) => out.push_str(&ordinal(b.ordinal.unwrap_or(0))),
            }
        }
        out
    }
}

/// Cell text as it appears in questions and answers: trimmed, with runs of
/// whitespace collapsed.
pub fn surface_text(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn unique_date_column(t: &Table, bindable: &[usize]) -> Option<usize> {
    let dates: Vec<usize> = bindable.iter().copied().filter(|&c| t.columns()[c].dtype == DataType::Date).collect();
    match dates.as_slice() {
        [d] => Some(*d),
        _ => None,
    }
}

/// Parses a template file. Template ids are `<skill slug>-<n>` numbered per
/// skill in file order.
pub fn load_templates(source: &str) -> Result<Vec<Template>, TemplateError> {
    let mut out = Vec::new();
    let mut per_skill: BTreeMap<SkillKind, usize> = BTreeMap::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(TemplateError::Malformed { line: line_no });
        }
        let skill = SkillKind::parse(fields[0])
            .ok_or_else(|| TemplateError::UnknownSkill { line: line_no, name: fields[0].trim().to_string() })?;
        let n = per_skill.entry(skill).or_default();
        let id = format!("{}-{}", skill.slug(), n);
        *n += 1;
        out.push(Template::parse(skill, fields[1].trim(), fields.get(2).copied().unwrap_or(""), id, line_no)?);
    }
    Ok(out)
}

/// The templates shipped with the crate.
pub fn builtin_templates() -> Vec<Template> {
    load_templates(BUILTIN).expect("built-in templates parse")
}

/// Slot assignments for one instantiated template.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Binding {
    /// `col:i` → column index.
    pub columns: BTreeMap<u8, usize>,
    /// `CONDITION:i` → condition on column `columns[i]`.
    pub conditions: BTreeMap<u8, Condition>,
    /// `val:i` → row index whose cell in `columns[i]` is the value.
    pub values: BTreeMap<u8, usize>,
    pub operator: Option<Operator>,
    /// 1-based.
    pub ordinal: Option<usize>,
    /// Implicit date column for date-difference questions.
    pub date_column: Option<usize>,
}

impl Binding {
    pub fn column(&self, slot: u8) -> usize {
        self.columns[&slot]
    }

    pub fn condition(&self, slot: u8) -> &Condition {
        &self.conditions[&slot]
    }

    pub fn canonical(&self) -> String {
        let mut parts = Vec::new();
        for (i, c) in &self.columns {
            parts.push(format!("col:{i}={c}"));
        }
        for (i, c) in &self.conditions {
            parts.push(format!("cond:{i}={}", c.canonical()));
        }
        for (i, r) in &self.values {
            parts.push(format!("val:{i}=row{r}"));
        }
        if let Some(o) = self.operator {
            parts.push(format!("op={}", o.word()));
        }
        if let Some(k) = self.ordinal {
            parts.push(format!("ord={k}"));
        }
        if let Some(d) = self.date_column {
            parts.push(format!("date_col={d}"));
        }
        parts.join(";")
    }

    /// Short hex digest of [`Binding::canonical`].
    pub fn digest(&self) -> String {
        let h = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&h[..8])
    }
}

/// Draws a binding for `tmpl` on `t` and renders the question. Returns
/// `None` when the table cannot satisfy the template on this draw.
pub fn instantiate<R: Rng + ?Sized>(tmpl: &Template, t: &Table, rng: &mut R) -> Option<(String, Binding)> {
    let bindable = t.unique_name_columns();
    let mut b = Binding::default();

    if tmpl.skill == SkillKind::DateDifference {
        b.date_column = Some(unique_date_column(t, &bindable)?);
    }

    let mut slots: Vec<(u8, Vec<usize>)> =
        tmpl.col_slots().into_iter().map(|s| (s, tmpl.candidates(t, &bindable, s))).collect();
    slots.sort_by_key(|(s, c)| (c.len(), *s));
    for (slot, cands) in &slots {
        let free: Vec<usize> = cands.iter().copied().filter(|c| !b.columns.values().any(|u| u == c)).collect();
        b.columns.insert(*slot, *free.choose(rng)?);
    }

    let sig = tmpl.skill.signature();
    for &slot in &sig.conditions {
        let c = sample_condition(t, b.columns[&slot], rng, tmpl.skill.condition_policy()).ok()?;
        b.conditions.insert(slot, c);
    }

    for &slot in &sig.values {
        let col = b.columns[&slot];
        let texts: Vec<String> = t.column_cells(col).map(|c| surface_text(&c.raw)).collect();
        let rows: Vec<usize> = (0..t.n_rows())
            .filter(|&r| !texts[r].is_empty() && texts.iter().filter(|x| **x == texts[r]).count() == 1)
            .filter(|r| !b.values.values().any(|u| u == r))
            .collect();
        b.values.insert(slot, *rows.choose(rng)?);
    }

    if sig.operator {
        b.operator = Some(*tmpl.skill.operators().choose(rng)?);
    }

    if sig.ordinal {
        let conds: Vec<&Condition> = b.conditions.values().collect();
        let n = select_all(t, &conds).ok()?.rows.len();
        if n == 0 {
            return None;
        }
        b.ordinal = Some(rng.random_range(1..=n));
    }

    let question = tmpl.render(t, &b);
    Some((question, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::t_fix;
    use crate::rng::derive_rng;

    #[test]
    fn builtin_set_covers_all_skills() {
        let ts = builtin_templates();
        assert!(ts.len() >= 7);
        let skills: BTreeSet<SkillKind> = ts.iter().map(|t| t.skill()).collect();
        assert_eq!(skills.len(), 7);
        let first = ts.iter().find(|t| t.skill() == SkillKind::NumericalComparison).unwrap();
        assert_eq!(first.pattern(), "Which {col:1}, with {col:2} was {CONDITION:2}, has the {ORDINAL} {col:3}?");
        assert_eq!(first.id(), "numerical_comparison-0");
    }

    #[test]
    fn load_errors() {
        let dangling = "Counting\tHow many {col:1} have {val:2}?\t-";
        assert_eq!(load_templates(dangling), Err(TemplateError::DanglingIndex { line: 1, index: 2 }));
        let bad = "# c\nCounting\tHow many {foo}?";
        assert_eq!(
            load_templates(bad),
            Err(TemplateError::BadPlaceholder { line: 2, placeholder: "{foo}".into() })
        );
        assert!(matches!(load_templates("Counting\tHow many {col:1"), Err(TemplateError::BadPlaceholder { .. })));
        assert!(matches!(load_templates("Counting\tx } y"), Err(TemplateError::BadPlaceholder { .. })));
        assert!(matches!(
            load_templates("Counting\tHow many {col:1}?"),
            Err(TemplateError::SlotMismatch { line: 1, .. })
        ));
        assert!(matches!(load_templates("Guessing\tx"), Err(TemplateError::UnknownSkill { .. })));
        assert!(matches!(
            load_templates("Counting\tHow many {col:1} have {col:2} {CONDITION:2}?\t2:Blob"),
            Err(TemplateError::BadConstraint { .. })
        ));
        assert!(matches!(load_templates("Counting"), Err(TemplateError::Malformed { line: 1 })));
    }

    #[test]
    fn constraints_merge_with_intrinsic_ones() {
        let ts = load_templates("Counting\tHow many {col:1} have {col:2} {CONDITION:2}?\t2:Number|Date").unwrap();
        assert!(!ts[0].allowed(2).contains(DataType::Text));
        assert!(ts[0].allowed(1).contains(DataType::Text));
        let ts = load_templates(
            "NumericalOperation\tWhat was the {OPERATOR} of {col:1} when the {col:2} was {CONDITION:2}?\t1:Any",
        )
        .unwrap();
        assert!(!ts[0].allowed(1).contains(DataType::Text));
    }

    #[test]
    fn numerical_comparison_on_fixture() {
        let t = t_fix();
        let tmpl = builtin_templates().into_iter().find(|t| t.skill() == SkillKind::NumericalComparison).unwrap();
        let mut rng = derive_rng(3, "T_fix", "tmpl");
        let (q, b) = instantiate(&tmpl, &t, &mut rng).unwrap();
        assert_eq!(t.columns()[b.column(3)].dtype, DataType::Number);
        assert!(q.starts_with("Which ") && q.contains(", has the "));
        assert!(!q.contains('{') && !q.contains('}'));

        // Hand-built binding reproduces the published surface form.
        let b = Binding {
            columns: [(1, 0), (2, 1), (3, 3)].into(),
            conditions: [(2, Condition::equals_text(1, "United States"))].into(),
            ordinal: Some(1),
            ..Binding::default()
        };
        assert_eq!(tmpl.render(&t, &b), "Which Company, with Country was United States, has the 1st Profit?");
    }

    #[test]
    fn unsatisfiable_type_constraints() {
        let header: Vec<String> = ["A", "B", "C"].map(String::from).to_vec();
        let rows: Vec<Vec<String>> = (0..5).map(|i| vec![format!("x{i}"), format!("y{}", i % 2), format!("z{}", i % 3)]).collect();
        let text_only = Table::from_typed("txt", &header, &[], &rows).unwrap();
        let mut rng = derive_rng(0, "txt", "tmpl");
        for tmpl in builtin_templates() {
            let expect = matches!(tmpl.skill(), SkillKind::Conjunction | SkillKind::Quantifiers | SkillKind::Counting);
            assert_eq!(tmpl.columns_satisfiable(&text_only), expect, "{}", tmpl.id());
            if !expect {
                assert!(instantiate(&tmpl, &text_only, &mut rng).is_none());
            }
        }
    }

    #[test]
    fn bindings_use_distinct_columns_and_render_fully() {
        let templates = builtin_templates();
        for seed in 0..300u64 {
            let mut rng = derive_rng(seed, "any", "tmpl");
            let t = crate::fixtures::random_table("r", crate::fixtures::RandomTableSpec::CORPUS, &mut rng);
            for tmpl in &templates {
                let again = instantiate(tmpl, &t, &mut derive_rng(seed, "again", tmpl.id()));
                let first = instantiate(tmpl, &t, &mut derive_rng(seed, "again", tmpl.id()));
                assert_eq!(again, first);
                if let Some((q, b)) = first {
                    let cols: BTreeSet<usize> = b.columns.values().copied().collect();
                    assert_eq!(cols.len(), b.columns.len());
                    assert!(!q.contains('{') && !q.contains('}'), "{q}");
                    for (slot, c) in &b.conditions {
                        assert_eq!(c.column(), b.columns[slot]);
                    }
                }
            }
        }
    }

    #[test]
    fn skill_names_parse() {
        assert_eq!(SkillKind::parse("Counting"), Some(SkillKind::Counting));
        assert_eq!(SkillKind::parse("temporal_comparison"), Some(SkillKind::TemporalComparison));
        assert_eq!(SkillKind::parse("Numerical Operation"), Some(SkillKind::NumericalOperation));
        assert_eq!(SkillKind::parse("quantifier"), Some(SkillKind::Quantifiers));
        assert_eq!(SkillKind::parse("sorting"), None);
        for k in SkillKind::ALL {
            assert_eq!(SkillKind::parse(k.slug()), Some(k));
        }
    }
}
