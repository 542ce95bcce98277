//! One example generator per reasoning skill.
//!
//! Each generator draws bindings from the skill's templates, computes the
//! answer with the [`crate::oracle`] primitives and keeps the example only
//! if the answer is well defined.

use std::collections::{BTreeMap, HashSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::condition::Condition;
use crate::oracle::{
    aggregate, date_difference, format_count, format_duration, format_number, kth_is_tied, rank_rows,
    select_all, select_rows, AggregateOp, OracleError, SortOrder,
};
use crate::rng::derive_rng;
use crate::template::{builtin_templates, instantiate, surface_text, Binding, Operator, SkillKind, Template};
use crate::table::Table;
use crate::value::Number;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Synthetic,
    External,
}

/// One question-answer pair over a table.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Example {
    pub table_id: String,
    pub skill: SkillKind,
    pub template_id: String,
    pub question: String,
    pub answers: Vec<String>,
    pub source: Source,
    /// Digest of the binding that produced the example, or `external`.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub provenance: String,
}

/// A generated example together with the binding its answer was computed from.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GeneratedExample {
    pub example: Example,
    pub binding: Binding,
}

/// Why a drawn binding was discarded.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Reject {
    NoMatch,
    EmptyAnswerCell,
    UnparsableValue,
    TiedOrdinal,
    ZeroDuration,
    SameRow,
}

impl Reject {
    fn label(&self) -> &'static str {
        match self {
            Reject::NoMatch => "no_match",
            Reject::EmptyAnswerCell => "empty_answer_cell",
            Reject::UnparsableValue => "unparsable_value",
            Reject::TiedOrdinal => "tied_ordinal",
            Reject::ZeroDuration => "zero_duration",
            Reject::SameRow => "same_row",
        }
    }
}

impl From<OracleError> for Reject {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::EmptyInput => Reject::NoMatch,
            _ => Reject::UnparsableValue,
        }
    }
}

/// Counters keyed by `<skill slug>/<reason>`. Merge-able across tables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub counts: BTreeMap<String, u64>,
}

impl Diagnostics {
    pub fn bump(&mut self, skill: SkillKind, reason: &str) {
        self.add(skill, reason, 1);
    }

    pub fn add(&mut self, skill: SkillKind, reason: &str, n: u64) {
        if n > 0 {
            *self.counts.entry(format!("{}/{reason}", skill.slug())).or_default() += n;
        }
    }

    pub fn get(&self, skill: SkillKind, reason: &str) -> u64 {
        self.counts.get(&format!("{}/{reason}", skill.slug())).copied().unwrap_or(0)
    }

    pub fn merge(&mut self, other: &Diagnostics) {
        for (k, v) in &other.counts {
            *self.counts.entry(k.clone()).or_default() += v;
        }
    }
}

fn answer_cell(t: &Table, row: usize, col: usize) -> Result<String, Reject> {
    let s = surface_text(&t.cell(row, col).raw);
    if s.is_empty() {
        Err(Reject::EmptyAnswerCell)
    } else {
        Ok(s)
    }
}

fn yes_no(v: bool) -> String {
    if v { "Yes" } else { "No" }.to_string()
}

/// `col:1` cells of rows satisfying every condition, in row order.
pub fn conjunction_answer(t: &Table, target: usize, conditions: &[&Condition]) -> Result<Vec<String>, Reject> {
    let rows = select_all(t, conditions)?.rows;
    if rows.is_empty() {
        return Err(Reject::NoMatch);
    }
    rows.iter().map(|&r| answer_cell(t, r, target)).collect()
}

/// `every`: all rows matching `filter` match `target`. `only`: all rows
/// matching `target` match `filter`. Both row sets must be non-empty.
pub fn quantifier_answer(t: &Table, op: Operator, filter: &Condition, target: &Condition) -> Result<bool, Reject> {
    let a = select_rows(t, filter)?.rows;
    let b = select_rows(t, target)?.rows;
    if a.is_empty() || b.is_empty() {
        return Err(Reject::NoMatch);
    }
    let subset = |x: &[usize], y: &[usize]| x.iter().all(|r| y.binary_search(r).is_ok());
    match op {
        Operator::Every => Ok(subset(&a, &b)),
        Operator::Only => Ok(subset(&b, &a)),
        _ => Err(Reject::NoMatch),
    }
}

pub fn counting_answer(t: &Table, condition: &Condition) -> Result<String, Reject> {
    let n = select_rows(t, condition)?.rows.len();
    if n == 0 {
        return Err(Reject::NoMatch);
    }
    Ok(format_count(n))
}

fn ordinal_answer(
    t: &Table,
    b: &Binding,
    order: SortOrder,
    strict: bool,
) -> Result<Vec<String>, Reject> {
    let rows = select_rows(t, b.condition(2))?.rows;
    if rows.is_empty() {
        return Err(Reject::NoMatch);
    }
    let k = b.ordinal.ok_or(Reject::NoMatch)?;
    if k == 0 || k > rows.len() {
        return Err(Reject::NoMatch);
    }
    let key = b.column(3);
    let ranked = rank_rows(t, &rows, key, order)?;
    if strict && kth_is_tied(t, &ranked, key, k) {
        return Err(Reject::TiedOrdinal);
    }
    Ok(vec![answer_cell(t, ranked[k - 1], b.column(1))?])
}

/// Computes the answer a binding denotes for `skill`.
pub fn compute_answer(skill: SkillKind, t: &Table, b: &Binding, strict_ordinals: bool) -> Result<Vec<String>, Reject> {
    match skill {
        SkillKind::Conjunction => conjunction_answer(t, b.column(1), &[b.condition(2), b.condition(3)]),
        SkillKind::Quantifiers => {
            let op = b.operator.ok_or(Reject::NoMatch)?;
            Ok(vec![yes_no(quantifier_answer(t, op, b.condition(2), b.condition(3))?)])
        }
        SkillKind::TemporalComparison => ordinal_answer(t, b, SortOrder::Ascending, strict_ordinals),
        SkillKind::NumericalComparison => ordinal_answer(t, b, SortOrder::Descending, strict_ordinals),
        SkillKind::DateDifference => {
            let (r1, r2) = (b.values[&1], b.values[&2]);
            if r1 == r2 {
                return Err(Reject::SameRow);
            }
            let d = b.date_column.ok_or(Reject::UnparsableValue)?;
            let date = |r: usize| t.cell(r, d).parsed.as_date().copied().ok_or(Reject::UnparsableValue);
            let diff = date_difference(&date(r1)?, &date(r2)?);
            if diff.is_zero() {
                return Err(Reject::ZeroDuration);
            }
            Ok(vec![format_duration(&diff)])
        }
        SkillKind::Counting => Ok(vec![counting_answer(t, b.condition(2))?]),
        SkillKind::NumericalOperation => {
            let rows = select_rows(t, b.condition(2))?.rows;
            if rows.is_empty() {
                return Err(Reject::NoMatch);
            }
            let col = b.column(1);
            let values = rows
                .iter()
                .map(|&r| t.cell(r, col).parsed.as_number().cloned().ok_or(Reject::UnparsableValue))
                .collect::<Result<Vec<Number>, _>>()?;
            let op = match b.operator {
                Some(Operator::Sum) => AggregateOp::Sum,
                Some(Operator::Average) => AggregateOp::Average,
                _ => return Err(Reject::NoMatch),
            };
            Ok(vec![format_number(&aggregate(&values, op)?)])
        }
    }
}

#[derive(Clone, Debug)]
pub struct GeneratorConfig {
    /// Reject ordinal questions whose k-th row ties with a neighbour.
    pub strict_ordinals: bool,
    /// Draws allowed per requested example before giving up on a table.
    pub attempts_per_example: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig { strict_ordinals: true, attempts_per_example: 16 }
    }
}

/// Examples and counters produced for one table.
#[derive(Clone, Debug, Default)]
pub struct TableOutput {
    pub examples: Vec<GeneratedExample>,
    pub diagnostics: Diagnostics,
}

/// Holds templates grouped by skill.
#[derive(Clone, Debug)]
pub struct Generator {
    templates: BTreeMap<SkillKind, Vec<Template>>,
    config: GeneratorConfig,
}

impl Default for Generator {
    fn default() -> Self {
        Generator::new(builtin_templates(), GeneratorConfig::default())
    }
}

impl Generator {
    pub fn new(templates: Vec<Template>, config: GeneratorConfig) -> Self {
        let mut by_skill: BTreeMap<SkillKind, Vec<Template>> = BTreeMap::new();
        for t in templates {
            by_skill.entry(t.skill()).or_default().push(t);
        }
        Generator { templates: by_skill, config }
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn templates(&self, skill: SkillKind) -> &[Template] {
        self.templates.get(&skill).map_or(&[], |v| v.as_slice())
    }

    /// Up to `quota` examples of one skill. Questions already in `seen` are
    /// skipped; accepted questions are added to it.
    pub fn generate_skill<R: Rng + ?Sized>(
        &self,
        skill: SkillKind,
        t: &Table,
        rng: &mut R,
        quota: usize,
        seen: &mut HashSet<String>,
        diag: &mut Diagnostics,
    ) -> Vec<GeneratedExample> {
        let mut out = Vec::new();
        if quota == 0 {
            return out;
        }
        let usable: Vec<&Template> = self.templates(skill).iter().filter(|tm| tm.columns_satisfiable(t)).collect();
        if usable.is_empty() {
            diag.bump(skill, "missing_column_types");
            return out;
        }
        // Quantifier answers alternate between Yes and No so the skill stays balanced.
        let mut want_yes = rng.random_bool(0.5);
        let budget = quota * self.config.attempts_per_example;
        for _ in 0..budget {
            if out.len() >= quota {
                break;
            }
            let tmpl = *usable.choose(rng).expect("non-empty");
            let Some((question, binding)) = instantiate(tmpl, t, rng) else {
                diag.bump(skill, "unsatisfied_draw");
                continue;
            };
            let answers = match compute_answer(skill, t, &binding, self.config.strict_ordinals) {
                Ok(a) => a,
                Err(r) => {
                    diag.bump(skill, r.label());
                    continue;
                }
            };
            if skill == SkillKind::Quantifiers && (answers[0] == "Yes") != want_yes {
                diag.bump(skill, "balance");
                continue;
            }
            if seen.contains(&question) {
                diag.bump(skill, "duplicate");
                continue;
            }
            seen.insert(question.clone());
            want_yes = !want_yes;
            let example = Example {
                table_id: t.id().to_string(),
                skill,
                template_id: tmpl.id().to_string(),
                question,
                answers,
                source: Source::Synthetic,
                provenance: binding.digest(),
            };
            out.push(GeneratedExample { example, binding });
        }
        diag.add(skill, "generated", out.len() as u64);
        out
    }

    fn one_skill<R: Rng + ?Sized>(&self, skill: SkillKind, t: &Table, rng: &mut R, quota: usize) -> Vec<GeneratedExample> {
        self.generate_skill(skill, t, rng, quota, &mut HashSet::new(), &mut Diagnostics::default())
    }

    /// "What was the col:1 when the col:2 was CONDITION:2 and the col:3 was CONDITION:3?"
    pub fn gen_conjunction<R: Rng + ?Sized>(&self, t: &Table, rng: &mut R, quota: usize) -> Vec<GeneratedExample> {
        self.one_skill(SkillKind::Conjunction, t, rng, quota)
    }

    pub fn gen_quantifier<R: Rng + ?Sized>(&self, t: &Table, rng: &mut R, quota: usize) -> Vec<GeneratedExample> {
        self.one_skill(SkillKind::Quantifiers, t, rng, quota)
    }

    /// k-th earliest by a Date column.
    pub fn gen_temporal_comparison<R: Rng + ?Sized>(&self, t: &Table, rng: &mut R, quota: usize) -> Vec<GeneratedExample> {
        self.one_skill(SkillKind::TemporalComparison, t, rng, quota)
    }

    pub fn gen_date_difference<R: Rng + ?Sized>(&self, t: &Table, rng: &mut R, quota: usize) -> Vec<GeneratedExample> {
        self.one_skill(SkillKind::DateDifference, t, rng, quota)
    }

    pub fn gen_counting<R: Rng + ?Sized>(&self, t: &Table, rng: &mut R, quota: usize) -> Vec<GeneratedExample> {
        self.one_skill(SkillKind::Counting, t, rng, quota)
    }

    pub fn gen_numerical_operation<R: Rng + ?Sized>(&self, t: &Table, rng: &mut R, quota: usize) -> Vec<GeneratedExample> {
        self.one_skill(SkillKind::NumericalOperation, t, rng, quota)
    }

    /// k-th largest by a Number column.
    pub fn gen_numerical_comparison<R: Rng + ?Sized>(&self, t: &Table, rng: &mut R, quota: usize) -> Vec<GeneratedExample> {
        self.one_skill(SkillKind::NumericalComparison, t, rng, quota)
    }

    /// Runs every skill with a non-zero quota on `t`. Each skill draws from
    /// its own stream derived from `(seed, table id, skill)`, and questions
    /// are unique within the table.
    pub fn generate_all(&self, t: &Table, per_skill_quota: &BTreeMap<SkillKind, usize>, seed: u64) -> TableOutput {
        let mut out = TableOutput::default();
        let mut seen = HashSet::new();
        for skill in SkillKind::ALL {
            let quota = per_skill_quota.get(&skill).copied().unwrap_or(0);
            if quota == 0 {
                continue;
            }
            let mut rng = derive_rng(seed, t.id(), &format!("generate/{}", skill.slug()));
            let examples = self.generate_skill(skill, t, &mut rng, quota, &mut seen, &mut out.diagnostics);
            out.examples.extend(examples);
        }
        out
    }
}

/// The same quota for every skill.
pub fn uniform_quota(n: usize) -> BTreeMap<SkillKind, usize> {
    SkillKind::ALL.iter().map(|&k| (k, n)).collect()
}
