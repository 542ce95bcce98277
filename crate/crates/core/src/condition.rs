//! Single-column predicates behind `CONDITION:i` slots.

use std::cmp::Ordering;

use rand::seq::IndexedRandom;
use rand::Rng;
use thiserror::Error;

use crate::oracle::format_grouped_exact;
use crate::table::{Cell, DataType, Table};
use crate::value::{Number, PartialDate, Value};

pub const MAX_SAMPLING_ATTEMPTS: usize = 32;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum NumOp {
    Greater,
    Less,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum DateOp {
    Later,
    Earlier,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum ConditionKind {
    Equals(Value),
    NumCmp { op: NumOp, pivot: Number },
    DateCmp { op: DateOp, pivot: PartialDate },
}

/// A predicate over one column together with its surface text.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Condition {
    column: usize,
    kind: ConditionKind,
    surface: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConditionError {
    #[error("cell has no parsed value of the type the condition compares")]
    UnparsableCell,
    #[error("no acceptable condition found after {attempts} attempts")]
    ExhaustedSampling { attempts: usize },
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl Condition {
    /// Equality with a cell value; renders as `surface`.
    pub fn equals(column: usize, value: Value, surface: &str) -> Self {
        Condition { column, kind: ConditionKind::Equals(value), surface: collapse_ws(surface) }
    }

    /// Equality with a text value, rendered as the text itself.
    pub fn equals_text(column: usize, text: &str) -> Self {
        let text = text.trim();
        Condition::equals(column, Value::Text(text.to_string()), text)
    }

    pub fn numeric(column: usize, op: NumOp, pivot: Number) -> Self {
        let word = match op {
            NumOp::Greater => "greater than",
            NumOp::Less => "less than",
        };
        let surface = format!("{word} {}", format_grouped_exact(&pivot));
        Condition { column, kind: ConditionKind::NumCmp { op, pivot }, surface }
    }

    /// Temporal comparison; `pivot_text` is the pivot as written in its
    /// source cell.
    pub fn temporal(column: usize, op: DateOp, pivot: PartialDate, pivot_text: &str) -> Self {
        let word = match op {
            DateOp::Later => "later than",
            DateOp::Earlier => "earlier than",
        };
        let surface = format!("{word} {}", collapse_ws(pivot_text));
        Condition { column, kind: ConditionKind::DateCmp { op, pivot }, surface }
    }

    pub fn column(&self) -> usize {
        self.column
    }

    pub fn kind(&self) -> &ConditionKind {
        &self.kind
    }

    /// English rendering, e.g. `greater than 841,969` or `France`.
    pub fn render(&self) -> &str {
        &self.surface
    }

    /// Whether this condition may be placed on a column of type `dtype`.
    pub fn fits(&self, dtype: DataType) -> bool {
        match self.kind {
            ConditionKind::Equals(_) => true,
            ConditionKind::NumCmp { .. } => dtype == DataType::Number,
            ConditionKind::DateCmp { .. } => dtype == DataType::Date,
        }
    }

    /// Comparisons are strict. Equality on text is exact after trimming.
    pub fn eval(&self, cell: &Cell) -> Result<bool, ConditionError> {
        match &self.kind {
            ConditionKind::Equals(v) => Ok(&cell.parsed == v),
            ConditionKind::NumCmp { op, pivot } => {
                let n = cell.parsed.as_number().ok_or(ConditionError::UnparsableCell)?;
                let ord = n.cmp(pivot);
                Ok(match op {
                    NumOp::Greater => ord == Ordering::Greater,
                    NumOp::Less => ord == Ordering::Less,
                })
            }
            ConditionKind::DateCmp { op, pivot } => {
                let d = cell.parsed.as_date().ok_or(ConditionError::UnparsableCell)?;
                let ord = d.cmp_key(pivot);
                Ok(match op {
                    DateOp::Later => ord == Ordering::Greater,
                    DateOp::Earlier => ord == Ordering::Less,
                })
            }
        }
    }

    /// Stable textual form used for provenance digests.
    pub fn canonical(&self) -> String {
        match &self.kind {
            ConditionKind::Equals(v) => {
                let tag = match v {
                    Value::Text(_) => "text",
                    Value::Number(_) => "num",
                    Value::Date(_) => "date",
                };
                format!("eq({},{tag}:{v})", self.column)
            }
            ConditionKind::NumCmp { op, pivot } => format!("{op:?}({},{pivot})", self.column),
            ConditionKind::DateCmp { op, pivot } => format!("{op:?}({},{pivot})", self.column),
        }
    }
}

/// Free-function form of [`Condition::eval`].
pub fn eval_condition(cell: &Cell, c: &Condition) -> Result<bool, ConditionError> {
    c.eval(cell)
}

/// Row-set requirements for [`sample_condition`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplePolicy {
    pub require_nonempty: bool,
    pub require_proper_subset: bool,
}

impl SamplePolicy {
    pub const NONEMPTY: SamplePolicy =
        SamplePolicy { require_nonempty: true, require_proper_subset: false };
    pub const PROPER: SamplePolicy =
        SamplePolicy { require_nonempty: true, require_proper_subset: true };
}

fn matches(table: &Table, c: &Condition) -> usize {
    table.column_cells(c.column).filter(|cell| c.eval(cell).unwrap_or(false)).count()
}

/// Draws a condition on `column` grounded in its observed values.
///
/// Text columns get equality conditions. Number and Date columns with at
/// least two distinct parsed values get a comparison half of the time, with
/// the pivot drawn from those values. Draws are repeated up to
/// [`MAX_SAMPLING_ATTEMPTS`] times until the policy's row-set requirements
/// hold.
pub fn sample_condition<R: Rng + ?Sized>(
    table: &Table,
    column: usize,
    rng: &mut R,
    policy: SamplePolicy,
) -> Result<Condition, ConditionError> {
    let dtype = table.columns()[column].dtype;
    let non_empty: Vec<&Cell> = table.column_cells(column).filter(|c| !c.is_empty()).collect();

    // Distinct parsed values with the raw text of the first cell carrying each.
    let mut numbers: Vec<(&Number, &str)> = Vec::new();
    let mut dates: Vec<(&PartialDate, &str)> = Vec::new();
    for cell in &non_empty {
        match &cell.parsed {
            Value::Number(n) if dtype == DataType::Number => {
                if !numbers.iter().any(|(m, _)| *m == n) {
                    numbers.push((n, cell.raw.as_str()));
                }
            }
            Value::Date(d) if dtype == DataType::Date => {
                if !dates.iter().any(|(e, _)| e.cmp_key(d) == Ordering::Equal) {
                    dates.push((d, cell.raw.as_str()));
                }
            }
            _ => {}
        }
    }
    let comparable = numbers.len() >= 2 || dates.len() >= 2;

    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let candidate = if comparable && rng.random_bool(0.5) {
            if dtype == DataType::Number {
                let (pivot, _) = numbers.choose(rng).expect("non-empty");
                let op = if rng.random_bool(0.5) { NumOp::Greater } else { NumOp::Less };
                Condition::numeric(column, op, (*pivot).clone())
            } else {
                let (pivot, raw) = dates.choose(rng).expect("non-empty");
                let op = if rng.random_bool(0.5) { DateOp::Later } else { DateOp::Earlier };
                Condition::temporal(column, op, **pivot, raw)
            }
        } else {
            let Some(cell) = non_empty.choose(rng) else { break };
            Condition::equals(column, cell.parsed.clone(), cell.raw.trim())
        };
        let n = matches(table, &candidate);
        if policy.require_nonempty && n == 0 {
            continue;
        }
        if policy.require_proper_subset && n >= table.n_rows() {
            continue;
        }
        return Ok(candidate);
    }
    Err(ConditionError::ExhaustedSampling { attempts: MAX_SAMPLING_ATTEMPTS })
}
