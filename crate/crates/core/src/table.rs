//! In-memory table model shared by every pipeline stage.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::RawTable;
use crate::typeinfer::{infer_column_type_with, parse_cell, InferenceConfig};
use crate::value::Value;

pub const MIN_COLUMNS: usize = 3;
pub const MIN_ROWS: usize = 8;
pub const MAX_ROWS: usize = 30;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum DataType {
    Text,
    Number,
    Date,
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataType::Text => "Text",
            DataType::Number => "Number",
            DataType::Date => "Date",
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Cell {
    pub raw: String,
    pub parsed: Value,
}

impl Cell {
    pub fn new(raw: impl Into<String>, dtype: DataType) -> Self {
        let raw = raw.into();
        let parsed = parse_cell(&raw, dtype);
        Cell { raw, parsed }
    }

    pub fn is_empty(&self) -> bool {
        self.raw.trim().is_empty()
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Column {
    pub name: String,
    pub dtype: DataType,
}

impl Column {
    pub fn new(name: impl Into<String>, dtype: DataType) -> Self {
        Column { name: name.into().trim().to_string(), dtype }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableError {
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },
    #[error("table has {found} columns, at least {MIN_COLUMNS} required")]
    TooFewColumns { found: usize },
    #[error("table has {found} rows, expected {MIN_ROWS}..={MAX_ROWS}")]
    RowCountOutOfRange { found: usize },
    #[error("header of column {column} is empty")]
    EmptyHeader { column: usize },
}

/// A typed table. Immutable once built.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Table {
    id: String,
    columns: Vec<Column>,
    rows: Vec<Vec<Cell>>,
    fixture: bool,
}

impl Table {
    /// Builds a table, rejecting ragged rows and empty headers.
    pub fn new(
        id: impl Into<String>,
        columns: Vec<Column>,
        rows: Vec<Vec<Cell>>,
    ) -> Result<Table, TableError> {
        let t = Table { id: id.into(), columns, rows, fixture: false };
        validate_table(&t, false)?;
        Ok(t)
    }

    /// Builds a table from raw strings, parsing each cell under its column's
    /// type. Columns without a listed type are Text.
    pub fn from_typed(
        id: impl Into<String>,
        header: &[String],
        dtypes: &[DataType],
        rows: &[Vec<String>],
    ) -> Result<Table, TableError> {
        let dtype = |i: usize| dtypes.get(i).copied().unwrap_or(DataType::Text);
        let columns = header.iter().enumerate().map(|(i, h)| Column::new(h.as_str(), dtype(i))).collect();
        let rows = rows
            .iter()
            .map(|r| r.iter().enumerate().map(|(i, raw)| Cell::new(raw.as_str(), dtype(i))).collect())
            .collect();
        Table::new(id, columns, rows)
    }

    /// Infers column types and builds a typed table.
    pub fn from_raw(raw: &RawTable, cfg: &InferenceConfig) -> Result<Table, TableError> {
        let width = raw.header.len();
        if let Some((row, r)) = raw.rows.iter().enumerate().find(|(_, r)| r.len() != width) {
            return Err(TableError::RaggedRows { row, expected: width, found: r.len() });
        }
        let dtypes: Vec<DataType> = (0..width)
            .map(|c| {
                let cells: Vec<&str> = raw.rows.iter().map(|r| r[c].as_str()).collect();
                infer_column_type_with(Some(raw.header[c].as_str()), &cells, cfg)
            })
            .collect();
        Table::from_typed(raw.table_id.as_str(), &raw.header, &dtypes, &raw.rows)
    }

    pub fn into_fixture(mut self) -> Self {
        self.fixture = true;
        self
    }

    pub fn is_fixture(&self) -> bool {
        self.fixture
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, index: usize) -> Option<&Column> {
        self.columns.get(index)
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.rows[row][col]
    }

    /// Cells of one column in row order.
    pub fn column_cells(&self, col: usize) -> impl Iterator<Item = &Cell> + '_ {
        self.rows.iter().map(move |r| &r[col])
    }

    pub fn dtypes(&self) -> Vec<DataType> {
        self.columns.iter().map(|c| c.dtype).collect()
    }

    /// Indices of columns whose name occurs exactly once in the header.
    pub fn unique_name_columns(&self) -> Vec<usize> {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for c in &self.columns {
            *counts.entry(c.name.as_str()).or_default() += 1;
        }
        (0..self.columns.len()).filter(|&i| counts[self.columns[i].name.as_str()] == 1).collect()
    }

    /// Same table with rows replaced by a permutation of the originals.
    pub(crate) fn with_row_order(&self, order: &[usize]) -> Table {
        debug_assert_eq!(order.len(), self.rows.len());
        Table {
            id: self.id.clone(),
            columns: self.columns.clone(),
            rows: order.iter().map(|&i| self.rows[i].clone()).collect(),
            fixture: self.fixture,
        }
    }

    pub fn to_raw(&self) -> RawTable {
        RawTable {
            table_id: self.id.clone(),
            header: self.columns.iter().map(|c| c.name.clone()).collect(),
            rows: self.rows.iter().map(|r| r.iter().map(|c| c.raw.clone()).collect()).collect(),
            source_uri: String::new(),
        }
    }
}

/// Checks the structural invariants; `corpus_mode` also enforces the
/// 8..=30 row and 3+ column bounds for non-fixture tables.
pub fn validate_table(t: &Table, corpus_mode: bool) -> Result<(), TableError> {
    let width = t.columns.len();
    for (column, c) in t.columns.iter().enumerate() {
        if c.name.trim().is_empty() {
            return Err(TableError::EmptyHeader { column });
        }
    }
    if let Some((row, r)) = t.rows.iter().enumerate().find(|(_, r)| r.len() != width) {
        return Err(TableError::RaggedRows { row, expected: width, found: r.len() });
    }
    if corpus_mode && !t.fixture {
        if width < MIN_COLUMNS {
            return Err(TableError::TooFewColumns { found: width });
        }
        if !(MIN_ROWS..=MAX_ROWS).contains(&t.rows.len()) {
            return Err(TableError::RowCountOutOfRange { found: t.rows.len() });
        }
    }
    Ok(())
}
