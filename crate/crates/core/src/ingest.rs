//! Loading raw tables from CSV and JSONL, corpus filtering, and row shuffling.

use std::io::{BufRead, Read};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::derive_rng;
use crate::table::{validate_table, DataType, Table, TableError};
use crate::typeinfer::InferenceConfig;

/// A table as extracted from its source, before typing.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct RawTable {
    pub table_id: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source_uri: String,
}

impl RawTable {
    pub fn to_table(&self, cfg: &InferenceConfig) -> Result<Table, TableError> {
        Table::from_raw(self, cfg)
    }
}

/// Line format of the table store: the input JSONL schema plus the column
/// types assigned at ingestion.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct StoredTable {
    pub table_id: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dtypes: Option<Vec<DataType>>,
}

impl StoredTable {
    pub fn from_table(t: &Table) -> Self {
        let raw = t.to_raw();
        StoredTable {
            table_id: raw.table_id,
            header: raw.header,
            rows: raw.rows,
            dtypes: Some(t.dtypes()),
        }
    }

    /// Rebuilds the typed table, inferring types when none were stored.
    pub fn to_table(&self, cfg: &InferenceConfig) -> Result<Table, TableError> {
        match &self.dtypes {
            Some(d) => Table::from_typed(self.table_id.as_str(), &self.header, d, &self.rows),
            None => Table::from_raw(
                &RawTable {
                    table_id: self.table_id.clone(),
                    header: self.header.clone(),
                    rows: self.rows.clone(),
                    source_uri: String::new(),
                },
                cfg,
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input is not valid UTF-8 (record {record})")]
    Decode { record: usize },
    #[error("input contains no records")]
    EmptyFile,
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A malformed JSONL line. Line numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// Reads one RFC-4180 CSV table whose first record is the header.
pub fn ingest_csv<R: Read>(stream: R, table_id: &str) -> Result<RawTable, IngestError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(stream);
    let mut records = Vec::new();
    for (i, rec) in reader.byte_records().enumerate() {
        let rec = rec.map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => IngestError::Io(io),
            other => IngestError::Csv(format!("{other:?}")),
        })?;
        let fields = rec
            .iter()
            .map(|f| String::from_utf8(f.to_vec()).map_err(|_| IngestError::Decode { record: i }))
            .collect::<Result<Vec<_>, _>>()?;
        records.push(fields);
    }
    let mut records = records.into_iter();
    let header = records.next().ok_or(IngestError::EmptyFile)?;
    let rows: Vec<Vec<String>> = records.collect();
    if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != header.len()) {
        return Err(IngestError::RaggedRows { row, expected: header.len(), found: r.len() });
    }
    Ok(RawTable { table_id: table_id.to_string(), header, rows, source_uri: String::new() })
}

#[derive(Deserialize)]
struct JsonlTable {
    table_id: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    #[serde(default)]
    source_uri: String,
}

/// Lazily parses one JSON table per line. Blank lines are skipped; bad lines
/// yield a [`ParseError`] and iteration continues.
pub fn ingest_jsonl<R: BufRead>(stream: R) -> impl Iterator<Item = Result<RawTable, ParseError>> {
    stream.lines().enumerate().filter_map(|(i, line)| {
        let line_no = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(ParseError { line: line_no, message: e.to_string() })),
        };
        if line.trim().is_empty() {
            return None;
        }
        Some(
            serde_json::from_str::<JsonlTable>(&line)
                .map_err(|e| ParseError { line: line_no, message: e.to_string() })
                .and_then(|t| {
                    if t.header.is_empty() {
                        Err(ParseError { line: line_no, message: "header is empty".into() })
                    } else {
                        Ok(RawTable {
                            table_id: t.table_id,
                            header: t.header,
                            rows: t.rows,
                            source_uri: t.source_uri,
                        })
                    }
                }),
        )
    })
}

/// Returns a copy of `t` with rows permuted uniformly at random. The
/// permutation depends only on `seed` and the table id.
pub fn shuffle_rows(t: &Table, seed: u64) -> Table {
    let mut order: Vec<usize> = (0..t.n_rows()).collect();
    let mut rng = derive_rng(seed, t.id(), "shuffle-rows");
    order.shuffle(&mut rng);
    t.with_row_order(&order)
}

/// Why a raw table did not make it into the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub table_id: String,
    pub reason: TableError,
}

/// Append-only ingestion report; reports from parallel shards can be merged.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected: Vec<Rejection>,
    pub parse_errors: Vec<ParseError>,
}

impl IngestReport {
    pub fn merge(&mut self, other: IngestReport) {
        self.accepted += other.accepted;
        self.rejected.extend(other.rejected);
        self.parse_errors.extend(other.parse_errors);
    }
}

/// Types a raw table, applies the corpus filter, and shuffles its rows.
pub fn prepare_table(
    raw: &RawTable,
    cfg: &InferenceConfig,
    seed: u64,
) -> Result<Table, TableError> {
    let t = Table::from_raw(raw, cfg)?;
    validate_table(&t, true)?;
    Ok(shuffle_rows(&t, seed))
}
