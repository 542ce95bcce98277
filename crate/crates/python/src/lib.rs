//! Python bindings for the tabsynth pipeline.

use std::collections::BTreeMap;
use std::path::Path;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use tabsynth::corpus::CorpusConfig;
use tabsynth::generator::uniform_quota;
use tabsynth::ingest::shuffle_rows;
use tabsynth::oracle::format_number;
use tabsynth::pipeline::{self, PipelineError};
use tabsynth::serialize;
use tabsynth::typeinfer;
use tabsynth::{DataType, Generator, SkillKind};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn pipeline_err(e: PipelineError) -> PyErr {
    if e.is_io() {
        PyIOError::new_err(e.to_string())
    } else {
        value_err(e)
    }
}

fn parse_dtype(s: &str) -> PyResult<DataType> {
    match s.to_ascii_lowercase().as_str() {
        "text" => Ok(DataType::Text),
        "number" => Ok(DataType::Number),
        "date" => Ok(DataType::Date),
        _ => Err(PyValueError::new_err(format!("unknown column type {s:?}"))),
    }
}

fn skill(s: &str) -> PyResult<SkillKind> {
    SkillKind::parse(s).ok_or_else(|| PyValueError::new_err(format!("unknown skill {s:?}")))
}

/// A typed table. Column types are inferred unless given.
#[pyclass(name = "Table", module = "tabsynth_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyTable {
    inner: tabsynth::Table,
}

#[pymethods]
impl PyTable {
    #[new]
    #[pyo3(signature = (table_id, header, rows, dtypes=None))]
    fn new(table_id: &str, header: Vec<String>, rows: Vec<Vec<String>>, dtypes: Option<Vec<String>>) -> PyResult<Self> {
        let inner = match dtypes {
            Some(d) => {
                let d = d.iter().map(|s| parse_dtype(s)).collect::<PyResult<Vec<_>>>()?;
                tabsynth::Table::from_typed(table_id, &header, &d, &rows)
            }
            None => tabsynth::RawTable { table_id: table_id.into(), header, rows, source_uri: String::new() }
                .to_table(&tabsynth::InferenceConfig::default()),
        }
        .map_err(value_err)?;
        Ok(PyTable { inner })
    }

    /// The five-row company table used in the test suite.
    #[staticmethod]
    fn fixture() -> Self {
        PyTable { inner: tabsynth::fixtures::t_fix() }
    }

    #[getter]
    fn table_id(&self) -> String {
        self.inner.id().to_string()
    }

    #[getter]
    fn header(&self) -> Vec<String> {
        self.inner.columns().iter().map(|c| c.name.clone()).collect()
    }

    #[getter]
    fn dtypes(&self) -> Vec<String> {
        self.inner.dtypes().iter().map(|d| d.to_string()).collect()
    }

    #[getter]
    fn rows(&self) -> Vec<Vec<String>> {
        self.inner.rows().iter().map(|r| r.iter().map(|c| c.raw.clone()).collect()).collect()
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn n_cols(&self) -> usize {
        self.inner.n_cols()
    }

    /// Whether the table passes the corpus size filter.
    fn is_corpus_table(&self) -> bool {
        tabsynth::table::validate_table(&self.inner, true).is_ok()
    }

    fn flatten(&self) -> String {
        serialize::flatten_table(&self.inner)
    }

    fn shuffled(&self, seed: u64) -> Self {
        PyTable { inner: shuffle_rows(&self.inner, seed) }
    }

    /// Up to `quota` examples per skill, as dicts in corpus JSON form.
    #[pyo3(signature = (quota=1, seed=0, skills=None))]
    fn generate(&self, py: Python<'_>, quota: usize, seed: u64, skills: Option<Vec<String>>) -> PyResult<Vec<Py<PyAny>>> {
        let quotas = match skills {
            Some(names) => names.iter().map(|n| Ok((skill(n)?, quota))).collect::<PyResult<BTreeMap<_, _>>>()?,
            None => uniform_quota(quota),
        };
        let out = Generator::default().generate_all(&self.inner, &quotas, seed);
        out.examples
            .iter()
            .map(|g| {
                let json = serde_json::to_string(&g.example).map_err(value_err)?;
                let loads = py.import("json")?.getattr("loads")?;
                Ok(loads.call1((json,))?.unbind())
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Table({:?}, {} rows x {} columns)", self.inner.id(), self.inner.n_rows(), self.inner.n_cols())
    }
}

/// Exact decimal text of a numeric cell, or None.
#[pyfunction]
fn parse_number(s: &str) -> Option<String> {
    typeinfer::parse_number(s).map(|n| n.to_string())
}

/// ISO text (`1964`, `1964-03`, `1985-06-15`) of a date cell, or None.
#[pyfunction]
fn parse_date(s: &str) -> Option<String> {
    typeinfer::parse_date(s).map(|d| d.to_string())
}

#[pyfunction]
fn infer_column_type(cells: Vec<String>) -> String {
    typeinfer::infer_column_type(&cells).to_string()
}

/// Answer rendering of a decimal string, grouped from 10,000.
#[pyfunction(name = "format_number")]
fn py_format_number(s: &str) -> PyResult<String> {
    let n = typeinfer::parse_number(s).ok_or_else(|| PyValueError::new_err(format!("not a number: {s:?}")))?;
    Ok(format_number(&n))
}

#[pyfunction]
fn flatten_table(table: &PyTable) -> String {
    serialize::flatten_table(&table.inner)
}

#[pyfunction]
fn render_model_input(question: &str, table: &PyTable) -> PyResult<String> {
    serialize::render_model_input(question, &table.inner).map_err(value_err)
}

#[pyfunction]
fn render_answer(answers: Vec<String>) -> PyResult<String> {
    serialize::render_answer(&answers).map_err(value_err)
}

#[pyfunction]
fn denotation_match(pred: &str, gold: Vec<String>) -> bool {
    tabsynth::eval::denotation_match(pred, &gold)
}

/// Per-skill example counts for a corpus of `total` examples.
#[pyfunction]
#[pyo3(signature = (total, proportions=None, disabled=None))]
fn quotas(total: usize, proportions: Option<BTreeMap<String, f64>>, disabled: Option<Vec<String>>) -> PyResult<BTreeMap<String, usize>> {
    let mut cfg = CorpusConfig::new(total, 0);
    if let Some(p) = proportions {
        cfg.proportions = p.iter().map(|(k, &v)| Ok((skill(k)?, v))).collect::<PyResult<_>>()?;
    }
    for d in disabled.unwrap_or_default() {
        cfg.disable(skill(&d)?);
    }
    let q = cfg.quotas().map_err(value_err)?;
    Ok(q.into_iter().map(|(k, n)| (k.label().to_string(), n)).collect())
}

/// Scores a prediction file against a gold JSONL file.
#[pyfunction]
fn score_files(py: Python<'_>, pred: &str, gold: &str) -> PyResult<Py<PyAny>> {
    let report = pipeline::score_files(Path::new(pred), Path::new(gold)).map_err(pipeline_err)?;
    let json = serde_json::to_string(&report).map_err(value_err)?;
    Ok(py.import("json")?.getattr("loads")?.call1((json,))?.unbind())
}

#[pyfunction]
fn skills() -> Vec<&'static str> {
    SkillKind::ALL.iter().map(|k| k.label()).collect()
}

#[pymodule]
fn tabsynth_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTable>()?;
    m.add_function(wrap_pyfunction!(parse_number, m)?)?;
    m.add_function(wrap_pyfunction!(parse_date, m)?)?;
    m.add_function(wrap_pyfunction!(infer_column_type, m)?)?;
    m.add_function(wrap_pyfunction!(py_format_number, m)?)?;
    m.add_function(wrap_pyfunction!(flatten_table, m)?)?;
    m.add_function(wrap_pyfunction!(render_model_input, m)?)?;
    m.add_function(wrap_pyfunction!(render_answer, m)?)?;
    m.add_function(wrap_pyfunction!(denotation_match, m)?)?;
    m.add_function(wrap_pyfunction!(quotas, m)?)?;
    m.add_function(wrap_pyfunction!(score_files, m)?)?;
    m.add_function(wrap_pyfunction!(skills, m)?)?;
    Ok(())
}
