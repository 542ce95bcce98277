//! File-level stages: ingest, generate, sample, export and stats.
//!
//! Every stage reads its inputs and writes new files; nothing is modified
//! in place. Output bytes depend only on the inputs and the seed.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::corpus::{example_key, import_external, read_corpus, sample_keyed, CorpusConfig, CorpusError, CorpusStats};
use crate::generator::{Diagnostics, Example, Generator};
use crate::ingest::{ingest_csv, ingest_jsonl, prepare_table, IngestError, IngestReport, ParseError, RawTable, Rejection, StoredTable};
use crate::serialize::{flatten_table_counted, seq2seq_record};
use crate::table::Table;
use crate::template::SkillKind;
use crate::typeinfer::InferenceConfig;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

impl PipelineError {
    pub fn is_io(&self) -> bool {
        matches!(self, PipelineError::Io { .. })
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

fn open(path: &Path) -> Result<BufReader<File>, PipelineError> {
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

fn create(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_json_line<W: Write, T: serde::Serialize>(out: &mut W, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl InputFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Some(InputFormat::Csv),
            "jsonl" => Some(InputFormat::Jsonl),
            _ => None,
        }
    }
}

fn csv_inputs(path: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(io_err(path))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    Ok(files)
}

/// Reads raw tables, keeps those passing the corpus filter, shuffles their
/// rows and writes the typed store. A CSV input may be a file or a
/// directory of `.csv` files; each file's stem is its table id.
pub fn ingest_to_store(
    input: &Path,
    format: InputFormat,
    out: &Path,
    cfg: &InferenceConfig,
    seed: u64,
) -> Result<IngestReport, PipelineError> {
    let mut report = IngestReport::default();
    let mut raws: Vec<RawTable> = Vec::new();
    match format {
        InputFormat::Csv => {
            for (i, file) in csv_inputs(input)?.iter().enumerate() {
                let id = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                match ingest_csv(open(file)?, &id) {
                    Ok(mut raw) => {
                        raw.source_uri = file.display().to_string();
                        raws.push(raw);
                    }
                    Err(IngestError::Io(e)) => return Err(io_err(file)(e)),
                    Err(e) => report.parse_errors.push(ParseError { line: i + 1, message: format!("{}: {e}", file.display()) }),
                }
            }
        }
        InputFormat::Jsonl => {
            for item in ingest_jsonl(open(input)?) {
                match item {
                    Ok(raw) => raws.push(raw),
                    Err(e) => report.parse_errors.push(e),
                }
            }
        }
    }
    let mut w = create(out)?;
    for raw in &raws {
        match prepare_table(raw, cfg, seed) {
            Ok(t) => {
                report.accepted += 1;
                write_json_line(&mut w, &StoredTable::from_table(&t)).map_err(io_err(out))?;
            }
            Err(reason) => report.rejected.push(Rejection { table_id: raw.table_id.clone(), reason }),
        }
    }
    w.flush().map_err(io_err(out))?;
    Ok(report)
}

pub fn write_store(tables: &[Table], out: &Path) -> Result<(), PipelineError> {
    let mut w = create(out)?;
    for t in tables {
        write_json_line(&mut w, &StoredTable::from_table(t)).map_err(io_err(out))?;
    }
    w.flush().map_err(io_err(out))
}

pub fn read_store(path: &Path, cfg: &InferenceConfig) -> Result<Vec<Table>, PipelineError> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let invalid = |m: String| PipelineError::Invalid(format!("{}:{}: {m}", path.display(), i + 1));
        let stored: StoredTable = serde_json::from_str(&line).map_err(|e| invalid(e.to_string()))?;
        out.push(stored.to_table(cfg).map_err(|e| invalid(e.to_string()))?);
    }
    Ok(out)
}

pub fn pool_path(dir: &Path, skill: SkillKind) -> PathBuf {
    dir.join(format!("{}.jsonl", skill.slug()))
}

/// Per-skill example counts written to a pool, plus generator counters.
#[derive(Clone, Debug, Default)]
pub struct PoolReport {
    pub written: BTreeMap<SkillKind, usize>,
    pub diagnostics: Diagnostics,
}

const CHUNK: usize = 512;

/// Generates up to `quota` examples per skill for every table and writes
/// one pool file per skill. Tables are processed in id order on a pool of
/// `threads` workers; results are merged in id order.
pub fn generate_pool(
    tables: &[Table],
    generator: &Generator,
    quota: &BTreeMap<SkillKind, usize>,
    seed: u64,
    threads: usize,
    out_dir: &Path,
) -> Result<PoolReport, PipelineError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| PipelineError::Invalid(e.to_string()))?;
    let mut order: Vec<&Table> = tables.iter().collect();
    order.sort_by(|a, b| a.id().cmp(b.id()));

    let mut writers = BTreeMap::new();
    for skill in SkillKind::ALL {
        let path = pool_path(out_dir, skill);
        writers.insert(skill, (create(&path)?, path));
    }
    let mut report = PoolReport::default();
    for chunk in order.chunks(CHUNK) {
        let outputs: Vec<_> = pool.install(|| {
            chunk
                .par_iter()
                .map(|t| {
                    let out = generator.generate_all(t, quota, seed);
                    let lines: Vec<(SkillKind, String)> = out
                        .examples
                        .iter()
                        .map(|g| (g.example.skill, serde_json::to_string(&g.example).expect("examples serialize")))
                        .collect();
                    (lines, out.diagnostics)
                })
                .collect()
        });
        for (lines, diag) in outputs {
            report.diagnostics.merge(&diag);
            for (skill, line) in lines {
                let (w, path) = writers.get_mut(&skill).expect("writer per skill");
                w.write_all(line.as_bytes()).and_then(|_| w.write_all(b"\n")).map_err(io_err(path))?;
                *report.written.entry(skill).or_default() += 1;
            }
        }
    }
    for (w, path) in writers.values_mut() {
        w.flush().map_err(io_err(path))?;
    }
    Ok(report)
}

#[derive(Deserialize)]
struct KeyFields<'a> {
    #[serde(borrow)]
    table_id: std::borrow::Cow<'a, str>,
    #[serde(borrow)]
    question: std::borrow::Cow<'a, str>,
}

#[derive(Clone, Copy)]
enum Picked {
    Pool { skill: SkillKind, offset: u64, len: usize },
    External(usize),
}

#[derive(Clone, Debug, Default)]
pub struct SampleReport {
    pub written: usize,
    pub external_errors: Vec<(PathBuf, ParseError)>,
    pub external_tables: usize,
}

/// Path of the inline-table sidecar written next to `corpus`.
pub fn external_tables_path(corpus: &Path) -> PathBuf {
    let mut name = corpus.file_stem().unwrap_or_default().to_os_string();
    name.push(".external_tables.jsonl");
    corpus.with_file_name(name)
}

/// Samples a pool directory to `cfg` and writes the corpus. Only byte
/// offsets of pool lines are held in memory; chosen lines are copied
/// from the pool files.
pub fn sample_pool(pool_dir: &Path, cfg: &CorpusConfig, out: &Path) -> Result<SampleReport, PipelineError> {
    let quotas = cfg.quotas()?;
    let mut report = SampleReport::default();
    let mut externals: Vec<Example> = Vec::new();
    let mut ext_by_skill: BTreeMap<SkillKind, Vec<usize>> = BTreeMap::new();
    let mut ext_tables: BTreeMap<String, RawTable> = BTreeMap::new();
    for (skill, path) in &cfg.external_paths {
        for item in import_external(open(path)?, *skill) {
            match item {
                Ok(e) => {
                    if let Some(t) = e.table {
                        ext_tables.entry(t.table_id.clone()).or_insert(t);
                    }
                    ext_by_skill.entry(*skill).or_default().push(externals.len());
                    externals.push(e.example);
                }
                Err(err) => report.external_errors.push((path.clone(), err)),
            }
        }
    }

    let mut pools: BTreeMap<SkillKind, Vec<(u128, Picked)>> = BTreeMap::new();
    for &skill in quotas.keys() {
        let path = pool_path(pool_dir, skill);
        let mut items = Vec::new();
        if path.exists() {
            let mut r = open(&path)?;
            let mut offset = 0u64;
            let mut line = String::new();
            loop {
                line.clear();
                let n = r.read_line(&mut line).map_err(io_err(&path))?;
                if n == 0 {
                    break;
                }
                let body = line.trim_end_matches(['\n', '\r']);
                if !body.trim().is_empty() {
                    let k: KeyFields = serde_json::from_str(body)
                        .map_err(|e| PipelineError::Invalid(format!("{}: {e}", path.display())))?;
                    items.push((example_key(&k.table_id, &k.question), Picked::Pool { skill, offset, len: body.len() }));
                }
                offset += n as u64;
            }
        }
        for &i in ext_by_skill.get(&skill).into_iter().flatten() {
            items.push((example_key(&externals[i].table_id, &externals[i].question), Picked::External(i)));
        }
        pools.insert(skill, items);
    }
    let picked = sample_keyed(pools, &quotas, cfg.seed)?;

    let mut readers: BTreeMap<SkillKind, (File, PathBuf)> = BTreeMap::new();
    let mut w = create(out)?;
    let mut buf = Vec::new();
    for item in &picked {
        match *item {
            Picked::Pool { skill, offset, len } => {
                if !readers.contains_key(&skill) {
                    let path = pool_path(pool_dir, skill);
                    readers.insert(skill, (File::open(&path).map_err(io_err(&path))?, path));
                }
                let (f, path) = readers.get_mut(&skill).expect("reader opened");
                buf.resize(len, 0);
                f.seek(SeekFrom::Start(offset)).and_then(|_| f.read_exact(&mut buf)).map_err(io_err(path))?;
                w.write_all(&buf).and_then(|_| w.write_all(b"\n")).map_err(io_err(out))?;
            }
            Picked::External(i) => write_json_line(&mut w, &externals[i]).map_err(io_err(out))?,
        }
    }
    w.flush().map_err(io_err(out))?;
    report.written = picked.len();

    let used: BTreeSet<&str> = picked
        .iter()
        .filter_map(|p| match p {
            Picked::External(i) => Some(externals[*i].table_id.as_str()),
            Picked::Pool { .. } => None,
        })
        .collect();
    ext_tables.retain(|id, _| used.contains(id.as_str()));
    if !ext_tables.is_empty() {
        let side = external_tables_path(out);
        let mut w = create(&side)?;
        for t in ext_tables.values() {
            let stored = StoredTable { table_id: t.table_id.clone(), header: t.header.clone(), rows: t.rows.clone(), dtypes: None };
            write_json_line(&mut w, &stored).map_err(io_err(&side))?;
        }
        w.flush().map_err(io_err(&side))?;
        report.external_tables = ext_tables.len();
    }
    Ok(report)
}

#[derive(Clone, Debug, Default)]
pub struct ExportReport {
    pub written: usize,
    pub missing_tables: usize,
    pub pipe_replacements: usize,
}

/// Renders each corpus example as a `{input, target}` pair. Examples whose
/// table is in none of `tables` are skipped and counted.
pub fn export(
    corpus: &Path,
    tables: &[PathBuf],
    out: &Path,
    lowercase: bool,
    cfg: &InferenceConfig,
) -> Result<ExportReport, PipelineError> {
    let mut by_id: BTreeMap<String, Table> = BTreeMap::new();
    for path in tables {
        for t in read_store(path, cfg)? {
            by_id.entry(t.id().to_string()).or_insert(t);
        }
    }
    let mut report = ExportReport::default();
    let mut w = create(out)?;
    for item in read_corpus(open(corpus)?) {
        let e = item.map_err(|e| PipelineError::Invalid(format!("{}: {e}", corpus.display())))?;
        let Some(t) = by_id.get(&e.table_id) else {
            report.missing_tables += 1;
            continue;
        };
        let rec = seq2seq_record(&e.question, t, &e.answers, lowercase)
            .map_err(|err| PipelineError::Invalid(format!("{}: {}: {err}", corpus.display(), e.table_id)))?;
        report.pipe_replacements += flatten_table_counted(t).1;
        write_json_line(&mut w, &rec).map_err(io_err(out))?;
        report.written += 1;
    }
    w.flush().map_err(io_err(out))?;
    Ok(report)
}

pub fn stats_file(corpus: &Path) -> Result<CorpusStats, PipelineError> {
    let mut s = CorpusStats::default();
    for item in read_corpus(open(corpus)?) {
        s.add(&item.map_err(|e| PipelineError::Invalid(format!("{}: {e}", corpus.display())))?);
    }
    Ok(s)
}

pub fn score_files(pred: &Path, gold: &Path) -> Result<crate::eval::ScoreReport, PipelineError> {
    crate::eval::score(open(pred)?, open(gold)?).map_err(|e| match e {
        crate::eval::ScoreError::Io(source) => PipelineError::Io { path: pred.to_path_buf(), source },
        other => PipelineError::Invalid(other.to_string()),
    })
}
