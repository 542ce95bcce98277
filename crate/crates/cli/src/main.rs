use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use tabsynth::corpus::CorpusConfig;
use tabsynth::generator::{uniform_quota, GeneratorConfig};
use tabsynth::pipeline::{self, InputFormat, PipelineError};
use tabsynth::template::{builtin_templates, load_templates};
use tabsynth::{Generator, InferenceConfig, SkillKind};

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "tabsynth", version, about = "Synthesize table QA corpora with verified answers")]
#[command(args_override_self = true)]
struct Cli {
    /// JSON object of flag values; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate and filter raw tables, shuffle their rows, write a table store.
    Ingest {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long, value_parser = ["csv", "jsonl"])]
        format: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate per-skill example pools from a table store.
    Generate {
        #[arg(long)]
        tables: PathBuf,
        /// Template file replacing the built-in set.
        #[arg(long)]
        templates: Option<PathBuf>,
        /// Examples per skill per table.
        #[arg(long)]
        quota: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Worker count; defaults to TABSYNTH_THREADS or the CPU count.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Sample a corpus from pools to a per-skill distribution.
    Sample {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        total: usize,
        /// Skill → weight, as inline JSON or a path to a JSON file.
        #[arg(long)]
        proportions: Option<String>,
        /// Comma-separated skills to leave out.
        #[arg(long, value_delimiter = ',')]
        disable: Vec<String>,
        /// `<Skill>=<path>` external QA pairs counted toward that skill.
        #[arg(long, value_name = "SKILL=PATH")]
        external: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a corpus as seq2seq input/target pairs.
    Export {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        tables: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        lowercase: bool,
    },
    /// Print corpus statistics as JSON.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Denotation accuracy of predictions against gold answers.
    Score {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Validation(String),
    Io(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

fn config_value_args(key: &str, value: &serde_json::Value, out: &mut Vec<OsString>) {
    let flag = format!("--{}", key.replace('_', "-"));
    match value {
        serde_json::Value::Bool(true) => out.push(flag.into()),
        serde_json::Value::Bool(false) | serde_json::Value::Null => {}
        serde_json::Value::Array(items) => {
            for item in items {
                config_value_args(key, item, out);
            }
        }
        serde_json::Value::String(s) => {
            out.push(flag.into());
            out.push(s.into());
        }
        other => {
            out.push(flag.into());
            out.push(other.to_string().into());
        }
    }
}

/// Splices flags from `--config` in front of the subcommand's own flags, so
/// command-line values override them. Keys the subcommand does not accept
/// are ignored, which lets one file serve every stage.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            path = strs.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let mut sub_pos = None;
    let mut i = 1;
    while i < strs.len() {
        if strs[i] == "--config" {
            i += 2;
            continue;
        }
        if !strs[i].starts_with('-') {
            sub_pos = Some(i);
            break;
        }
        i += 1;
    }
    let Some(sub_pos) = sub_pos else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::Io(format!("{path}: {e}")))?;
    let obj: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{path}: {e}")))?;
    let cmd = Cli::command();
    let Some(sub) = cmd.find_subcommand(&strs[sub_pos]) else { return Ok(args) };
    let known: Vec<String> = sub.get_arguments().filter_map(|a| a.get_long().map(str::to_string)).collect();
    let mut injected = Vec::new();
    for (k, v) in &obj {
        if k == "config" {
            continue;
        }
        if known.contains(&k.replace('_', "-")) {
            config_value_args(k, v, &mut injected);
        }
    }
    let mut out = args;
    out.splice(sub_pos + 1..sub_pos + 1, injected);
    Ok(out)
}

fn thread_count(flag: Option<usize>) -> Result<usize, Failure> {
    if let Some(n) = flag {
        return Ok(n.max(1));
    }
    match std::env::var("TABSYNTH_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(|n| n.max(1))
            .map_err(|_| Failure::Usage(format!("TABSYNTH_THREADS={v:?} is not a count"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn parse_skill(s: &str) -> Result<SkillKind, Failure> {
    SkillKind::parse(s).ok_or_else(|| Failure::Usage(format!("unknown skill {s:?}")))
}

fn parse_proportions(arg: &str) -> Result<BTreeMap<SkillKind, f64>, Failure> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Failure::Io(format!("{arg}: {e}")))?
    };
    let raw: BTreeMap<String, f64> =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("--proportions: {e}")))?;
    raw.iter().map(|(k, &v)| Ok((parse_skill(k)?, v))).collect()
}

fn print_json(v: &serde_json::Value) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(v).map_err(|e| Failure::Validation(e.to_string()))?);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let infer = InferenceConfig::default();
    match cli.command {
        Command::Ingest { input, format, out, seed } => {
            let format = InputFormat::parse(&format).ok_or_else(|| Failure::Usage(format!("--format {format}")))?;
            let report = pipeline::ingest_to_store(&input, format, &out, &infer, seed)?;
            for r in &report.rejected {
                eprintln!("rejected {}: {}", r.table_id, r.reason);
            }
            for e in &report.parse_errors {
                eprintln!("malformed input: {e}");
            }
            eprintln!(
                "ingest: {} accepted, {} rejected, {} malformed",
                report.accepted,
                report.rejected.len(),
                report.parse_errors.len()
            );
            if !report.parse_errors.is_empty() {
                return Err(Failure::Validation(format!("{} malformed input records", report.parse_errors.len())));
            }
        }
        Command::Generate { tables, templates, quota, seed, out, threads } => {
            let set = match &templates {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
                    load_templates(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?
                }
                None => builtin_templates(),
            };
            let generator = Generator::new(set, GeneratorConfig::default());
            let tables = pipeline::read_store(&tables, &infer)?;
            let report = pipeline::generate_pool(&tables, &generator, &uniform_quota(quota), seed, thread_count(threads)?, &out)?;
            for (key, n) in &report.diagnostics.counts {
                eprintln!("diagnostic {key}: {n}");
            }
            let written: Vec<String> = report.written.iter().map(|(k, n)| format!("{}={n}", k.label())).collect();
            eprintln!("generate: {} tables, pooled {}", tables.len(), written.join(" "));
        }
        Command::Sample { pool, total, proportions, disable, external, seed, out } => {
            let mut cfg = CorpusConfig::new(total, seed);
            if let Some(p) = proportions {
                cfg.proportions = parse_proportions(&p)?;
            }
            for d in disable.iter().filter(|d| !d.trim().is_empty()) {
                cfg.disable(parse_skill(d.trim())?);
            }
            for spec in &external {
                let (skill, path) =
                    spec.split_once('=').ok_or_else(|| Failure::Usage(format!("--external {spec}: expected SKILL=PATH")))?;
                cfg.external_paths.push((parse_skill(skill)?, PathBuf::from(path)));
            }
            let report = pipeline::sample_pool(&pool, &cfg, &out)?;
            for (path, e) in &report.external_errors {
                eprintln!("malformed external record {}: {e}", path.display());
            }
            if report.external_tables > 0 {
                eprintln!(
                    "sample: wrote {} inline tables to {}",
                    report.external_tables,
                    pipeline::external_tables_path(&out).display()
                );
            }
            eprintln!("sample: {} examples", report.written);
        }
        Command::Export { corpus, tables, out, lowercase } => {
            let report = pipeline::export(&corpus, &tables, &out, lowercase, &infer)?;
            if report.missing_tables > 0 {
                eprintln!("export: skipped {} examples whose table is not in the store", report.missing_tables);
            }
            if report.pipe_replacements > 0 {
                eprintln!("export: replaced {} reserved `|` characters in cells", report.pipe_replacements);
            }
            eprintln!("export: {} records", report.written);
        }
        Command::Stats { corpus } => print_json(&pipeline::stats_file(&corpus)?.report())?,
        Command::Score { pred, gold } => {
            let report = pipeline::score_files(&pred, &gold)?;
            print_json(&serde_json::to_value(report).map_err(|e| Failure::Validation(e.to_string()))?)?
        }
    }
    Ok(())
}

fn fail(code: u8, msg: &str) -> ExitCode {
    eprintln!("tabsynth: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let args = match expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(Failure::Io(m)) => return fail(EXIT_IO, &m),
        Err(Failure::Validation(m) | Failure::Usage(m)) => return fail(EXIT_USAGE, &m),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => fail(EXIT_USAGE, &m),
        Err(Failure::Validation(m)) => fail(EXIT_VALIDATION, &m),
        Err(Failure::Io(m)) => fail(EXIT_IO, &m),
    }
}
