//! Skill-proportional sampling of example pools into a corpus.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::generator::{Example, Source};
use crate::ingest::{ParseError, RawTable};
use crate::rng::derive_rng;
use crate::template::SkillKind;
use crate::typeinfer::parse_number;
use crate::value::Number;

/// Share of each skill in the default corpus, in percent.
pub const DEFAULT_PROPORTIONS: [(SkillKind, f64); 7] = [
    (SkillKind::Conjunction, 21.6),
    (SkillKind::Quantifiers, 10.3),
    (SkillKind::TemporalComparison, 14.5),
    (SkillKind::DateDifference, 5.7),
    (SkillKind::Counting, 18.0),
    (SkillKind::NumericalOperation, 15.9),
    (SkillKind::NumericalComparison, 14.0),
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("pool for {skill:?} has {available} examples, {needed} needed")]
    PoolExhausted { skill: SkillKind, needed: usize, available: usize },
    #[error("invalid corpus config: {0}")]
    Config(String),
}

/// Sampling configuration. Proportions need not sum to one; the enabled
/// entries are renormalized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub total: usize,
    pub proportions: BTreeMap<SkillKind, f64>,
    pub enabled: BTreeSet<SkillKind>,
    pub seed: u64,
    #[serde(default)]
    pub external_paths: Vec<(SkillKind, PathBuf)>,
}

impl CorpusConfig {
    pub fn new(total: usize, seed: u64) -> Self {
        CorpusConfig {
            total,
            proportions: DEFAULT_PROPORTIONS.into_iter().collect(),
            enabled: SkillKind::ALL.into_iter().collect(),
            seed,
            external_paths: Vec::new(),
        }
    }

    pub fn disable(&mut self, skill: SkillKind) {
        self.enabled.remove(&skill);
    }

    /// Per-skill example counts summing exactly to `total`.
    pub fn quotas(&self) -> Result<BTreeMap<SkillKind, usize>, CorpusError> {
        if self.total == 0 {
            return Err(CorpusError::Config("total must be at least 1".into()));
        }
        let mut weights = BTreeMap::new();
        for &skill in &self.enabled {
            let p = self.proportions.get(&skill).copied().unwrap_or(0.0);
            if !p.is_finite() || p < 0.0 {
                return Err(CorpusError::Config(format!("proportion for {} is {p}", skill.label())));
            }
            weights.insert(skill, exact(p));
        }
        if weights.values().all(|w| w.ratio().is_zero()) {
            return Err(CorpusError::Config("no enabled skill has a positive proportion".into()));
        }
        Ok(largest_remainder(self.total, &weights))
    }
}

fn exact(p: f64) -> Number {
    // Shortest round-trip decimal, so 21.6 means 216/10 rather than its binary neighbour.
    parse_number(&format!("{p}")).unwrap_or_else(Number::zero)
}

/// Apportions `total` by `weights`: floors first, then one extra unit to
/// the largest remainders, ties broken by key order.
pub fn largest_remainder<K: Ord + Copy>(total: usize, weights: &BTreeMap<K, Number>) -> BTreeMap<K, usize> {
    let sum = weights.values().fold(num_rational::BigRational::zero(), |acc, w| acc + w.ratio());
    let total_big = BigInt::from(total);
    let mut out = BTreeMap::new();
    let mut rems = Vec::new();
    let mut assigned = 0usize;
    for (&k, w) in weights {
        let share = w.ratio() * &total_big / &sum;
        let (q, r) = share.numer().div_mod_floor(share.denom());
        let q = q.to_usize().expect("quota fits");
        assigned += q;
        out.insert(k, q);
        rems.push((num_rational::BigRational::new(r, share.denom().clone()), k));
    }
    // Stable sort keeps key order among equal remainders.
    rems.sort_by(|a, b| b.0.cmp(&a.0));
    for (rem, k) in rems.into_iter().take(total - assigned) {
        debug_assert!(!rem.is_negative());
        *out.get_mut(&k).unwrap() += 1;
    }
    out
}

/// Uniform fixed-size sample of a stream (Algorithm R).
#[derive(Clone, Debug)]
pub struct Reservoir<T> {
    capacity: usize,
    seen: usize,
    items: Vec<T>,
}

impl<T> Reservoir<T> {
    pub fn new(capacity: usize) -> Self {
        Reservoir { capacity, seen: 0, items: Vec::with_capacity(capacity.min(1 << 20)) }
    }

    pub fn offer<R: Rng + ?Sized>(&mut self, item: T, rng: &mut R) {
        self.seen += 1;
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else if self.capacity > 0 {
            let j = rng.random_range(0..self.seen);
            if j < self.capacity {
                self.items[j] = item;
            }
        }
    }

    pub fn seen(&self) -> usize {
        self.seen
    }

    pub fn into_items(self) -> Vec<T> {
        self.items
    }
}

/// Dedup key for an example: `table_id` plus question text.
pub fn example_key(table_id: &str, question: &str) -> u128 {
    let mut h = Sha256::new();
    h.update((table_id.len() as u64).to_le_bytes());
    h.update(table_id.as_bytes());
    h.update(question.as_bytes());
    let d = h.finalize();
    u128::from_le_bytes(d[..16].try_into().expect("16 bytes"))
}

/// Samples `quotas[skill]` distinct items from each pool and shuffles the
/// union. Items are anything keyed by [`example_key`], so callers may
/// sample file offsets instead of whole examples.
pub fn sample_keyed<T, I>(
    pools: BTreeMap<SkillKind, I>,
    quotas: &BTreeMap<SkillKind, usize>,
    seed: u64,
) -> Result<Vec<T>, CorpusError>
where
    I: IntoIterator<Item = (u128, T)>,
{
    let mut pools = pools;
    let mut picked = Vec::new();
    let mut seen_keys = HashSet::new();
    for (&skill, &quota) in quotas {
        if quota == 0 {
            continue;
        }
        let mut rng = derive_rng(seed, "", &format!("sample/{}", skill.slug()));
        let mut res = Reservoir::new(quota);
        if let Some(pool) = pools.remove(&skill) {
            for (key, item) in pool {
                if seen_keys.insert(key) {
                    res.offer(item, &mut rng);
                }
            }
        }
        if res.seen() < quota {
            return Err(CorpusError::PoolExhausted { skill, needed: quota, available: res.seen() });
        }
        picked.extend(res.into_items());
    }
    picked.shuffle(&mut derive_rng(seed, "", "sample/shuffle"));
    Ok(picked)
}

/// In-memory sampling of example pools to `cfg`'s quotas.
pub fn sample_corpus<I>(pools: BTreeMap<SkillKind, I>, cfg: &CorpusConfig) -> Result<Vec<Example>, CorpusError>
where
    I: IntoIterator<Item = Example>,
{
    let quotas = cfg.quotas()?;
    let keyed: BTreeMap<SkillKind, Vec<(u128, Example)>> = pools
        .into_iter()
        .map(|(k, pool)| (k, pool.into_iter().map(|e| (example_key(&e.table_id, &e.question), e)).collect()))
        .collect();
    sample_keyed(keyed, &quotas, cfg.seed)
}

#[derive(Deserialize)]
struct ExternalRecord {
    question: String,
    answers: Vec<String>,
    table_id: String,
    #[serde(default)]
    table: Option<RawTableBody>,
}

#[derive(Deserialize)]
struct RawTableBody {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// An imported example and the table shipped alongside it, if any.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExternalExample {
    pub example: Example,
    pub table: Option<RawTable>,
}

/// Wraps external QA records as examples of `skill`. Answers are taken as
/// given. Bad lines are reported and skipped.
pub fn import_external<R: BufRead>(
    stream: R,
    skill: SkillKind,
) -> impl Iterator<Item = Result<ExternalExample, ParseError>> {
    stream.lines().enumerate().filter_map(move |(i, line)| {
        let line_no = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(ParseError { line: line_no, message: e.to_string() })),
        };
        if line.trim().is_empty() {
            return None;
        }
        let rec: ExternalRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => return Some(Err(ParseError { line: line_no, message: e.to_string() })),
        };
        if rec.answers.is_empty() {
            return Some(Err(ParseError { line: line_no, message: "answers is empty".into() }));
        }
        let table = rec.table.map(|t| RawTable {
            table_id: rec.table_id.clone(),
            header: t.header,
            rows: t.rows,
            source_uri: String::new(),
        });
        let example = Example {
            table_id: rec.table_id,
            skill,
            template_id: "external".into(),
            question: rec.question,
            answers: rec.answers,
            source: Source::External,
            provenance: "external".into(),
        };
        Some(Ok(ExternalExample { example, table }))
    })
}

/// Writes one JSON example per line.
pub fn write_corpus<'a, W: Write>(examples: impl IntoIterator<Item = &'a Example>, mut out: W) -> io::Result<()> {
    for e in examples {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_corpus<R: BufRead>(stream: R) -> impl Iterator<Item = Result<Example, ParseError>> {
    stream.lines().enumerate().filter_map(|(i, line)| {
        let line_no = i + 1;
        match line {
            Err(e) => Some(Err(ParseError { line: line_no, message: e.to_string() })),
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(serde_json::from_str(&l).map_err(|e| ParseError { line: line_no, message: e.to_string() })),
        }
    })
}

/// Summary counts over a corpus, accumulated one example at a time.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total: usize,
    pub per_skill: BTreeMap<SkillKind, usize>,
    pub per_source: BTreeMap<Source, usize>,
    pub per_table: BTreeMap<String, usize>,
    /// Number of answer items → number of examples.
    pub answer_lengths: BTreeMap<usize, usize>,
    pub quantifier_yes: usize,
    pub quantifier_no: usize,
}

impl CorpusStats {
    pub fn add(&mut self, e: &Example) {
        self.total += 1;
        *self.per_skill.entry(e.skill).or_default() += 1;
        *self.per_source.entry(e.source).or_default() += 1;
        *self.per_table.entry(e.table_id.clone()).or_default() += 1;
        *self.answer_lengths.entry(e.answers.len()).or_default() += 1;
        if e.skill == SkillKind::Quantifiers {
            match e.answers.first().map(String::as_str) {
                Some("Yes") => self.quantifier_yes += 1,
                Some("No") => self.quantifier_no += 1,
                _ => {}
            }
        }
    }

    pub fn proportion(&self, skill: SkillKind) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.per_skill.get(&skill).copied().unwrap_or(0) as f64 / self.total as f64
    }

    pub fn quantifier_yes_rate(&self) -> Option<f64> {
        let n = self.quantifier_yes + self.quantifier_no;
        (n > 0).then(|| self.quantifier_yes as f64 / n as f64)
    }

    /// JSON report; tables are summarized by their example-count histogram.
    pub fn report(&self) -> serde_json::Value {
        let mut per_table_hist: BTreeMap<usize, usize> = BTreeMap::new();
        for &n in self.per_table.values() {
            *per_table_hist.entry(n).or_default() += 1;
        }
        let per_skill: BTreeMap<&str, serde_json::Value> = self
            .per_skill
            .iter()
            .map(|(k, &n)| (k.label(), serde_json::json!({"count": n, "proportion": self.proportion(*k)})))
            .collect();
        serde_json::json!({
            "total": self.total,
            "per_skill": per_skill,
            "per_source": self.per_source,
            "tables": self.per_table.len(),
            "examples_per_table": per_table_hist,
            "answer_lengths": self.answer_lengths,
            "quantifier_yes_rate": self.quantifier_yes_rate(),
        })
    }
}

pub fn stats<'a>(examples: impl IntoIterator<Item = &'a Example>) -> CorpusStats {
    let mut s = CorpusStats::default();
    for e in examples {
        s.add(e);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(table: &str, skill: SkillKind, q: &str) -> Example {
        Example {
            table_id: table.into(),
            skill,
            template_id: "x".into(),
            question: q.into(),
            answers: vec!["a".into()],
            source: Source::Synthetic,
            provenance: String::new(),
        }
    }

    #[test]
    fn default_quotas_for_one_million() {
        let q = CorpusConfig::new(1_000_000, 0).quotas().unwrap();
        assert_eq!(
            q.values().copied().collect::<Vec<_>>(),
            [216_000, 103_000, 145_000, 57_000, 180_000, 159_000, 140_000]
        );
    }

    #[test]
    fn disabled_skill_renormalizes() {
        let mut cfg = CorpusConfig::new(1_000, 0);
        cfg.disable(SkillKind::Counting);
        let q = cfg.quotas().unwrap();
        assert!(!q.contains_key(&SkillKind::Counting));
        assert_eq!(q.values().sum::<usize>(), 1_000);
        // 216 / 820 of 1000 = 263.41...
        assert_eq!(q[&SkillKind::Conjunction], 263);
    }

    #[test]
    fn remainder_ties_follow_skill_order() {
        let mut cfg = CorpusConfig::new(2, 0);
        cfg.proportions = SkillKind::ALL.iter().map(|&k| (k, 1.0)).collect();
        let q = cfg.quotas().unwrap();
        assert_eq!(q[&SkillKind::Conjunction], 1);
        assert_eq!(q[&SkillKind::Quantifiers], 1);
        assert_eq!(q.values().sum::<usize>(), 2);
    }

    #[test]
    fn config_errors() {
        assert!(CorpusConfig::new(0, 0).quotas().is_err());
        let mut cfg = CorpusConfig::new(5, 0);
        cfg.enabled.clear();
        assert!(cfg.quotas().is_err());
        let mut cfg = CorpusConfig::new(5, 0);
        cfg.proportions.insert(SkillKind::Counting, -1.0);
        assert!(cfg.quotas().is_err());
    }

    #[test]
    fn sampling_dedups_and_reports_exhaustion() {
        let mut cfg = CorpusConfig::new(3, 1);
        cfg.enabled = [SkillKind::Counting].into();
        let pool = vec![ex("t", SkillKind::Counting, "q1"), ex("t", SkillKind::Counting, "q1"), ex("t", SkillKind::Counting, "q2")];
        let err = sample_corpus([(SkillKind::Counting, pool.clone())].into(), &cfg).unwrap_err();
        assert_eq!(err, CorpusError::PoolExhausted { skill: SkillKind::Counting, needed: 3, available: 2 });
        cfg.total = 2;
        let got = sample_corpus([(SkillKind::Counting, pool)].into(), &cfg).unwrap();
        let mut qs: Vec<_> = got.iter().map(|e| e.question.as_str()).collect();
        qs.sort();
        assert_eq!(qs, ["q1", "q2"]);
    }

    #[test]
    fn reservoir_is_roughly_uniform() {
        let mut counts = [0usize; 10];
        for s in 0..4000 {
            let mut rng = derive_rng(s, "", "res");
            let mut r = Reservoir::new(2);
            for i in 0..10 {
                r.offer(i, &mut rng);
            }
            for i in r.into_items() {
                counts[i] += 1;
            }
        }
        // Expected 800 each.
        assert!(counts.iter().all(|&c| (700..900).contains(&c)), "{counts:?}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let pools = || -> BTreeMap<SkillKind, Vec<Example>> {
            SkillKind::ALL
                .iter()
                .map(|&k| (k, (0..50).map(|i| ex(&format!("t{i}"), k, k.slug())).collect()))
                .collect()
        };
        let cfg = CorpusConfig::new(100, 9);
        let a = sample_corpus(pools(), &cfg).unwrap();
        let b = sample_corpus(pools(), &cfg).unwrap();
        assert_eq!(a, b);
        let s = stats(&a);
        assert_eq!(s.total, 100);
        assert_eq!(s.per_skill[&SkillKind::Conjunction], 22);
        let mut buf = Vec::new();
        write_corpus(&a, &mut buf).unwrap();
        let back: Vec<Example> = read_corpus(&buf[..]).map(Result::unwrap).collect();
        assert_eq!(back, a);
    }

    #[test]
    fn external_import() {
        let src = concat!(
            r#"{"question":"q1","answers":["1"],"table_id":"a"}"#, "\n",
            r#"{"question":"q2","answers":["x","y"],"table_id":"b","table":{"header":["h"],"rows":[["x"]]}}"#, "\n",
            r#"{"question":"q3","table_id":"c"}"#, "\n",
            r#"{"question":"q4","answers":["2"],"table_id":"d"}"#, "\n",
        );
        let items: Vec<_> = import_external(src.as_bytes(), SkillKind::Counting).collect();
        assert_eq!(items.len(), 4);
        assert_eq!(items[2].as_ref().unwrap_err().line, 3);
        let ok: Vec<_> = items.into_iter().filter_map(Result::ok).collect();
        assert_eq!(ok.len(), 3);
        assert!(ok.iter().all(|e| e.example.source == Source::External && e.example.provenance == "external"));
        assert_eq!(ok[1].table.as_ref().unwrap().header, ["h"]);
    }

    #[test]
    fn stats_yes_rate() {
        let mut a = ex("t", SkillKind::Quantifiers, "a");
        a.answers = vec!["Yes".into()];
        let mut b = ex("t", SkillKind::Quantifiers, "b");
        b.answers = vec!["No".into()];
        let s = stats([&a, &b, &ex("u", SkillKind::Counting, "c")]);
        assert_eq!(s.quantifier_yes_rate(), Some(0.5));
        assert_eq!(s.per_table["t"], 2);
        assert_eq!(s.report()["tables"], 2);
    }
}
