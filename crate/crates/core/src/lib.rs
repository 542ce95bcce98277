//! Deterministic synthesis of table question-answering corpora.
//!
//! Tables are ingested and typed, templates are instantiated against them,
//! and every answer is computed by the executable oracles in [`oracle`].

pub mod condition;
pub mod corpus;
pub mod eval;
pub mod fixtures;
pub mod generator;
pub mod ingest;
pub mod oracle;
pub mod pipeline;
pub mod rng;
pub mod serialize;
pub mod table;
pub mod template;
pub mod typeinfer;
pub mod value;

pub use condition::{Condition, ConditionKind, DateOp, NumOp};
pub use corpus::{CorpusConfig, CorpusError, CorpusStats};
pub use eval::denotation_match;
pub use generator::{Example, GeneratedExample, Generator, GeneratorConfig, Source};
pub use ingest::{ingest_csv, ingest_jsonl, RawTable, StoredTable};
pub use serialize::{flatten_table, render_answer, render_model_input};
pub use table::{Cell, Column, DataType, Table, TableError};
pub use template::{Binding, Operator, SkillKind, Template};
pub use typeinfer::{infer_column_type, parse_date, parse_number, InferenceConfig};
pub use value::{Number, PartialDate, Value};
