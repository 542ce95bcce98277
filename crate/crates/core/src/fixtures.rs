//! Fixture tables for tests, demos and benchmarks.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::ingest::RawTable;
use crate::table::{DataType, Table};
use crate::typeinfer::InferenceConfig;

/// The five-row company table used throughout the test suite.
///
/// | Company | Country | Founded | Profit |
/// |---|---|---|---|
/// | Alpha | United States | 1990-01-01 | 10 |
/// | Beta | France | 1985-06-15 | 20 |
/// | Gamma | United States | 2000-03-10 | 5 |
/// | Delta | Japan | 1995-12-01 | 20 |
/// | Epsilon | France | 2010-07-07 | 15 |
pub fn t_fix() -> Table {
    let header: Vec<String> = ["Company", "Country", "Founded", "Profit"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = [
        ["Alpha", "United States", "1990-01-01", "10"],
        ["Beta", "France", "1985-06-15", "20"],
        ["Gamma", "United States", "2000-03-10", "5"],
        ["Delta", "Japan", "1995-12-01", "20"],
        ["Epsilon", "France", "2010-07-07", "15"],
    ]
    .iter()
    .map(|r| r.map(String::from).to_vec())
    .collect();
    let dtypes = [DataType::Text, DataType::Text, DataType::Date, DataType::Number];
    Table::from_typed("T_fix", &header, &dtypes, &rows).expect("fixture is well formed").into_fixture()
}

/// Shape of tables produced by [`random_table`].
#[derive(Clone, Copy, Debug)]
pub struct RandomTableSpec {
    pub min_rows: usize,
    pub max_rows: usize,
    pub min_cols: usize,
    pub max_cols: usize,
}

impl RandomTableSpec {
    /// Tables that pass the corpus filter.
    pub const CORPUS: RandomTableSpec =
        RandomTableSpec { min_rows: 8, max_rows: 30, min_cols: 3, max_cols: 7 };
    /// Small tables for exhaustive checking.
    pub const SMALL: RandomTableSpec =
        RandomTableSpec { min_rows: 3, max_rows: 10, min_cols: 3, max_cols: 6 };
}

const ENTITIES: [&str; 40] = [
    "Aurora", "Basalt", "Cobalt", "Dune", "Ember", "Fjord", "Garnet", "Harbor", "Iris", "Juniper",
    "Kestrel", "Lumen", "Meridian", "Nimbus", "Onyx", "Prism", "Quartz", "Raven", "Sierra", "Tundra",
    "Umber", "Vertex", "Willow", "Xenon", "Yarrow", "Zephyr", "Atlas", "Beacon", "Cinder", "Delta",
    "Echo", "Falcon", "Glacier", "Helix", "Indigo", "Jasper", "Krypton", "Lotus", "Mosaic", "Nova",
];
const CATEGORIES: [&str; 8] =
    ["France", "Japan", "Brazil", "Canada", "Kenya", "Norway", "United States", "India"];
const MONTHS: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
];
const TEXT_NAMES: [&str; 6] = ["Country", "Region", "Genre", "Owner", "League", "Status"];
const NUMBER_NAMES: [&str; 6] = ["Profit", "Sales", "Attendance", "Score", "Population", "Rank"];
const DATE_NAMES: [&str; 5] = ["Date", "Founded", "Released", "Opened", "Founded Year"];

#[derive(Clone, Copy)]
enum Kind {
    Category,
    Amount,
    Decimal,
    Big,
    IsoDate,
    LongDate,
    Year,
}

fn cell<R: Rng + ?Sized>(kind: Kind, rng: &mut R) -> String {
    if rng.random_bool(0.03) {
        return ["", "n/a", "—"].choose(rng).unwrap().to_string();
    }
    match kind {
        Kind::Category => CATEGORIES[..4 + rng.random_range(0..4)].choose(rng).unwrap().to_string(),
        Kind::Amount => rng.random_range(0..40u32).to_string(),
        Kind::Decimal => format!("{}.{}", rng.random_range(0..100u32), rng.random_range(0..100u32)),
        Kind::Big => {
            let v: u64 = rng.random_range(1_000..5_000_000);
            let s = v.to_string();
            let mut out = String::new();
            for (i, ch) in s.chars().enumerate() {
                if i > 0 && (s.len() - i) % 3 == 0 {
                    out.push(',');
                }
                out.push(ch);
            }
            out
        }
        Kind::IsoDate => format!(
            "{}-{:02}-{:02}",
            rng.random_range(1950..2022u32),
            rng.random_range(1..=12u32),
            rng.random_range(1..=28u32)
        ),
        Kind::LongDate => format!(
            "{} {}, {}",
            MONTHS.choose(rng).unwrap(),
            rng.random_range(1..=28u32),
            rng.random_range(1950..2022u32)
        ),
        Kind::Year => rng.random_range(1900..2022u32).to_string(),
    }
}

/// A random mixed-type table. The first column holds distinct entity
/// names; the rest are categorical text, numbers or dates. A few cells are
/// blank or `n/a`. Column types are inferred, as for ingested tables.
pub fn random_table<R: Rng + ?Sized>(id: &str, spec: RandomTableSpec, rng: &mut R) -> Table {
    let n_rows = rng.random_range(spec.min_rows..=spec.max_rows).min(ENTITIES.len());
    let n_cols = rng.random_range(spec.min_cols..=spec.max_cols).max(1);
    let mut header = vec!["Name".to_string()];
    let mut kinds = Vec::new();
    for c in 1..n_cols {
        let (name, kind) = match rng.random_range(0..7) {
            0 | 1 => (*TEXT_NAMES.choose(rng).unwrap(), Kind::Category),
            2 => (*NUMBER_NAMES.choose(rng).unwrap(), Kind::Amount),
            3 => (*NUMBER_NAMES.choose(rng).unwrap(), if rng.random_bool(0.5) { Kind::Big } else { Kind::Decimal }),
            4 => (*DATE_NAMES.choose(rng).unwrap(), Kind::IsoDate),
            5 => (*DATE_NAMES.choose(rng).unwrap(), Kind::LongDate),
            _ => ("Year", Kind::Year),
        };
        let mut name = name.to_string();
        if header.contains(&name) && rng.random_bool(0.8) {
            name = format!("{name} {c}");
        }
        header.push(name);
        kinds.push(kind);
    }
    let mut names: Vec<&str> = ENTITIES.to_vec();
    let mut rows = Vec::with_capacity(n_rows);
    for r in 0..n_rows {
        let pick = rng.random_range(r..names.len());
        names.swap(r, pick);
        let mut row = vec![names[r].to_string()];
        row.extend(kinds.iter().map(|&k| cell(k, rng)));
        rows.push(row);
    }
    let raw = RawTable { table_id: id.to_string(), header, rows, source_uri: String::new() };
    Table::from_raw(&raw, &InferenceConfig::default()).expect("generated tables are rectangular")
}
