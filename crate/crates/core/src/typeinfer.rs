//! Column type annotation and cell parsing.

use num_bigint::BigInt;

use crate::table::DataType;
use crate::value::{Number, PartialDate, Value};

const CURRENCY: [char; 3] = ['$', '€', '£'];

pub const DEFAULT_DATE_CUES: [&str; 6] = ["year", "date", "founded", "born", "died", "since"];

/// Knobs for [`infer_column_type_with`].
#[derive(Clone, Debug)]
pub struct InferenceConfig {
    /// Minimum fraction of non-empty cells that must parse for a typed column.
    pub threshold: f64,
    /// Lower-case substrings of a column name that make Date win over Number.
    pub date_cues: Vec<String>,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            threshold: 0.8,
            date_cues: DEFAULT_DATE_CUES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Parses a number written with optional sign, leading currency symbol,
/// comma thousands separators, decimal point and trailing `%`.
///
/// Returns `None` for anything else, including malformed digit grouping
/// such as `1,2`.
pub fn parse_number(s: &str) -> Option<Number> {
    let mut rest = s.trim();
    let mut negative = false;
    let mut take_sign = |rest: &mut &str| {
        if let Some(r) = rest.strip_prefix('-') {
            negative = true;
            *rest = r;
            true
        } else if let Some(r) = rest.strip_prefix('+') {
            *rest = r;
            true
        } else {
            false
        }
    };
    let signed = take_sign(&mut rest);
    if let Some(r) = rest.strip_prefix(CURRENCY) {
        rest = r;
        if !signed {
            take_sign(&mut rest);
        }
    }
    if let Some(r) = rest.strip_suffix('%') {
        rest = r;
    }
    if rest.is_empty() {
        return None;
    }

    let (int_part, frac_part) = match rest.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (rest, None),
    };
    if let Some(f) = frac_part {
        if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
    }
    let int_digits = if int_part.contains(',') {
        let mut groups = int_part.split(',');
        let first = groups.next()?;
        if first.is_empty() || first.len() > 3 || !first.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let mut digits = first.to_string();
        for g in groups {
            if g.len() != 3 || !g.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            digits.push_str(g);
        }
        digits
    } else {
        if !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if int_part.is_empty() && frac_part.is_none() {
            return None;
        }
        int_part.to_string()
    };

    let frac = frac_part.unwrap_or("");
    let all = format!("{int_digits}{frac}");
    let all = if all.is_empty() { "0".to_string() } else { all };
    let mut mantissa: BigInt = all.parse().ok()?;
    if negative {
        mantissa = -mantissa;
    }
    Some(Number::from_scaled(mantissa, frac.len() as u32))
}

fn month_from_name(s: &str) -> Option<u8> {
    const NAMES: [&str; 12] = [
        "january", "february", "march", "april", "may", "june", "july", "august", "september",
        "october", "november", "december",
    ];
    let lower = s.trim_end_matches('.').to_lowercase();
    NAMES
        .iter()
        .position(|full| *full == lower || (lower.len() == 3 && full.starts_with(&lower)))
        .map(|i| i as u8 + 1)
}

fn four_digit_year(s: &str) -> Option<u16> {
    if s.len() == 4 && s.bytes().all(|b| b.is_ascii_digit()) {
        s.parse().ok()
    } else {
        None
    }
}

fn day_number(s: &str) -> Option<u8> {
    if (1..=2).contains(&s.len()) && s.bytes().all(|b| b.is_ascii_digit()) {
        s.parse().ok()
    } else {
        None
    }
}

fn parse_iso(s: &str) -> Option<PartialDate> {
    let b = s.as_bytes();
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
        return None;
    }
    let year = four_digit_year(&s[0..4])?;
    let month = day_number(&s[5..7])?;
    let day = day_number(&s[8..10])?;
    PartialDate::ymd(year, month, day)
}

/// Recognizes, in priority order: `YYYY-MM-DD`, `Month D, YYYY`,
/// `D Month YYYY`, `Month YYYY`, and a bare year in 1000..=2999.
///
/// Slash dates are rejected since day/month order is ambiguous.
pub fn parse_date(s: &str) -> Option<PartialDate> {
    let s = s.trim();
    if let Some(d) = parse_iso(s) {
        return Some(d);
    }
    let tokens: Vec<&str> = s.split_whitespace().collect();
    match tokens.as_slice() {
        [month, day, year] => {
            if let (Some(m), Some(d), Some(y)) = (
                month_from_name(month),
                day_number(day.trim_end_matches(',')),
                four_digit_year(year),
            ) {
                return PartialDate::ymd(y, m, d);
            }
            if let (Some(d), Some(m), Some(y)) =
                (day_number(month), month_from_name(day), four_digit_year(year))
            {
                return PartialDate::ymd(y, m, d);
            }
            None
        }
        [month, year] => {
            let m = month_from_name(month.trim_end_matches(','))?;
            let y = four_digit_year(year)?;
            PartialDate::new(y, Some(m), None)
        }
        [year] => {
            let y = four_digit_year(year)?;
            if (1000..=2999).contains(&y) {
                PartialDate::year_only(y)
            } else {
                None
            }
        }
        _ => None,
    }
}

/// [`infer_column_type_with`] using the default threshold and no column name.
pub fn infer_column_type<S: AsRef<str>>(cells: &[S]) -> DataType {
    infer_column_type_with(None, cells, &InferenceConfig::default())
}

/// Number if enough non-empty cells parse as numbers, else Date if enough
/// parse as dates, else Text. A date cue in the column name makes Date win
/// when both qualify.
pub fn infer_column_type_with<S: AsRef<str>>(
    name: Option<&str>,
    cells: &[S],
    cfg: &InferenceConfig,
) -> DataType {
    let non_empty: Vec<&str> =
        cells.iter().map(|c| c.as_ref().trim()).filter(|c| !c.is_empty()).collect();
    if non_empty.is_empty() {
        return DataType::Text;
    }
    let n = non_empty.len() as f64;
    let passes = |count: usize| count as f64 / n + 1e-12 >= cfg.threshold;
    let numbers = non_empty.iter().filter(|c| parse_number(c).is_some()).count();
    let dates_pass = || passes(non_empty.iter().filter(|c| parse_date(c).is_some()).count());

    if passes(numbers) {
        let cued = name.is_some_and(|name| {
            let lower = name.to_lowercase();
            cfg.date_cues.iter().any(|cue| lower.contains(cue.as_str()))
        });
        if cued && dates_pass() {
            return DataType::Date;
        }
        return DataType::Number;
    }
    if dates_pass() {
        return DataType::Date;
    }
    DataType::Text
}

/// Parses a raw cell under its column's type, falling back to trimmed text.
pub fn parse_cell(raw: &str, dtype: DataType) -> Value {
    let parsed = match dtype {
        DataType::Number => parse_number(raw).map(Value::Number),
        DataType::Date => parse_date(raw).map(Value::Date),
        DataType::Text => None,
    };
    parsed.unwrap_or_else(|| Value::Text(raw.trim().to_string()))
}
