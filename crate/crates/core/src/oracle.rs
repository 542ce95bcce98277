//! Query primitives used to compute every generated answer: filtering,
//! aggregation, ordinal selection, calendar differences and formatting.

use std::cmp::Ordering;

use chrono::{Datelike, Months, NaiveDate};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Signed;
use thiserror::Error;

use crate::condition::Condition;
use crate::table::Table;
use crate::value::{render_scaled, Number, PartialDate, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("column {column} out of range for a table with {width} columns")]
    ColumnOutOfRange { column: usize, width: usize },
    #[error("aggregate over an empty input")]
    EmptyInput,
    #[error("ordinal {k} out of range 1..={len}")]
    KOutOfRange { k: usize, len: usize },
    #[error("row {row} has no parsed sort key")]
    UnparsableKey { row: usize },
}

/// Rows matched by a condition, plus how many cells could not be compared.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Selection {
    pub rows: Vec<usize>,
    pub unparsable: usize,
}

/// Ascending indices of the rows satisfying `c`. Cells lacking a parsed
/// value of the compared type count as non-matching.
pub fn select_rows(t: &Table, c: &Condition) -> Result<Selection, OracleError> {
    if c.column() >= t.n_cols() {
        return Err(OracleError::ColumnOutOfRange { column: c.column(), width: t.n_cols() });
    }
    let mut sel = Selection::default();
    for (i, cell) in t.column_cells(c.column()).enumerate() {
        match c.eval(cell) {
            Ok(true) => sel.rows.push(i),
            Ok(false) => {}
            Err(_) => sel.unparsable += 1,
        }
    }
    Ok(sel)
}

/// Rows satisfying every condition, ascending.
pub fn select_all(t: &Table, conditions: &[&Condition]) -> Result<Selection, OracleError> {
    let mut out = Selection { rows: (0..t.n_rows()).collect(), unparsable: 0 };
    for c in conditions {
        let s = select_rows(t, c)?;
        out.unparsable += s.unparsable;
        out.rows.retain(|r| s.rows.binary_search(r).is_ok());
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum AggregateOp {
    Sum,
    Average,
    Count,
}

/// Exact aggregation. Sum and average reject empty input.
pub fn aggregate(values: &[Number], op: AggregateOp) -> Result<Number, OracleError> {
    let count = BigRational::from_integer(BigInt::from(values.len()));
    match op {
        AggregateOp::Count => Ok(Number::new(count)),
        _ if values.is_empty() => Err(OracleError::EmptyInput),
        AggregateOp::Sum | AggregateOp::Average => {
            let sum: BigRational = values.iter().map(|v| v.ratio()).sum();
            Ok(Number::new(if op == AggregateOp::Sum { sum } else { sum / count }))
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SortOrder {
    Ascending,
    Descending,
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum SortKey<'a> {
    Number(&'a Number),
    Date((u16, u8, u8)),
}

fn sort_key(value: &Value) -> Option<SortKey<'_>> {
    match value {
        Value::Number(n) => Some(SortKey::Number(n)),
        Value::Date(d) => Some(SortKey::Date(d.sort_key())),
        Value::Text(_) => None,
    }
}

fn cmp_keys(a: &SortKey<'_>, b: &SortKey<'_>) -> Ordering {
    match (a, b) {
        (SortKey::Number(x), SortKey::Number(y)) => x.cmp(y),
        (SortKey::Date(x), SortKey::Date(y)) => x.cmp(y),
        (SortKey::Number(_), SortKey::Date(_)) => Ordering::Less,
        (SortKey::Date(_), SortKey::Number(_)) => Ordering::Greater,
    }
}

/// Stable sort of `rows` by the parsed value in `key_col`.
pub fn rank_rows(
    t: &Table,
    rows: &[usize],
    key_col: usize,
    order: SortOrder,
) -> Result<Vec<usize>, OracleError> {
    if key_col >= t.n_cols() {
        return Err(OracleError::ColumnOutOfRange { column: key_col, width: t.n_cols() });
    }
    let mut keyed = rows
        .iter()
        .map(|&r| sort_key(&t.cell(r, key_col).parsed).map(|k| (r, k)).ok_or(OracleError::UnparsableKey { row: r }))
        .collect::<Result<Vec<_>, _>>()?;
    keyed.sort_by(|(_, a), (_, b)| match order {
        SortOrder::Ascending => cmp_keys(a, b),
        SortOrder::Descending => cmp_keys(b, a),
    });
    Ok(keyed.into_iter().map(|(r, _)| r).collect())
}

/// The `k`-th (1-based) row of `rows` under a stable sort on `key_col`.
pub fn kth_by(
    t: &Table,
    rows: &[usize],
    key_col: usize,
    order: SortOrder,
    k: usize,
) -> Result<usize, OracleError> {
    if k == 0 || k > rows.len() {
        return Err(OracleError::KOutOfRange { k, len: rows.len() });
    }
    Ok(rank_rows(t, rows, key_col, order)?[k - 1])
}

/// Whether the `k`-th ranked row shares its sort key with a neighbour.
pub fn kth_is_tied(t: &Table, ranked: &[usize], key_col: usize, k: usize) -> bool {
    let key = |i: usize| sort_key(&t.cell(ranked[i], key_col).parsed);
    let at = key(k - 1);
    (k >= 2 && key(k - 2) == at) || (k < ranked.len() && key(k) == at)
}

/// A sign-free calendar difference.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct CalendarDuration {
    pub years: u32,
    pub months: u32,
    pub days: u32,
}

impl CalendarDuration {
    pub fn is_zero(&self) -> bool {
        *self == CalendarDuration::default()
    }
}

fn add_months_clamped(d: NaiveDate, months: u32) -> NaiveDate {
    d.checked_add_months(Months::new(months)).expect("within supported calendar range")
}

/// Calendar difference between two dates, earlier to later: whole years,
/// then whole months, then days. A month step landing past the end of a
/// shorter month is clamped to its last day. Missing month/day count as 1.
pub fn date_difference(a: &PartialDate, b: &PartialDate) -> CalendarDuration {
    let (mut from, mut to) = (a.to_naive(), b.to_naive());
    if from > to {
        std::mem::swap(&mut from, &mut to);
    }
    let (fy, fm) = (from.year() as i64, from.month0() as i64);
    let (ty, tm) = (to.year() as i64, to.month0() as i64);
    let mut months = ((ty - fy) * 12 + (tm - fm)).max(0) as u32;
    let mut anchor = add_months_clamped(from, months);
    if anchor > to {
        months -= 1;
        anchor = add_months_clamped(from, months);
    }
    let days = (to - anchor).num_days() as u32;
    CalendarDuration { years: months / 12, months: months % 12, days }
}

fn group_thousands(int_digits: &str) -> String {
    let mut out = String::with_capacity(int_digits.len() + int_digits.len() / 3);
    for (i, ch) in int_digits.chars().enumerate() {
        if i > 0 && (int_digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// Applies comma grouping to the integer part of a plain decimal string.
fn with_grouping(plain: &str) -> String {
    let (sign, body) = match plain.strip_prefix('-') {
        Some(b) => ("-", b),
        None => ("", plain),
    };
    let (int_part, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let mut out = format!("{sign}{}", group_thousands(int_part));
    if let Some(f) = frac {
        out.push('.');
        out.push_str(f);
    }
    out
}

/// Rounds half away from zero to `places` decimals, returning the mantissa.
fn round_scaled(v: &BigRational, places: u32) -> BigInt {
    let scaled = v * BigRational::from_integer(BigInt::from(10u32).pow(places));
    let (num, den) = (scaled.numer().abs(), scaled.denom().clone());
    let rounded = (num * 2u32 + &den).div_floor(&(den * 2u32));
    if v.is_negative() {
        -rounded
    } else {
        rounded
    }
}

/// Answer rendering for numbers: at most two decimals (half away from zero,
/// trailing zeros trimmed) and comma grouping once the magnitude reaches
/// 10,000.
pub fn format_number(v: &Number) -> String {
    let mantissa = round_scaled(v.ratio(), 2);
    let mut plain = render_scaled(&mantissa, 2);
    if plain.contains('.') {
        plain = plain.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    if plain == "-0" {
        plain = "0".into();
    }
    let big = mantissa.abs() >= BigInt::from(1_000_000u32);
    if big {
        with_grouping(&plain)
    } else {
        plain
    }
}

/// Exact rendering with comma grouping at 1,000 and above; used for
/// condition pivots, which must parse back to the same value.
pub fn format_grouped_exact(v: &Number) -> String {
    match v.to_exact_decimal() {
        Some(plain) => with_grouping(&plain),
        None => format_number(v),
    }
}

pub fn format_count(n: usize) -> String {
    format_number(&Number::from_integer(n as i64))
}

fn plural(n: u32, unit: &str) -> String {
    if n == 1 {
        format!("1 {unit}")
    } else {
        format!("{n} {unit}s")
    }
}

/// Largest non-zero calendar unit, floored: `16 years`, `7 months`, `1 day`.
pub fn format_duration(d: &CalendarDuration) -> String {
    if d.years > 0 {
        plural(d.years, "year")
    } else if d.months > 0 {
        plural(d.months, "month")
    } else {
        plural(d.days, "day")
    }
}

/// English ordinal numeral: 1st, 2nd, 3rd, 4th, 11th, 21st, ...
pub fn ordinal(k: usize) -> String {
    let suffix = match (k % 10, k % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{k}{suffix}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::{DateOp, NumOp};
    use crate::fixtures::t_fix;
    use crate::typeinfer::parse_number;
    use proptest::prelude::*;

    fn n(s: &str) -> Number {
        parse_number(s).unwrap()
    }

    fn ymd(y: u16, m: u8, d: u8) -> PartialDate {
        PartialDate::ymd(y, m, d).unwrap()
    }

    #[test]
    fn selections_on_fixture() {
        let t = t_fix();
        let gt9 = Condition::numeric(3, NumOp::Greater, n("9"));
        assert_eq!(select_rows(&t, &gt9).unwrap().rows, [0, 1, 3, 4]);
        let atlantis = Condition::equals_text(1, "Atlantis");
        assert!(select_rows(&t, &atlantis).unwrap().rows.is_empty());
        let later = Condition::temporal(2, DateOp::Later, ymd(1994, 12, 31), "1994-12-31");
        assert_eq!(select_rows(&t, &later).unwrap().rows, [2, 3, 4]);
        let bad = Condition::equals_text(9, "x");
        assert_eq!(select_rows(&t, &bad), Err(OracleError::ColumnOutOfRange { column: 9, width: 4 }));
        let on_text = Condition::numeric(0, NumOp::Greater, n("1"));
        assert_eq!(select_rows(&t, &on_text).unwrap().unparsable, 5);
    }

    #[test]
    fn aggregates() {
        assert_eq!(aggregate(&[n("20"), n("15")], AggregateOp::Sum).unwrap(), n("35"));
        assert_eq!(aggregate(&[n("10"), n("5")], AggregateOp::Average).unwrap(), n("7.5"));
        assert_eq!(aggregate(&[], AggregateOp::Count).unwrap(), n("0"));
        assert_eq!(aggregate(&[], AggregateOp::Sum), Err(OracleError::EmptyInput));
        assert_eq!(aggregate(&[], AggregateOp::Average), Err(OracleError::EmptyInput));
        let third = aggregate(&[n("1"), n("0"), n("0")], AggregateOp::Average).unwrap();
        assert_eq!(format_number(&third), "0.33");
    }

    #[test]
    fn ordinal_selection() {
        let t = t_fix();
        let all: Vec<usize> = (0..5).collect();
        assert_eq!(kth_by(&t, &all, 2, SortOrder::Ascending, 1).unwrap(), 1);
        assert_eq!(kth_by(&t, &[0, 2], 3, SortOrder::Descending, 2).unwrap(), 2);
        assert_eq!(kth_by(&t, &all, 3, SortOrder::Descending, 0), Err(OracleError::KOutOfRange { k: 0, len: 5 }));
        assert_eq!(kth_by(&t, &all, 3, SortOrder::Descending, 6), Err(OracleError::KOutOfRange { k: 6, len: 5 }));
        assert_eq!(kth_by(&t, &all, 0, SortOrder::Descending, 1), Err(OracleError::UnparsableKey { row: 0 }));
        // Beta and Delta tie on 20; stable order keeps Beta first.
        assert_eq!(rank_rows(&t, &all, 3, SortOrder::Descending).unwrap(), [1, 3, 4, 0, 2]);
        let ranked = rank_rows(&t, &all, 3, SortOrder::Descending).unwrap();
        assert!(kth_is_tied(&t, &ranked, 3, 1));
        assert!(kth_is_tied(&t, &ranked, 3, 2));
        assert!(!kth_is_tied(&t, &ranked, 3, 3));
    }

    #[test]
    fn calendar_differences() {
        let d = date_difference(&ymd(1985, 6, 15), &ymd(1990, 1, 1));
        assert_eq!(d, CalendarDuration { years: 4, months: 6, days: 17 });
        assert_eq!(date_difference(&ymd(1990, 1, 1), &ymd(1985, 6, 15)), d);
        assert!(date_difference(&ymd(2001, 3, 3), &ymd(2001, 3, 3)).is_zero());
        let y = |v| PartialDate::year_only(v).unwrap();
        assert_eq!(date_difference(&y(2000), &y(2016)), CalendarDuration { years: 16, months: 0, days: 0 });
        // End-of-month clamping.
        assert_eq!(
            date_difference(&ymd(1985, 1, 31), &ymd(1985, 3, 1)),
            CalendarDuration { years: 0, months: 1, days: 1 }
        );
        assert_eq!(
            date_difference(&ymd(2000, 2, 29), &ymd(2001, 2, 28)),
            CalendarDuration { years: 1, months: 0, days: 0 }
        );
    }

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(&n("1574013")), "1,574,013");
        assert_eq!(format_number(&n("7.5")), "7.5");
        assert_eq!(format_number(&n("35")), "35");
        assert_eq!(format_number(&n("9999")), "9999");
        assert_eq!(format_number(&n("10000")), "10,000");
        assert_eq!(format_number(&n("-12345.678")), "-12,345.68");
        assert_eq!(format_number(&n("2.005")), "2.01");
        assert_eq!(format_number(&n("-2.005")), "-2.01");
        assert_eq!(format_number(&n("1.999")), "2");
        assert_eq!(format_number(&n("-0.001")), "0");
        assert_eq!(format_number(&n("9999.996")), "10,000");
        assert_eq!(format_grouped_exact(&n("1234.5678")), "1,234.5678");
        assert_eq!(format_grouped_exact(&n("841969")), "841,969");
        assert_eq!(format_count(7), "7");
        assert_eq!(format_count(12345), "12,345");
    }

    #[test]
    fn durations_and_ordinals() {
        let d = |years, months, days| CalendarDuration { years, months, days };
        assert_eq!(format_duration(&d(16, 0, 0)), "16 years");
        assert_eq!(format_duration(&d(1, 11, 30)), "1 year");
        assert_eq!(format_duration(&d(0, 7, 3)), "7 months");
        assert_eq!(format_duration(&d(0, 0, 1)), "1 day");
        assert_eq!(format_duration(&d(0, 0, 12)), "12 days");
        let words: Vec<String> = [1, 2, 3, 4, 11, 12, 13, 21, 22, 23, 101, 111].map(ordinal).to_vec();
        assert_eq!(words, ["1st", "2nd", "3rd", "4th", "11th", "12th", "13th", "21st", "22nd", "23rd", "101st", "111th"]);
    }

    fn arb_date() -> impl Strategy<Value = PartialDate> {
        (1900u16..2030, 1u8..=12, 1u8..=31)
            .prop_filter_map("valid date", |(y, m, d)| PartialDate::ymd(y, m, d))
    }

    proptest! {
        #[test]
        fn sum_is_permutation_invariant(mut vals in proptest::collection::vec(-10_000i64..10_000, 1..20), rot in 0usize..20) {
            let nums: Vec<Number> = vals.iter().map(|&v| Number::from_integer(v)).collect();
            let before = aggregate(&nums, AggregateOp::Sum).unwrap();
            let k = rot % vals.len();
            vals.rotate_left(k);
            vals.reverse();
            let nums2: Vec<Number> = vals.iter().map(|&v| Number::from_integer(v)).collect();
            prop_assert_eq!(before, aggregate(&nums2, AggregateOp::Sum).unwrap());
            let avg = aggregate(&nums2, AggregateOp::Average).unwrap();
            prop_assert!(&avg >= nums2.iter().min().unwrap() && &avg <= nums2.iter().max().unwrap());
        }

        #[test]
        fn date_difference_is_symmetric(a in arb_date(), b in arb_date()) {
            prop_assert_eq!(date_difference(&a, &b), date_difference(&b, &a));
            let d = date_difference(&a, &b);
            prop_assert!(d.months < 12 && d.days < 31);
        }

        #[test]
        fn year_only_differences_add(a in 1000u16..3000, b in 0u16..500, c in 0u16..500) {
            let y = |v| PartialDate::year_only(v).unwrap();
            let (b, c) = (a + b, a + b + c);
            let ab = date_difference(&y(a), &y(b)).years;
            let bc = date_difference(&y(b), &y(c)).years;
            prop_assert_eq!(date_difference(&y(a), &y(c)).years, ab + bc);
        }

        #[test]
        fn asc_and_desc_ranks_agree(vals in proptest::collection::btree_set(-1000i64..1000, 1..12), k0 in 0usize..12) {
            let header = vec!["v".to_string()];
            let rows: Vec<Vec<String>> = vals.iter().rev().map(|v| vec![v.to_string()]).collect();
            let t = Table::from_typed("p", &header, &[crate::table::DataType::Number], &rows).unwrap();
            let all: Vec<usize> = (0..t.n_rows()).collect();
            let k = k0 % all.len() + 1;
            prop_assert_eq!(
                kth_by(&t, &all, 0, SortOrder::Ascending, k).unwrap(),
                kth_by(&t, &all, 0, SortOrder::Descending, all.len() - k + 1).unwrap()
            );
        }

        #[test]
        fn selections_are_sorted_subsets(seed in any::<u64>()) {
            use crate::condition::{sample_condition, SamplePolicy};
            let mut rng = crate::rng::derive_rng(seed, "prop", "sel");
            let t = crate::fixtures::random_table("p", crate::fixtures::RandomTableSpec::SMALL, &mut rng);
            for col in 0..t.n_cols() {
                if let Ok(c) = sample_condition(&t, col, &mut rng, SamplePolicy::NONEMPTY) {
                    let rows = select_rows(&t, &c).unwrap().rows;
                    prop_assert!(rows.windows(2).all(|w| w[0] < w[1]));
                    prop_assert!(rows.iter().all(|&r| r < t.n_rows()));
                }
            }
        }
    }
}
