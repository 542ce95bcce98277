//! A deliberately simple evaluator written without the library's oracle,
//! ranking, date or formatting code. It reads only the table's typed cells
//! and the structured binding.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use tabsynth::template::{Binding, Operator, SkillKind};
use tabsynth::{ConditionKind, DateOp, NumOp, Table, Value};
use tabsynth::Condition;

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn date_tuple(v: &Value) -> Option<(i64, i64, i64)> {
    match v {
        Value::Date(d) => Some((d.year() as i64, d.month().unwrap_or(1) as i64, d.day().unwrap_or(1) as i64)),
        _ => None,
    }
}

fn number(v: &Value) -> Option<BigRational> {
    match v {
        Value::Number(n) => Some(n.ratio().clone()),
        _ => None,
    }
}

fn same_value(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Text(x), Value::Text(y)) => x == y,
        (Value::Number(_), Value::Number(_)) => (number(a).unwrap() - number(b).unwrap()).is_zero(),
        (Value::Date(x), Value::Date(y)) => x.year() == y.year() && x.month() == y.month() && x.day() == y.day(),
        _ => false,
    }
}

pub fn holds(t: &Table, row: usize, c: &Condition) -> bool {
    let v = &t.rows()[row][c.column()].parsed;
    match c.kind() {
        ConditionKind::Equals(target) => same_value(v, target),
        ConditionKind::NumCmp { op, pivot } => match number(v) {
            Some(x) => {
                let diff = x - pivot.ratio().clone();
                match op {
                    NumOp::Greater => diff.is_positive(),
                    NumOp::Less => diff.is_negative(),
                }
            }
            None => false,
        },
        ConditionKind::DateCmp { op, pivot } => match date_tuple(v) {
            Some(x) => {
                let p = date_tuple(&Value::Date(*pivot)).unwrap();
                match op {
                    DateOp::Later => x > p,
                    DateOp::Earlier => x < p,
                }
            }
            None => false,
        },
    }
}

pub fn matching_rows(t: &Table, conds: &[&Condition]) -> Vec<usize> {
    let mut out = Vec::new();
    for r in 0..t.n_rows() {
        let mut ok = true;
        for c in conds {
            if !holds(t, r, c) {
                ok = false;
            }
        }
        if ok {
            out.push(r);
        }
    }
    out
}

fn cmp_values(a: &Value, b: &Value) -> Ordering {
    if let (Some(x), Some(y)) = (number(a), number(b)) {
        return x.cmp(&y);
    }
    date_tuple(a).cmp(&date_tuple(b))
}

/// Row at 1-based position `k` when `rows` are ordered by `col`, earlier
/// rows first among equals. Counts predecessors instead of sorting.
fn kth(t: &Table, rows: &[usize], col: usize, k: usize, descending: bool) -> usize {
    for (i, &r) in rows.iter().enumerate() {
        let mut before = 0;
        for (j, &s) in rows.iter().enumerate() {
            let ord = cmp_values(&t.rows()[s][col].parsed, &t.rows()[r][col].parsed);
            let ord = if descending { ord.reverse() } else { ord };
            if ord == Ordering::Less || (ord == Ordering::Equal && j < i) {
                before += 1;
            }
        }
        if before == k - 1 {
            return r;
        }
    }
    panic!("no row at position {k}");
}

fn leap(y: i64) -> bool {
    (y % 4 == 0 && y % 100 != 0) || y % 400 == 0
}

fn month_len(y: i64, m: i64) -> i64 {
    match m {
        4 | 6 | 9 | 11 => 30,
        2 if leap(y) => 29,
        2 => 28,
        _ => 31,
    }
}

fn plus_months(d: (i64, i64, i64), n: i64) -> (i64, i64, i64) {
    let total = d.0 * 12 + (d.1 - 1) + n;
    let (y, m) = (total / 12, total % 12 + 1);
    (y, m, d.2.min(month_len(y, m)))
}

fn next_day(d: (i64, i64, i64)) -> (i64, i64, i64) {
    if d.2 < month_len(d.0, d.1) {
        (d.0, d.1, d.2 + 1)
    } else if d.1 < 12 {
        (d.0, d.1 + 1, 1)
    } else {
        (d.0 + 1, 1, 1)
    }
}

/// Years, months and days from the earlier date to the later one, found by
/// stepping forward one unit at a time.
pub fn calendar_gap(a: (i64, i64, i64), b: (i64, i64, i64)) -> (i64, i64, i64) {
    let (from, to) = if a <= b { (a, b) } else { (b, a) };
    let mut years = 0;
    while plus_months(from, (years + 1) * 12) <= to {
        years += 1;
    }
    let mut months = 0;
    while months < 11 && plus_months(from, years * 12 + months + 1) <= to {
        months += 1;
    }
    let mut cur = plus_months(from, years * 12 + months);
    let mut days = 0;
    while cur < to {
        cur = next_day(cur);
        days += 1;
    }
    (years, months, days)
}

fn unit(n: i64, name: &str) -> String {
    format!("{n} {name}{}", if n == 1 { "" } else { "s" })
}

/// Round half away from zero to cents, drop trailing zeros, group the
/// integer part with commas from 10,000 up.
pub fn money(v: &BigRational) -> String {
    let neg = v.is_negative();
    let cents_exact = v.abs() * BigRational::from_integer(BigInt::from(100));
    let mut cents = cents_exact.floor().to_integer();
    if cents_exact.clone() - BigRational::from_integer(cents.clone()) >= BigRational::new(1.into(), 2.into()) {
        cents += 1;
    }
    let int_part = (&cents / 100u32).to_string();
    let frac = format!("{:02}", (&cents % 100u32).to_string().parse::<u32>().unwrap());
    let mut digits = int_part.clone();
    if cents >= BigInt::from(1_000_000u32) {
        let chars: Vec<char> = int_part.chars().collect();
        digits = String::new();
        for (i, ch) in chars.iter().enumerate() {
            if i > 0 && (chars.len() - i) % 3 == 0 {
                digits.push(',');
            }
            digits.push(*ch);
        }
    }
    let frac = frac.trim_end_matches('0');
    let body = if frac.is_empty() { digits } else { format!("{digits}.{frac}") };
    if neg && !cents.is_zero() {
        format!("-{body}")
    } else {
        body
    }
}

/// The answer the binding denotes, or `None` when the naive evaluator
/// considers it undefined.
pub fn answer(skill: SkillKind, t: &Table, b: &Binding) -> Option<Vec<String>> {
    let cell = |r: usize, c: usize| collapse(&t.rows()[r][c].raw);
    match skill {
        SkillKind::Conjunction => {
            let rows = matching_rows(t, &[&b.conditions[&2], &b.conditions[&3]]);
            Some(rows.iter().map(|&r| cell(r, b.columns[&1])).collect())
        }
        SkillKind::Quantifiers => {
            let a = matching_rows(t, &[&b.conditions[&2]]);
            let c = matching_rows(t, &[&b.conditions[&3]]);
            let inside = |xs: &[usize], ys: &[usize]| xs.iter().all(|x| ys.contains(x));
            let yes = match b.operator? {
                Operator::Every => inside(&a, &c),
                Operator::Only => inside(&c, &a),
                _ => return None,
            };
            Some(vec![if yes { "Yes" } else { "No" }.to_string()])
        }
        SkillKind::TemporalComparison | SkillKind::NumericalComparison => {
            let rows = matching_rows(t, &[&b.conditions[&2]]);
            let k = b.ordinal?;
            let r = kth(t, &rows, b.columns[&3], k, skill == SkillKind::NumericalComparison);
            Some(vec![cell(r, b.columns[&1])])
        }
        SkillKind::DateDifference => {
            let d = b.date_column?;
            let x = date_tuple(&t.rows()[b.values[&1]][d].parsed)?;
            let y = date_tuple(&t.rows()[b.values[&2]][d].parsed)?;
            let (years, months, days) = calendar_gap(x, y);
            Some(vec![if years > 0 {
                unit(years, "year")
            } else if months > 0 {
                unit(months, "month")
            } else {
                unit(days, "day")
            }])
        }
        SkillKind::Counting => {
            let n = matching_rows(t, &[&b.conditions[&2]]).len();
            Some(vec![money(&BigRational::from_integer(BigInt::from(n)))])
        }
        SkillKind::NumericalOperation => {
            let rows = matching_rows(t, &[&b.conditions[&2]]);
            let mut sum = BigRational::zero();
            for &r in &rows {
                sum += number(&t.rows()[r][b.columns[&1]].parsed)?;
            }
            let v = match b.operator? {
                Operator::Sum => sum,
                Operator::Average => sum / BigRational::from_integer(BigInt::from(rows.len())),
                _ => return None,
            };
            Some(vec![money(&v)])
        }
    }
}

pub fn self_check() {
    assert_eq!(calendar_gap((2020, 1, 31), (2020, 2, 29)), (0, 1, 0));
    assert_eq!(calendar_gap((2020, 1, 31), (2020, 2, 28)), (0, 0, 28));
    assert_eq!(calendar_gap((2019, 1, 31), (2019, 2, 28)), (0, 1, 0));
    assert_eq!(calendar_gap((1990, 1, 1), (1985, 6, 15)), (4, 6, 17));
    assert_eq!(money(&BigRational::new(15.into(), 2.into())), "7.5");
    assert_eq!(money(&BigRational::new(1.into(), 200.into())), "0.01");
    assert_eq!(money(&BigRational::new((-1).into(), 300.into())), "0");
    assert_eq!(money(&BigRational::from_integer(12345.into())), "12,345");
    assert_eq!(money(&BigRational::from_integer(9999.into())), "9999");
}
