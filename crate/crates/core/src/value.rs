//! Typed cell values: text, exact decimals and (possibly partial) dates.

use std::cmp::Ordering;
use std::fmt;

use chrono::NaiveDate;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// An exact rational number. Parsed cells are always finite decimals;
/// averages may not be.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Number(BigRational);

impl Number {
    pub fn new(ratio: BigRational) -> Self {
        Number(ratio)
    }

    pub fn from_integer(v: i64) -> Self {
        Number(BigRational::from_integer(BigInt::from(v)))
    }

    /// `mantissa / 10^scale`
    pub fn from_scaled(mantissa: BigInt, scale: u32) -> Self {
        let den = BigInt::from(10u32).pow(scale);
        Number(BigRational::new(mantissa, den))
    }

    pub fn ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn into_ratio(self) -> BigRational {
        self.0
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn zero() -> Self {
        Number(BigRational::zero())
    }

    pub fn to_f64(&self) -> Option<f64> {
        self.0.to_f64()
    }

    /// Number of decimal places needed to write the value exactly, or `None`
    /// when the denominator has prime factors other than 2 and 5.
    pub fn decimal_scale(&self) -> Option<u32> {
        let mut den = self.0.denom().clone();
        let two = BigInt::from(2u32);
        let five = BigInt::from(5u32);
        let (mut twos, mut fives) = (0u32, 0u32);
        while den.is_multiple_of(&two) {
            den /= &two;
            twos += 1;
        }
        while den.is_multiple_of(&five) {
            den /= &five;
            fives += 1;
        }
        if den.is_one() {
            Some(twos.max(fives))
        } else {
            None
        }
    }

    /// Exact plain decimal rendering without grouping, e.g. `-3.5`.
    pub fn to_exact_decimal(&self) -> Option<String> {
        let scale = self.decimal_scale()?;
        let scaled = &self.0 * BigRational::from_integer(BigInt::from(10u32).pow(scale));
        debug_assert!(scaled.is_integer());
        let mantissa = scaled.to_integer();
        Some(render_scaled(&mantissa, scale))
    }
}

/// Renders `mantissa / 10^scale` in plain decimal notation.
pub(crate) fn render_scaled(mantissa: &BigInt, scale: u32) -> String {
    let negative = mantissa.is_negative();
    let digits = mantissa.abs().to_string();
    let scale = scale as usize;
    let (int_part, frac_part) = if scale == 0 {
        (digits, String::new())
    } else if digits.len() > scale {
        let split = digits.len() - scale;
        (digits[..split].to_string(), digits[split..].to_string())
    } else {
        ("0".to_string(), format!("{digits:0>scale$}"))
    };
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    out.push_str(&int_part);
    if !frac_part.is_empty() {
        out.push('.');
        out.push_str(&frac_part);
    }
    out
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_exact_decimal() {
            Some(s) => f.write_str(&s),
            None => write!(f, "{}/{}", self.0.numer(), self.0.denom()),
        }
    }
}

/// A calendar date whose month and day may be missing (`"1964"`, `"March 1964"`).
///
/// Equality is structural, so `1964` and `1964-01-01` are different values.
/// Ordering goes through [`PartialDate::sort_key`], which fills missing parts
/// with 1.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PartialDate {
    year: u16,
    month: Option<u8>,
    day: Option<u8>,
}

impl PartialDate {
    /// Returns `None` for out-of-range parts, impossible calendar days, or a
    /// day without a month.
    pub fn new(year: u16, month: Option<u8>, day: Option<u8>) -> Option<Self> {
        if !(1..=9999).contains(&year) {
            return None;
        }
        match (month, day) {
            (None, Some(_)) => return None,
            (Some(m), None) if !(1..=12).contains(&m) => return None,
            (Some(m), Some(d)) => {
                NaiveDate::from_ymd_opt(year as i32, m as u32, d as u32)?;
            }
            _ => {}
        }
        Some(PartialDate { year, month, day })
    }

    pub fn ymd(year: u16, month: u8, day: u8) -> Option<Self> {
        Self::new(year, Some(month), Some(day))
    }

    pub fn year_only(year: u16) -> Option<Self> {
        Self::new(year, None, None)
    }

    pub fn year(&self) -> u16 {
        self.year
    }

    pub fn month(&self) -> Option<u8> {
        self.month
    }

    pub fn day(&self) -> Option<u8> {
        self.day
    }

    pub fn sort_key(&self) -> (u16, u8, u8) {
        (self.year, self.month.unwrap_or(1), self.day.unwrap_or(1))
    }

    pub fn cmp_key(&self, other: &PartialDate) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }

    /// The full calendar date with missing parts defaulted to 1.
    pub fn to_naive(&self) -> NaiveDate {
        let (y, m, d) = self.sort_key();
        NaiveDate::from_ymd_opt(y as i32, m as u32, d as u32).expect("validated at construction")
    }
}

impl fmt::Display for PartialDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}", self.year)?;
        if let Some(m) = self.month {
            write!(f, "-{m:02}")?;
        }
        if let Some(d) = self.day {
            write!(f, "-{d:02}")?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Value {
    Text(String),
    Number(Number),
    Date(PartialDate),
}

impl Value {
    pub fn as_number(&self) -> Option<&Number> {
        match self {
            Value::Number(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_date(&self) -> Option<&PartialDate> {
        match self {
            Value::Date(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Empty text is how missing cells are represented.
    pub fn is_empty(&self) -> bool {
        matches!(self, Value::Text(s) if s.is_empty())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Text(s) => f.write_str(s),
            Value::Number(n) => n.fmt(f),
            Value::Date(d) => d.fmt(f),
        }
    }
}
