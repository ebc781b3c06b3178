//! JSON rendering of rationals, orientations and reports.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use gridtree_core::flow::{FeasibilityReport, Objectives};
use gridtree_core::{Network, Orientation, Rational};

const DIGITS: i64 = 6;

fn pow10(k: i64) -> BigInt {
    num_traits::pow(BigInt::from(10), k as usize)
}

/// ⌊log₁₀ x⌋ for x > 0.
fn floor_log10(n: &BigInt, d: &BigInt) -> i64 {
    let mut e = n.to_string().len() as i64 - d.to_string().len() as i64;
    let at_least = |e: i64| -> bool {
        // x ≥ 10^e
        if e >= 0 {
            n >= &(d * pow10(e))
        } else {
            &(n * pow10(-e)) >= d
        }
    };
    while !at_least(e) {
        e -= 1;
    }
    while at_least(e + 1) {
        e += 1;
    }
    e
}

/// Decimal rendering with six significant digits, prefixed by "≈".
pub fn approx(x: &Rational) -> String {
    if x.is_zero() {
        return "≈0".to_string();
    }
    let sign = if x.is_negative() { "-" } else { "" };
    let n = x.numer().abs();
    let d = x.denom().clone();
    let mut e = floor_log10(&n, &d);
    // round(|x|·10^(DIGITS−1−e)), half up
    let k = DIGITS - 1 - e;
    let (num, den) = if k >= 0 { (n * pow10(k), d) } else { (n, d * pow10(-k)) };
    let mut scaled = (num * 2u32 + &den) / (den * 2u32);
    if scaled >= pow10(DIGITS) {
        scaled /= 10u32;
        e += 1;
    }
    let digits = scaled.to_string();
    let body = if (-5..DIGITS + 3).contains(&e) {
        fixed(&digits, e)
    } else {
        let (head, tail) = digits.split_at(1);
        let tail = tail.trim_end_matches('0');
        let mantissa = if tail.is_empty() { head.to_string() } else { format!("{head}.{tail}") };
        format!("{mantissa}e{e}")
    };
    format!("≈{sign}{body}")
}

/// Places the decimal point in a DIGITS-long digit string worth d.ddddd·10^e.
fn fixed(digits: &str, e: i64) -> String {
    let len = digits.len() as i64;
    let s = if e >= len - 1 {
        format!("{digits}{}", "0".repeat((e - len + 1) as usize))
    } else if e >= 0 {
        let (a, b) = digits.split_at((e + 1) as usize);
        format!("{a}.{b}")
    } else {
        format!("0.{}{digits}", "0".repeat((-e - 1) as usize))
    };
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Exact rational as "num/den", or "num" for integers.
pub fn exact(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// {"exact": …, "approx": …}.
pub fn number(x: &Rational) -> Value {
    json!({ "exact": exact(x), "approx": approx(x) })
}

pub fn opt_number(x: Option<&Rational>) -> Value {
    x.map_or(Value::Null, number)
}

pub fn orientation(net: &Network, o: &Orientation) -> Value {
    serde_json::from_str(&o.to_json(net)).expect("orientation documents are JSON")
}

pub fn objectives(obj: &Objectives) -> Value {
    json!({
        "min_load": number(&obj.min_load),
        "max_load": number(&obj.max_load),
        "reserve": number(&obj.reserve),
    })
}

pub fn violations(net: &Network, report: &FeasibilityReport) -> Value {
    Value::Array(
        report
            .violations
            .iter()
            .map(|v| {
                json!({
                    "node": net.id(v.node),
                    "kind": v.kind,
                    "value": opt_number(v.value.as_ref()),
                    "limit": opt_number(v.limit.as_ref()),
                })
            })
            .collect(),
    )
}

/// Pretty JSON with a trailing newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(approx(&q(422496, 42250)), "≈9.99991");
        assert_eq!(approx(&q(66015 * 32, 42250)), "≈49.9995");
        assert_eq!(approx(&q(7, 10)), "≈0.7");
        assert_eq!(approx(&q(2, 3)), "≈0.666667");
        assert_eq!(approx(&q(60, 1)), "≈60");
        assert_eq!(approx(&q(0, 1)), "≈0");
        assert_eq!(approx(&q(-1, 3)), "≈-0.333333");
        assert_eq!(approx(&q(1, 42250)), "≈0.0000236686");
        assert_eq!(approx(&q(999_999_7, 10)), "≈1000000");
        assert_eq!(approx(&Rational::from_integer(BigInt::from(10).pow(30u32))), "≈1e30");
        assert_eq!(approx(&q(1, 3_000_000_000)), "≈3.33333e-10");
    }

    #[test]
    fn exact_strings() {
        assert_eq!(exact(&q(7, 10)), "7/10");
        assert_eq!(exact(&q(20, 1)), "20");
        assert_eq!(exact(&q(422496, 42250)), "211248/21125");
    }
}
