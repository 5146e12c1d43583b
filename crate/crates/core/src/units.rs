//! Engineering-notation numbers (`0.1f`, `50p`, `16n`, `1meg`).

use crate::error::ParseErrorKind;

const SUFFIXES: &[(&str, i32)] = &[
    ("t", 12),
    ("g", 9),
    ("meg", 6),
    ("k", 3),
    ("m", -3),
    ("u", -6),
    ("n", -9),
    ("p", -12),
    ("f", -15),
];

/// Parses a real number with an optional, case-insensitive scale suffix.
///
/// The suffix must be the whole remainder of the token; trailing unit
/// letters such as `0.1fF` are rejected.
pub fn parse_value(token: &str) -> Result<f64, ParseErrorKind> {
    let split = numeric_prefix_len(token);
    let (mantissa, suffix) = token.split_at(split);
    let base: f64 = mantissa
        .parse()
        .map_err(|_| ParseErrorKind::BadNumber(token.to_string()))?;
    if suffix.is_empty() {
        return finite(base, token);
    }
    let lower = suffix.to_ascii_lowercase();
    match SUFFIXES.iter().find(|(s, _)| *s == lower) {
        // Folding the scale into the decimal exponent keeps "0.1f" == 0.1e-15.
        Some((_, exp)) if !mantissa.contains(['e', 'E']) => {
            let v: f64 = format!("{mantissa}e{exp}")
                .parse()
                .map_err(|_| ParseErrorKind::BadNumber(token.to_string()))?;
            finite(v, token)
        }
        Some((_, exp)) => finite(base * 10f64.powi(*exp), token),
        None => Err(ParseErrorKind::UnknownSuffix {
            token: token.to_string(),
            suffix: suffix.to_string(),
        }),
    }
}

fn finite(v: f64, token: &str) -> Result<f64, ParseErrorKind> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ParseErrorKind::BadNumber(token.to_string()))
    }
}

/// Length of the leading `[+-]digits[.digits][e[+-]digits]` run.
fn numeric_prefix_len(s: &str) -> usize {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
        i += 1;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        if j < b.len() && b[j].is_ascii_digit() {
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}

/// Shortest exact text form of a value; re-parses to the same bits.
pub fn format_value(v: f64) -> String {
    format!("{v:e}")
}
