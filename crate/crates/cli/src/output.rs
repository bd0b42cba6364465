use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Shortest decimal of the 12-digit rounding, in exponent form for very
/// small or very large magnitudes.
pub fn fmt(x: f64) -> String {
    let r = round_sig(x);
    if r != 0.0 && (r.abs() < 1e-4 || r.abs() >= 1e15) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

fn tidy(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(xs) => Value::Array(xs.into_iter().map(tidy).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, tidy(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with every float at 12 significant digits.
pub fn json<S: Serialize>(value: &S) -> Result<String> {
    let v = tidy(serde_json::to_value(value)?);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

/// Writes to `out`, or to standard output when no path is given.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => print(text),
    }
}

/// Writes to standard output; a closed pipe is not an error.
pub fn print(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt(0.125), "0.125");
        assert_eq!(fmt(2f64.sqrt()), "1.41421356237");
        assert_eq!(fmt(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt(0.1 + 0.2), "0.3");
        assert_eq!(fmt(4.0 * f64::EPSILON), "8.881784197e-16");
    }

    #[test]
    fn json_floats_are_rounded() {
        let s = json(&serde_json::json!({"x": 0.1 + 0.2, "n": 3, "v": [1.0 / 3.0]})).unwrap();
        assert!(s.contains("0.3") && !s.contains("0.30000000000000004"));
        assert!(s.contains("0.333333333333") && s.contains("\"n\": 3"));
    }
}
