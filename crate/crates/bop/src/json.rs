//! Canonical JSON in the layout written by the BOP toolkit: one top-level
//! entry per line, keys in ascending numeric order, nested values inline
//! with sorted keys and `", "` / `": "` separators, floats as Python `repr`.

use std::fs;
use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::error::{io_err, parse_err, BopError, Result};

/// Shortest round-trip decimal of `x`, formatted like Python's `repr`.
pub fn py_float(x: f64) -> String {
    assert!(x.is_finite(), "JSON cannot hold {x}");
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{x:e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let (sign, mant) = match mant.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mant),
    };
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    if !(-4..16).contains(&exp) {
        let m = if digits.len() == 1 {
            digits
        } else {
            format!("{}.{}", &digits[..1], &digits[1..])
        };
        let es = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{m}e{es}{:02}", exp.abs());
    }
    let n = digits.len() as i32;
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else if exp + 1 >= n {
        format!("{}{}.0", digits, "0".repeat((exp + 1 - n) as usize))
    } else {
        let p = (exp + 1) as usize;
        format!("{}.{}", &digits[..p], &digits[p..])
    };
    format!("{sign}{body}")
}

/// Millimeter value `w` with `w / 1000 == m`, preferring the shortest
/// decimal so hand-written values survive a read/write cycle. Some doubles
/// have no such `w`; the nearest product `m · 1000` is returned for them.
pub fn m_to_mm(m: f64) -> f64 {
    let w = m * 1000.0;
    let mut cands = vec![w];
    let (mut up, mut down) = (w, w);
    for _ in 0..2 {
        up = up.next_up();
        down = down.next_down();
        cands.push(up);
        cands.push(down);
    }
    cands
        .into_iter()
        .filter(|c| c / 1000.0 == m)
        .min_by_key(|c| py_float(*c).len())
        .unwrap_or(w)
}

pub fn mm_to_m(mm: f64) -> f64 {
    mm / 1000.0
}

pub fn float(x: f64) -> Value {
    Value::Number(Number::from_f64(x).expect("finite float"))
}

pub fn floats(xs: impl IntoIterator<Item = f64>) -> Value {
    Value::Array(xs.into_iter().map(float).collect())
}

fn write_inline(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_u64() {
                out.push_str(&i.to_string());
            } else if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else {
                out.push_str(&py_float(n.as_f64().expect("number")));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_inline(x, out);
            }
            out.push(']');
        }
        Value::Object(o) => {
            out.push('{');
            for (i, (k, x)) in o.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_inline(&Value::String(k.clone()), out);
                out.push_str(": ");
                write_inline(x, out);
            }
            out.push('}');
        }
    }
}

/// Top-level map from integer ids to values, ids ascending.
pub fn to_canonical(entries: &[(u64, Value)]) -> String {
    let mut sorted: Vec<&(u64, Value)> = entries.iter().collect();
    sorted.sort_by_key(|e| e.0);
    let mut out = String::from("{\n");
    for (i, (k, v)) in sorted.iter().enumerate() {
        out.push_str(&format!("  \"{k}\": "));
        write_inline(v, &mut out);
        if i + 1 < sorted.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push('}');
    out
}

/// Flat object with sorted keys, one key per line.
pub fn object_to_canonical(map: &Map<String, Value>) -> String {
    let mut out = String::from("{\n");
    for (i, (k, v)) in map.iter().enumerate() {
        out.push_str("  ");
        write_inline(&Value::String(k.clone()), &mut out);
        out.push_str(": ");
        write_inline(v, &mut out);
        if i + 1 < map.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push('}');
    out
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_file(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, "<document>", e.to_string()))
}

/// Entries of a top-level map keyed by integer ids, ascending by id.
pub fn id_entries<'a>(doc: &'a Value, file: &Path) -> Result<Vec<(u64, &'a Value)>> {
    let obj = doc
        .as_object()
        .ok_or_else(|| parse_err(file, "<document>", "expected an object keyed by id"))?;
    let mut out = Vec::with_capacity(obj.len());
    for (k, v) in obj {
        let id = k
            .parse::<u64>()
            .map_err(|_| parse_err(file, k.as_str(), "key is not a non-negative integer id"))?;
        out.push((id, v));
    }
    out.sort_by_key(|e| e.0);
    Ok(out)
}

pub fn field<'a>(v: &'a Value, key: &str, file: &Path, ctx: &str) -> Result<&'a Value> {
    v.get(key)
        .ok_or_else(|| parse_err(file, format!("{ctx}.{key}"), "missing"))
}

pub fn as_f64(v: &Value, file: &Path, key: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| parse_err(file, key, format!("expected a number, got {v}")))
}

pub fn as_u64(v: &Value, file: &Path, key: &str) -> Result<u64> {
    v.as_u64()
        .ok_or_else(|| parse_err(file, key, format!("expected a non-negative integer, got {v}")))
}

pub fn f64_array(v: &Value, n: usize, file: &Path, key: &str) -> Result<Vec<f64>> {
    let a = v
        .as_array()
        .ok_or_else(|| parse_err(file, key, format!("expected an array of {n} numbers")))?;
    if a.len() != n {
        return Err(parse_err(file, key, format!("expected {n} numbers, found {}", a.len())));
    }
    a.iter().map(|x| as_f64(x, file, key)).collect()
}

pub(crate) fn invalid(file: &Path, key: impl Into<String>, source: nocs9d_core::Error) -> BopError {
    BopError::Invalid {
        file: file.to_path_buf(),
        key: key.into(),
        source,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn python_repr_floats() {
        let cases = [
            (1.0, "1.0"),
            (-0.5, "-0.5"),
            (12.5, "12.5"),
            (0.1, "0.1"),
            (1e-7, "1e-07"),
            (0.0001, "0.0001"),
            (0.00012, "0.00012"),
            (1.5e-5, "1.5e-05"),
            (123456789.0, "123456789.0"),
            (1e16, "1e+16"),
            (1.25e17, "1.25e+17"),
            (1e15, "1000000000000000.0"),
            (0.1 + 0.2, "0.30000000000000004"),
            (1066.778, "1066.778"),
            (-0.0, "-0.0"),
        ];
        for (x, s) in cases {
            assert_eq!(py_float(x), s);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn millimeters_roundtrip_exactly() {
        for mm in [12.5, -30.25, 850.0, 0.1, 1234.5678, 0.3, 99.99] {
            let m = mm_to_m(mm);
            assert_eq!(m_to_mm(m), mm);
        }
        // Not every double in meters has an exact millimeter partner, but
        // any value that came from a file does, so a second cycle is exact.
        let mut x = 0.000123;
        for _ in 0..10_000 {
            x = (x * 1.37 + 0.0071) % 3.0;
            let once = mm_to_m(m_to_mm(x));
            assert!(once == x || once == x.next_up() || once == x.next_down());
            assert_eq!(mm_to_m(m_to_mm(once)), once);
        }
    }

    #[test]
    fn canonical_layout() {
        let mut inner = Map::new();
        inner.insert("obj_id".into(), Value::from(3u64));
        inner.insert("cam_t_m2c".into(), floats([1.0, -2.5, 1e-7]));
        let text = to_canonical(&[(10, Value::Object(inner.clone())), (2, Value::Array(vec![]))]);
        assert_eq!(text, "{\n  \"2\": [],\n  \"10\": {\"cam_t_m2c\": [1.0, -2.5, 1e-07], \"obj_id\": 3}\n}");
        assert_eq!(to_canonical(&[]), "{\n}");
        let flat = object_to_canonical(&inner);
        assert_eq!(flat, "{\n  \"cam_t_m2c\": [1.0, -2.5, 1e-07],\n  \"obj_id\": 3\n}");
    }
}
