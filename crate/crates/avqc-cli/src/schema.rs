//! JSON input loading with pointer-path diagnostics.
//!
//! Files are checked structurally first, so a malformed document is
//! reported by the JSON pointer of the offending element. The domain
//! deserializers then enforce the semantic invariants (unit trace, trace
//! preservation, probability distributions) with messages naming the
//! violated invariant.

use std::path::Path;

use serde_json::Value;

use avqc::channels::{AVQCFamily, CQSource, KrausChannel};
use avqc::coding::BlockCode;

use crate::Failure;

fn violation(pointer: &str, expected: &str) -> String {
    let shown = if pointer.is_empty() {
        "(root)"
    } else {
        pointer
    };
    format!("schema violation at {shown}: expected {expected}")
}

fn want_object<'a>(
    v: &'a Value,
    pointer: &str,
) -> Result<&'a serde_json::Map<String, Value>, String> {
    v.as_object().ok_or_else(|| violation(pointer, "an object"))
}

fn want_array<'a>(v: &'a Value, pointer: &str) -> Result<&'a [Value], String> {
    v.as_array()
        .map(Vec::as_slice)
        .ok_or_else(|| violation(pointer, "an array"))
}

fn want_number(v: &Value, pointer: &str) -> Result<f64, String> {
    v.as_f64().ok_or_else(|| violation(pointer, "a number"))
}

fn want_uint(v: &Value, pointer: &str) -> Result<u64, String> {
    v.as_u64()
        .ok_or_else(|| violation(pointer, "a nonnegative integer"))
}

fn want_string<'a>(v: &'a Value, pointer: &str) -> Result<&'a str, String> {
    v.as_str().ok_or_else(|| violation(pointer, "a string"))
}

fn field<'a>(
    obj: &'a serde_json::Map<String, Value>,
    pointer: &str,
    key: &str,
) -> Result<&'a Value, String> {
    obj.get(key)
        .ok_or_else(|| violation(pointer, &format!("required key {key:?}")))
}

fn check_complex(v: &Value, pointer: &str) -> Result<(), String> {
    let pair = want_array(v, pointer)?;
    if pair.len() != 2 {
        return Err(violation(pointer, "a [re, im] pair of two numbers"));
    }
    for (i, part) in pair.iter().enumerate() {
        want_number(part, &format!("{pointer}/{i}"))?;
    }
    Ok(())
}

fn check_matrix(v: &Value, pointer: &str) -> Result<(), String> {
    let rows = want_array(v, pointer)?;
    if rows.is_empty() {
        return Err(violation(pointer, "at least one matrix row"));
    }
    let mut width = None;
    for (i, row) in rows.iter().enumerate() {
        let row_ptr = format!("{pointer}/{i}");
        let entries = want_array(row, &row_ptr)?;
        if entries.is_empty() {
            return Err(violation(&row_ptr, "at least one matrix entry"));
        }
        match width {
            None => width = Some(entries.len()),
            Some(w) if w != entries.len() => {
                return Err(violation(
                    &row_ptr,
                    &format!("a row of length {w} (matrix rows must have equal length)"),
                ));
            }
            Some(_) => {}
        }
        for (j, entry) in entries.iter().enumerate() {
            check_complex(entry, &format!("{row_ptr}/{j}"))?;
        }
    }
    Ok(())
}

fn check_channel(v: &Value, pointer: &str) -> Result<(), String> {
    let obj = want_object(v, pointer)?;
    want_uint(field(obj, pointer, "dim_in")?, &format!("{pointer}/dim_in"))?;
    want_uint(
        field(obj, pointer, "dim_out")?,
        &format!("{pointer}/dim_out"),
    )?;
    let kraus_ptr = format!("{pointer}/kraus");
    let ops = want_array(field(obj, pointer, "kraus")?, &kraus_ptr)?;
    if ops.is_empty() {
        return Err(violation(&kraus_ptr, "at least one Kraus operator"));
    }
    for (i, op) in ops.iter().enumerate() {
        check_matrix(op, &format!("{kraus_ptr}/{i}"))?;
    }
    Ok(())
}

fn check_family(v: &Value) -> Result<(), String> {
    let obj = want_object(v, "")?;
    let theta = want_array(field(obj, "", "theta")?, "/theta")?;
    for (i, label) in theta.iter().enumerate() {
        want_string(label, &format!("/theta/{i}"))?;
    }
    let channels = want_object(field(obj, "", "channels")?, "/channels")?;
    for (label, ch) in channels {
        check_channel(ch, &format!("/channels/{label}"))?;
    }
    Ok(())
}

fn check_source(v: &Value) -> Result<(), String> {
    let obj = want_object(v, "")?;
    let alphabet = want_array(field(obj, "", "alphabet")?, "/alphabet")?;
    for (i, label) in alphabet.iter().enumerate() {
        want_string(label, &format!("/alphabet/{i}"))?;
    }
    let states = want_object(field(obj, "", "states")?, "/states")?;
    for (label, state) in states {
        check_matrix(state, &format!("/states/{label}"))?;
    }
    let prior = want_array(field(obj, "", "prior")?, "/prior")?;
    for (i, p) in prior.iter().enumerate() {
        want_number(p, &format!("/prior/{i}"))?;
    }
    Ok(())
}

fn check_code(v: &Value) -> Result<(), String> {
    let obj = want_object(v, "")?;
    want_uint(field(obj, "", "n")?, "/n")?;
    let encoder = want_array(field(obj, "", "encoder")?, "/encoder")?;
    for (j, row) in encoder.iter().enumerate() {
        let row_ptr = format!("/encoder/{j}");
        let entries = want_array(row, &row_ptr)?;
        for (x, p) in entries.iter().enumerate() {
            want_number(p, &format!("{row_ptr}/{x}"))?;
        }
    }
    let decoder = want_array(field(obj, "", "decoder")?, "/decoder")?;
    for (j, op) in decoder.iter().enumerate() {
        check_matrix(op, &format!("/decoder/{j}"))?;
    }
    Ok(())
}

fn load_value(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Validation(format!("invalid JSON in {}: {e}", path.display())))
}

fn load_checked<T, F>(path: &Path, what: &str, check: F) -> Result<T, Failure>
where
    T: serde::de::DeserializeOwned,
    F: Fn(&Value) -> Result<(), String>,
{
    let value = load_value(path)?;
    check(&value).map_err(|msg| Failure::Validation(format!("{}: {msg}", path.display())))?;
    serde_json::from_value(value)
        .map_err(|e| Failure::Validation(format!("invalid {what} in {}: {e}", path.display())))
}

pub fn load_channel(path: &Path) -> Result<KrausChannel, Failure> {
    load_checked(path, "channel", |v| check_channel(v, ""))
}

pub fn load_family(path: &Path) -> Result<AVQCFamily, Failure> {
    load_checked(path, "channel family", check_family)
}

pub fn load_source(path: &Path) -> Result<CQSource, Failure> {
    load_checked(path, "classical-quantum source", check_source)
}

pub fn load_code(path: &Path) -> Result<BlockCode, Failure> {
    load_checked(path, "block code", check_code)
}
