//! JSON call-list documents, as accepted by `testforge encode`.
//!
//! ```json
//! [
//!   {"op": "int_in_range", "type": "u16", "min": 0, "max": 100, "value": 1},
//!   {"op": "int", "type": "u8", "value": 128},
//!   {"op": "bool", "value": true},
//!   {"op": "remaining_bytes", "text": "abcd"},
//!   {"op": "string", "value": "x", "policy": "random_length", "max_len": 8, "checked": false}
//! ]
//! ```
//!
//! Byte payloads take either `"text"` (UTF-8) or `"hex"`. Every entry may set
//! `"checked": false` to use the coercing producer.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::int::{IntType, IntWidth};

use super::{FdpCall, FdpOp, StringPolicy};

#[derive(Debug, Error)]
pub enum CallListError {
    #[error("call list is not valid JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("call {index}: {message}")]
    Invalid { index: usize, message: String },
}

pub fn parse_call_list(text: &str) -> Result<Vec<FdpCall>, CallListError> {
    let root: Value = serde_json::from_str(text)?;
    let entries = match &root {
        Value::Array(items) => items,
        Value::Object(obj) => match obj.get("calls") {
            Some(Value::Array(items)) => items,
            _ => {
                return Err(CallListError::Invalid {
                    index: 0,
                    message: "expected an array or an object with a `calls` array".into(),
                })
            }
        },
        _ => {
            return Err(CallListError::Invalid {
                index: 0,
                message: "expected an array of calls".into(),
            })
        }
    };
    entries
        .iter()
        .enumerate()
        .map(|(index, entry)| {
            parse_call(entry).map_err(|message| CallListError::Invalid { index, message })
        })
        .collect()
}

fn parse_call(entry: &Value) -> Result<FdpCall, String> {
    let obj = entry.as_object().ok_or("call must be an object")?;
    let op_name = obj.get("op").and_then(Value::as_str).ok_or("missing `op`")?;
    let checked = match obj.get("checked") {
        None => true,
        Some(v) => v.as_bool().ok_or("`checked` must be a boolean")?,
    };
    let op = match op_name {
        "bytes" => FdpOp::Bytes(payload(obj)?),
        "remaining_bytes" => FdpOp::RemainingBytes(payload(obj)?),
        "string" => {
            let text = obj
                .get("value")
                .and_then(Value::as_str)
                .ok_or("`value` must be a string")?
                .to_string();
            let policy = match obj.get("policy").and_then(Value::as_str).unwrap_or("random_length") {
                "random_length" => StringPolicy::RandomLength {
                    max_len: obj
                        .get("max_len")
                        .and_then(Value::as_u64)
                        .ok_or("random_length strings need `max_len`")?
                        as usize,
                },
                "exact" => StringPolicy::Exact,
                "remaining" => StringPolicy::Remaining,
                other => return Err(format!("unknown string policy `{other}`")),
            };
            let ascii = obj.get("ascii").and_then(Value::as_bool).unwrap_or(false);
            FdpOp::String { text, policy, ascii }
        }
        "bool" => FdpOp::Bool(
            obj.get("value")
                .and_then(Value::as_bool)
                .ok_or("`value` must be a boolean")?,
        ),
        "int" => FdpOp::Int {
            ty: int_type(obj)?,
            value: int_field(obj, "value")?,
        },
        "int_in_range" => FdpOp::IntInRange {
            ty: int_type(obj)?,
            min: int_field(obj, "min")?,
            max: int_field(obj, "max")?,
            value: int_field(obj, "value")?,
        },
        "float_in_range" => FdpOp::FloatInRange {
            min: float_field(obj, "min")?,
            max: float_field(obj, "max")?,
            value: float_field(obj, "value")?,
        },
        "probability" => FdpOp::Probability(float_field(obj, "value")?),
        other => return Err(format!("unknown op `{other}`")),
    };
    Ok(FdpCall { op, checked })
}

fn payload(obj: &Map<String, Value>) -> Result<Vec<u8>, String> {
    match (obj.get("text"), obj.get("hex")) {
        (Some(Value::String(s)), None) => Ok(s.as_bytes().to_vec()),
        (None, Some(Value::String(h))) => hex::decode(h).map_err(|e| format!("bad hex: {e}")),
        _ => Err("byte payload needs exactly one of `text` or `hex`".into()),
    }
}

fn int_type(obj: &Map<String, Value>) -> Result<IntType, String> {
    let name = obj.get("type").and_then(Value::as_str).ok_or("missing integer `type`")?;
    parse_int_type(name).ok_or_else(|| format!("unknown integer type `{name}`"))
}

pub(crate) fn parse_int_type(name: &str) -> Option<IntType> {
    let (signed, bits) = match name.split_at(1) {
        ("u", bits) => (false, bits),
        ("i", bits) => (true, bits),
        _ => return None,
    };
    let width = IntWidth::from_bits(bits.parse().ok()?)?;
    Some(IntType::new(width, signed))
}

fn int_field(obj: &Map<String, Value>, key: &str) -> Result<i128, String> {
    let v = obj.get(key).ok_or_else(|| format!("missing `{key}`"))?;
    v.as_i64()
        .map(i128::from)
        .or_else(|| v.as_u64().map(i128::from))
        .ok_or_else(|| format!("`{key}` must be an integer"))
}

fn float_field(obj: &Map<String, Value>, key: &str) -> Result<f64, String> {
    obj.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| format!("`{key}` must be a number"))
}

fn int_json(v: i128) -> Value {
    if let Ok(i) = i64::try_from(v) {
        json!(i)
    } else {
        json!(v as u64)
    }
}

/// Inverse of [`parse_call_list`].
pub fn render_call_list(calls: &[FdpCall]) -> String {
    let items: Vec<Value> = calls
        .iter()
        .map(|call| {
            let mut v = match &call.op {
                FdpOp::Bytes(b) => json!({"op": "bytes", "hex": hex::encode(b)}),
                FdpOp::RemainingBytes(b) => json!({"op": "remaining_bytes", "hex": hex::encode(b)}),
                FdpOp::String { text, policy, ascii } => {
                    let mut v = json!({"op": "string", "value": text, "ascii": ascii});
                    match policy {
                        StringPolicy::RandomLength { max_len } => {
                            v["policy"] = json!("random_length");
                            v["max_len"] = json!(max_len);
                        }
                        StringPolicy::Exact => v["policy"] = json!("exact"),
                        StringPolicy::Remaining => v["policy"] = json!("remaining"),
                    }
                    v
                }
                FdpOp::Bool(b) => json!({"op": "bool", "value": b}),
                FdpOp::Int { ty, value } => {
                    json!({"op": "int", "type": ty.to_string(), "value": int_json(*value)})
                }
                FdpOp::IntInRange { ty, min, max, value } => json!({
                    "op": "int_in_range",
                    "type": ty.to_string(),
                    "min": int_json(*min),
                    "max": int_json(*max),
                    "value": int_json(*value),
                }),
                FdpOp::FloatInRange { min, max, value } => {
                    json!({"op": "float_in_range", "min": min, "max": max, "value": value})
                }
                FdpOp::Probability(p) => json!({"op": "probability", "value": p}),
            };
            if !call.checked {
                v["checked"] = json!(false);
            }
            v
        })
        .collect();
    serde_json::to_string_pretty(&Value::Array(items)).expect("call list serializes")
}
