//! JSON text to [`TestlangDoc`]. This pass checks document shape only;
//! cross-references and value constraints are the validator's job.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde_json::{Map, Value as Json};

use crate::int::{Endian, IntType, IntWidth};

use super::diag::{DiagCode, Diagnostic};
use super::{
    Constraint, DocMetadata, Field, FieldKind, GeneratorRef, Hint, Mode, Record, SizeSpec,
    SizeUnit, TestlangDoc, Transform, Value, SCHEMA_VERSION,
};

type Diags = Vec<Diagnostic>;

pub fn parse_testlang(text: &str) -> Result<TestlangDoc, Vec<Diagnostic>> {
    let root: Json = serde_json::from_str(text).map_err(|e| {
        vec![Diagnostic::error(
            DiagCode::SyntaxError,
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )]
    })?;
    let mut diags = Vec::new();
    let doc = parse_root(&root, &mut diags);
    match doc {
        Some(doc) if diags.is_empty() => Ok(doc),
        _ => Err(diags),
    }
}

fn parse_root(root: &Json, d: &mut Diags) -> Option<TestlangDoc> {
    let Some(obj) = root.as_object() else {
        d.push(Diagnostic::error(DiagCode::SyntaxError, "$", "document must be an object"));
        return None;
    };
    let schema_version = match obj.get("schema_version") {
        None => SCHEMA_VERSION,
        Some(v) => match v.as_u64() {
            Some(n) if n as u32 as u64 == n && (1..=SCHEMA_VERSION as u64).contains(&n) => n as u32,
            Some(n) => {
                d.push(Diagnostic::error(
                    DiagCode::UnsupportedSchemaVersion,
                    "schema_version",
                    format!("schema version {n} is not supported (max {SCHEMA_VERSION})"),
                ));
                SCHEMA_VERSION
            }
            None => {
                d.push(invalid("schema_version", "expected a positive integer"));
                SCHEMA_VERSION
            }
        },
    };
    let mode = match opt_str(obj, "mode", "mode", d) {
        None | Some("bytes") => Mode::Bytes,
        Some("fdp") => Mode::Fdp,
        Some(other) => {
            d.push(invalid("mode", format!("unknown mode `{other}` (expected bytes or fdp)")));
            Mode::Bytes
        }
    };
    let default_endian = match obj.get("default_endian") {
        None => Endian::Big,
        Some(v) => parse_endian(v, "default_endian", d).unwrap_or(Endian::Big),
    };
    let is_partial = opt_bool(obj, "is_partial", "is_partial", d).unwrap_or(false);
    let metadata = match obj.get("metadata") {
        None => DocMetadata::default(),
        Some(m) => parse_metadata(m, d),
    };

    let records_json = match obj.get("records") {
        None => {
            d.push(Diagnostic::error(
                DiagCode::MissingRequired,
                "records",
                "document has no `records` list",
            ));
            return None;
        }
        Some(Json::Array(items)) => items,
        Some(_) => {
            d.push(invalid("records", "expected a list of records"));
            return None;
        }
    };
    let mut records = IndexMap::new();
    for (i, rj) in records_json.iter().enumerate() {
        if let Some(rec) = parse_record(rj, i, default_endian, d) {
            if records.contains_key(&rec.name) {
                d.push(Diagnostic::error(
                    DiagCode::DuplicateRecordName,
                    rec.name.clone(),
                    format!("record `{}` is defined more than once", rec.name),
                ));
            } else {
                records.insert(rec.name.clone(), rec);
            }
        }
    }
    Some(TestlangDoc {
        schema_version,
        mode,
        default_endian,
        is_partial,
        records,
        metadata,
    })
}

fn parse_metadata(m: &Json, d: &mut Diags) -> DocMetadata {
    let mut meta = DocMetadata::default();
    let Some(obj) = m.as_object() else {
        d.push(invalid("metadata", "expected an object"));
        return meta;
    };
    if let Some(lines) = obj.get("target_lines") {
        match lines.as_array() {
            Some(items) => {
                for (i, item) in items.iter().enumerate() {
                    match item.as_array().map(Vec::as_slice) {
                        Some([Json::String(p), Json::Number(n)]) if n.as_u64().is_some() => {
                            meta.target_lines.push((p.clone(), n.as_u64().unwrap() as u32))
                        }
                        _ => d.push(invalid(
                            format!("metadata.target_lines[{i}]"),
                            "expected [path, line]",
                        )),
                    }
                }
            }
            None => d.push(invalid("metadata.target_lines", "expected a list")),
        }
    }
    meta.deprioritized = opt_bool(obj, "deprioritized", "metadata.deprioritized", d).unwrap_or(false);
    for (key, slot) in [
        ("created_seq", &mut meta.created_seq),
        ("use_count", &mut meta.use_count),
        ("lines_achieved", &mut meta.lines_achieved),
    ] {
        if let Some(v) = obj.get(key) {
            match v.as_u64() {
                Some(n) => *slot = n,
                None => d.push(invalid(format!("metadata.{key}"), "expected a non-negative integer")),
            }
        }
    }
    meta
}

fn parse_record(rj: &Json, index: usize, endian: Endian, d: &mut Diags) -> Option<Record> {
    let fallback = format!("records[{index}]");
    let Some(obj) = rj.as_object() else {
        d.push(invalid(fallback, "record must be an object"));
        return None;
    };
    let name = match obj.get("name").and_then(Json::as_str) {
        Some(n) => n.to_string(),
        None => {
            d.push(missing(format!("{fallback}.name"), "record has no name"));
            return None;
        }
    };
    let fields_json = match obj.get("fields") {
        Some(Json::Array(items)) => items,
        Some(_) => {
            d.push(invalid(format!("{name}.fields"), "expected a list of fields"));
            return None;
        }
        None => {
            d.push(missing(format!("{name}.fields"), "record has no `fields` list"));
            return None;
        }
    };
    let fields = fields_json
        .iter()
        .enumerate()
        .filter_map(|(j, fj)| {
            let fname = fj.get("name").and_then(Json::as_str);
            let path = match fname {
                Some(n) => format!("{name}.{n}"),
                None => format!("{name}.fields[{j}]"),
            };
            if fname.is_none() {
                d.push(missing(format!("{path}.name"), "field has no name"));
                return None;
            }
            parse_field(fj, fname.unwrap(), &path, endian, d)
        })
        .collect();
    Some(Record { name, fields })
}

fn parse_field(fj: &Json, name: &str, path: &str, endian: Endian, d: &mut Diags) -> Option<Field> {
    let Some(obj) = fj.as_object() else {
        d.push(invalid(path, "field must be an object"));
        return None;
    };
    let kind_name = match obj.get("kind").and_then(Json::as_str) {
        Some(k) => k,
        None => {
            d.push(missing(format!("{path}.kind"), "field has no kind"));
            return None;
        }
    };
    let before = d.len();
    let kind = match kind_name {
        "int" => {
            let bits = match obj.get("width") {
                None => 32,
                Some(w) => w.as_u64().unwrap_or(0),
            };
            let Some(width) = IntWidth::from_bits(bits) else {
                d.push(Diagnostic::error(
                    DiagCode::InvalidWidth,
                    format!("{path}.width"),
                    "integer width must be 8, 16, 32 or 64",
                ));
                return None;
            };
            let signed = opt_bool(obj, "signed", &format!("{path}.signed"), d).unwrap_or(false);
            let endian = match obj.get("endian") {
                None => endian,
                Some(v) => parse_endian(v, &format!("{path}.endian"), d).unwrap_or(endian),
            };
            FieldKind::Int {
                ty: IntType::new(width, signed),
                endian,
            }
        }
        "bytes" => FieldKind::Bytes,
        "string" => FieldKind::String,
        "array" => {
            let Some(ej) = obj.get("element") else {
                d.push(missing(format!("{path}.element"), "array has no element type"));
                return None;
            };
            let ename = ej.get("name").and_then(Json::as_str).unwrap_or(name);
            let element = parse_field(ej, ename, &format!("{path}.element"), endian, d)?;
            FieldKind::Array(Box::new(element))
        }
        "record" => match obj.get("record").and_then(Json::as_str) {
            Some(r) => FieldKind::Record(r.to_string()),
            None => {
                d.push(missing(format!("{path}.record"), "record field names no record"));
                return None;
            }
        },
        "custom" => match obj.get("generator") {
            Some(g) => FieldKind::Custom(parse_generator(g, &format!("{path}.generator"), d)?),
            None => {
                d.push(missing(format!("{path}.generator"), "custom field has no generator"));
                return None;
            }
        },
        other => {
            d.push(Diagnostic::error(
                DiagCode::UnknownFieldKind,
                format!("{path}.kind"),
                format!("unknown field kind `{other}`"),
            ));
            return None;
        }
    };

    let mut size = match obj.get("size") {
        None => None,
        Some(s) => parse_size(s, &kind, &format!("{path}.size"), d),
    };
    if let FieldKind::Int { ty, .. } = kind {
        match size {
            None => {}
            Some(SizeSpec::Fixed(n)) if n == ty.width.bytes() as u64 => size = None,
            Some(_) => d.push(Diagnostic::error(
                DiagCode::InvalidSize,
                format!("{path}.size"),
                format!("an integer's size is its width ({} bytes)", ty.width.bytes()),
            )),
        }
    }

    let mut constraints = Vec::new();
    if let Some(r) = obj.get("range") {
        match r.as_array().map(Vec::as_slice) {
            Some([lo, hi]) => match (json_int(lo), json_int(hi)) {
                (Some(lo), Some(hi)) => constraints.push(Constraint::Range(lo, hi)),
                _ => d.push(invalid(format!("{path}.range"), "range bounds must be integers")),
            },
            _ => d.push(invalid(format!("{path}.range"), "expected [lo, hi]")),
        }
    }
    if let Some(e) = obj.get("enum") {
        match e.as_array() {
            Some(items) => {
                let vals: Vec<Value> = items
                    .iter()
                    .enumerate()
                    .filter_map(|(i, v)| parse_value(v, &kind, &format!("{path}.enum[{i}]"), d))
                    .collect();
                constraints.push(Constraint::Enum(vals));
            }
            None => d.push(invalid(format!("{path}.enum"), "expected a list")),
        }
    }
    if let Some(c) = obj.get("const") {
        if let Some(v) = parse_value(c, &kind, &format!("{path}.const"), d) {
            constraints.push(Constraint::Const(v));
        }
    }
    if let Some(t) = obj.get("terminator") {
        if let Some(b) = json_bytes(t, false) {
            constraints.push(Constraint::Terminator(b));
        } else {
            d.push(invalid(
                format!("{path}.terminator"),
                "expected a byte string or a list of byte values",
            ));
        }
    }
    if constraints.len() > 1 {
        d.push(Diagnostic::error(
            DiagCode::ConflictingConstraints,
            path,
            "at most one of range, enum, const, terminator may be given",
        ));
    }
    let constraint = constraints.into_iter().next().unwrap_or_default();

    let hint = match opt_str(obj, "hint", &format!("{path}.hint"), d) {
        None => None,
        Some(h) => match Hint::parse(h) {
            Some(h) => Some(h),
            None => {
                d.push(invalid(
                    format!("{path}.hint"),
                    format!("unknown hint `{h}` (expected filename, query, url or text)"),
                ));
                None
            }
        },
    };
    let encoder = match opt_str(obj, "encoder", &format!("{path}.encoder"), d) {
        None => None,
        Some(e) => match Transform::parse(e) {
            Some(t) => Some(t),
            None => {
                d.push(Diagnostic::error(
                    DiagCode::InvalidTransform,
                    format!("{path}.encoder"),
                    format!("unknown encoder `{e}` (expected hex or base64)"),
                ));
                None
            }
        },
    };
    if d.len() > before {
        return None;
    }
    Some(Field {
        name: name.to_string(),
        kind,
        size,
        constraint,
        hint,
        encoder,
    })
}

fn parse_size(s: &Json, kind: &FieldKind, path: &str, d: &mut Diags) -> Option<SizeSpec> {
    if let Some(n) = s.as_u64() {
        return Some(SizeSpec::Fixed(n));
    }
    let Some(obj) = s.as_object() else {
        d.push(invalid_size(path, "expected a length, {\"ref\": ...} or {\"min\", \"max\"}"));
        return None;
    };
    if let Some(r) = obj.get("ref") {
        let Some(field) = r.as_str() else {
            d.push(invalid_size(path, "`ref` must name a field"));
            return None;
        };
        let unit = match obj.get("unit").and_then(Json::as_str) {
            None if matches!(kind, FieldKind::Array(_)) => SizeUnit::Elements,
            None => SizeUnit::Bytes,
            Some("bytes") => SizeUnit::Bytes,
            Some("elements") => SizeUnit::Elements,
            Some(other) => {
                d.push(invalid_size(path, format!("unknown unit `{other}`")));
                return None;
            }
        };
        return Some(SizeSpec::Ref {
            field: field.to_string(),
            unit,
        });
    }
    match (obj.get("min").and_then(Json::as_u64), obj.get("max").and_then(Json::as_u64)) {
        (Some(min), Some(max)) => Some(SizeSpec::Range { min, max }),
        _ => {
            d.push(invalid_size(path, "a length range needs integer `min` and `max`"));
            None
        }
    }
}

fn parse_generator(g: &Json, path: &str, d: &mut Diags) -> Option<GeneratorRef> {
    let obj = g.as_object();
    if let Some(cmd) = obj.and_then(|o| o.get("external")).and_then(Json::as_str) {
        return Some(GeneratorRef::External(cmd.to_string()));
    }
    if let Some(name) = obj.and_then(|o| o.get("builtin")).and_then(Json::as_str) {
        let args = match obj.unwrap().get("args") {
            None => BTreeMap::new(),
            Some(Json::Object(m)) => m.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            Some(_) => {
                d.push(invalid(format!("{path}.args"), "expected an object"));
                return None;
            }
        };
        return Some(GeneratorRef::Builtin {
            name: name.to_string(),
            args,
        });
    }
    d.push(invalid(path, "expected {\"builtin\": name} or {\"external\": command}"));
    None
}

fn parse_value(v: &Json, kind: &FieldKind, path: &str, d: &mut Diags) -> Option<Value> {
    if let Some(i) = json_int(v) {
        return Some(Value::Int(i));
    }
    let text = matches!(kind, FieldKind::String);
    match json_bytes(v, text) {
        Some(b) => Some(Value::Bytes(b)),
        None => {
            d.push(invalid(path, "expected an integer, a string or a list of byte values"));
            None
        }
    }
}

/// Byte strings are written as JSON strings whose code points are the byte
/// values (Latin-1), or as lists of integers. Text strings are UTF-8.
pub(crate) fn json_bytes(v: &Json, text: bool) -> Option<Vec<u8>> {
    match v {
        Json::String(s) if text => Some(s.as_bytes().to_vec()),
        Json::String(s) => s.chars().map(|c| u8::try_from(c as u32).ok()).collect(),
        Json::Array(items) => items
            .iter()
            .map(|x| x.as_u64().and_then(|n| u8::try_from(n).ok()))
            .collect(),
        _ => None,
    }
}

fn json_int(v: &Json) -> Option<i128> {
    v.as_i64()
        .map(i128::from)
        .or_else(|| v.as_u64().map(i128::from))
}

fn parse_endian(v: &Json, path: &str, d: &mut Diags) -> Option<Endian> {
    match v.as_str() {
        Some("big") => Some(Endian::Big),
        Some("little") => Some(Endian::Little),
        _ => {
            d.push(invalid(path, "expected \"big\" or \"little\""));
            None
        }
    }
}

fn opt_str<'a>(obj: &'a Map<String, Json>, key: &str, path: &str, d: &mut Diags) -> Option<&'a str> {
    let v = obj.get(key)?;
    let s = v.as_str();
    if s.is_none() {
        d.push(invalid(path, "expected a string"));
    }
    s
}

fn opt_bool(obj: &Map<String, Json>, key: &str, path: &str, d: &mut Diags) -> Option<bool> {
    let v = obj.get(key)?;
    let b = v.as_bool();
    if b.is_none() {
        d.push(invalid(path, "expected a boolean"));
    }
    b
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> Diagnostic {
    Diagnostic::error(DiagCode::InvalidValue, path, message)
}

fn invalid_size(path: impl Into<String>, message: impl Into<String>) -> Diagnostic {
    Diagnostic::error(DiagCode::InvalidSize, path, message)
}

fn missing(path: impl Into<String>, message: impl Into<String>) -> Diagnostic {
    Diagnostic::error(DiagCode::MissingRequired, path, message)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_misses_records() {
        let err = parse_testlang("{}").unwrap_err();
        assert_eq!(err[0].code, DiagCode::MissingRequired);
        assert_eq!(err[0].path, "records");
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_testlang("{\"records\": [").unwrap_err();
        assert_eq!(err[0].code, DiagCode::SyntaxError);
        assert!(err[0].path.starts_with("line 1"));
    }

    #[test]
    fn unknown_kind_is_reported_with_path() {
        let err = parse_testlang(
            r#"{"records": [{"name": "INPUT", "fields": [{"name": "x", "kind": "float"}]}]}"#,
        )
        .unwrap_err();
        assert_eq!(err[0].code, DiagCode::UnknownFieldKind);
        assert_eq!(err[0].path, "INPUT.x.kind");
    }

    #[test]
    fn defaults_are_resolved() {
        let doc = parse_testlang(
            r#"{"default_endian": "little", "records": [{"name": "INPUT", "fields": [
                {"name": "a", "kind": "int", "width": 16},
                {"name": "b", "kind": "int", "width": 16, "endian": "big", "size": 2}
            ]}]}"#,
        )
        .unwrap();
        let f = &doc.records["INPUT"].fields;
        assert_eq!(f[0].endian(), Endian::Little);
        assert_eq!(f[1].endian(), Endian::Big);
        assert_eq!(f[1].size, None);
        assert_eq!(doc.mode, Mode::Bytes);
    }

    #[test]
    fn byte_constants_are_latin1() {
        let doc = parse_testlang(
            r#"{"records": [{"name": "INPUT", "fields": [
                {"name": "m", "kind": "bytes", "const": "ÿA"},
                {"name": "n", "kind": "bytes", "const": [0, 1]},
                {"name": "s", "kind": "string", "const": "é"}
            ]}]}"#,
        )
        .unwrap();
        let f = &doc.records["INPUT"].fields;
        assert_eq!(f[0].constraint, Constraint::Const(Value::Bytes(vec![0xff, b'A'])));
        assert_eq!(f[1].constraint, Constraint::Const(Value::Bytes(vec![0, 1])));
        assert_eq!(f[2].constraint, Constraint::Const(Value::Bytes("é".as_bytes().to_vec())));
    }

    #[test]
    fn two_constraints_conflict() {
        let err = parse_testlang(
            r#"{"records": [{"name": "INPUT", "fields": [
                {"name": "a", "kind": "int", "range": [0, 1], "const": 1}
            ]}]}"#,
        )
        .unwrap_err();
        assert_eq!(err[0].code, DiagCode::ConflictingConstraints);
    }

    #[test]
    fn future_schema_version_rejected() {
        let err = parse_testlang(r#"{"schema_version": 9, "records": []}"#).unwrap_err();
        assert_eq!(err[0].code, DiagCode::UnsupportedSchemaVersion);
    }
}
