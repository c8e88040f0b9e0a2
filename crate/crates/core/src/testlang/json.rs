//! Canonical JSON form of a document. `parse_testlang(to_json(doc))`
//! reproduces `doc`, and the output of `to_json` is a fixed point.

use serde_json::{json, Map, Value as Json};

use crate::int::Endian;

use super::{
    Constraint, Field, FieldKind, GeneratorRef, Mode, SizeSpec, SizeUnit, TestlangDoc, Value,
};

/// Pretty-printed canonical text, metadata included.
pub fn to_json(doc: &TestlangDoc) -> String {
    let mut root = format_json(doc);
    let m = &doc.metadata;
    let lines: Vec<Json> = m.target_lines.iter().map(|(p, l)| json!([p, l])).collect();
    root["metadata"] = json!({
        "target_lines": lines,
        "deprioritized": m.deprioritized,
        "created_seq": m.created_seq,
        "use_count": m.use_count,
        "lines_achieved": m.lines_achieved,
    });
    let mut text = serde_json::to_string_pretty(&root).expect("document serializes");
    text.push('\n');
    text
}

/// Canonical JSON of the format alone (no metadata).
pub(crate) fn format_json(doc: &TestlangDoc) -> Json {
    let records: Vec<Json> = doc
        .records
        .values()
        .map(|r| {
            json!({
                "name": r.name,
                "fields": r.fields.iter().map(field_json).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "schema_version": doc.schema_version,
        "mode": match doc.mode { Mode::Bytes => "bytes", Mode::Fdp => "fdp" },
        "default_endian": endian_name(doc.default_endian),
        "is_partial": doc.is_partial,
        "records": records,
    })
}

fn endian_name(e: Endian) -> &'static str {
    match e {
        Endian::Big => "big",
        Endian::Little => "little",
    }
}

fn field_json(f: &Field) -> Json {
    let mut o = Map::new();
    o.insert("name".into(), json!(f.name));
    o.insert("kind".into(), json!(f.kind.name()));
    let text = matches!(f.kind, FieldKind::String);
    match &f.kind {
        FieldKind::Int { ty, endian } => {
            o.insert("width".into(), json!(ty.width.bits()));
            o.insert("signed".into(), json!(ty.signed));
            o.insert("endian".into(), json!(endian_name(*endian)));
        }
        FieldKind::Array(elem) => {
            o.insert("element".into(), field_json(elem));
        }
        FieldKind::Record(name) => {
            o.insert("record".into(), json!(name));
        }
        FieldKind::Custom(g) => {
            let g = match g {
                GeneratorRef::Builtin { name, args } => json!({"builtin": name, "args": args}),
                GeneratorRef::External(cmd) => json!({"external": cmd}),
            };
            o.insert("generator".into(), g);
        }
        FieldKind::Bytes | FieldKind::String => {}
    }
    if let Some(size) = &f.size {
        let s = match size {
            SizeSpec::Fixed(n) => json!(n),
            SizeSpec::Ref { field, unit } => json!({
                "ref": field,
                "unit": match unit { SizeUnit::Bytes => "bytes", SizeUnit::Elements => "elements" },
            }),
            SizeSpec::Range { min, max } => json!({"min": min, "max": max}),
        };
        o.insert("size".into(), s);
    }
    match &f.constraint {
        Constraint::None => {}
        Constraint::Range(lo, hi) => {
            o.insert("range".into(), json!([int_json(*lo), int_json(*hi)]));
        }
        Constraint::Enum(vals) => {
            let vals: Vec<Json> = vals.iter().map(|v| value_json(v, text)).collect();
            o.insert("enum".into(), Json::Array(vals));
        }
        Constraint::Const(v) => {
            o.insert("const".into(), value_json(v, text));
        }
        Constraint::Terminator(t) => {
            o.insert("terminator".into(), bytes_json(t, false));
        }
    }
    if let Some(h) = f.hint {
        o.insert("hint".into(), json!(h.name()));
    }
    if let Some(t) = f.encoder {
        o.insert("encoder".into(), json!(t.name()));
    }
    Json::Object(o)
}

fn int_json(v: i128) -> Json {
    match i64::try_from(v) {
        Ok(i) => json!(i),
        Err(_) => json!(v as u64),
    }
}

fn value_json(v: &Value, text: bool) -> Json {
    match v {
        Value::Int(i) => int_json(*i),
        Value::Bytes(b) => bytes_json(b, text),
    }
}

fn bytes_json(b: &[u8], text: bool) -> Json {
    if text {
        match std::str::from_utf8(b) {
            Ok(s) => json!(s),
            Err(_) => json!(b),
        }
    } else {
        Json::String(b.iter().map(|&c| c as char).collect())
    }
}
