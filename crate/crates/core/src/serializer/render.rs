use crate::ast::{AstNode, NodeValue, Span};
use crate::testlang::{Field, FieldKind, Record, SizeSpec, SizeUnit, TestlangDoc};

use super::GenerateError;

/// Serializes a value tree rooted at INPUT, filling in every node's span and
/// setting each size field to the measured length of what it sizes.
pub fn render(doc: &TestlangDoc, root: &mut AstNode) -> Result<Vec<u8>, GenerateError> {
    let entry = doc
        .entry()
        .ok_or_else(|| GenerateError::ShapeMismatch("INPUT".into()))?;
    render_record_standalone(doc, entry, root)
}

pub(crate) fn render_record_standalone(
    doc: &TestlangDoc,
    rec: &Record,
    node: &mut AstNode,
) -> Result<Vec<u8>, GenerateError> {
    let mut out = Vec::new();
    render_record(doc, rec, node, &mut out)?;
    Ok(out)
}

/// Overwrites an already-rendered integer leaf in place, without
/// backpatching anything else.
pub fn patch_int(blob: &mut [u8], node: &mut AstNode, field: &Field, value: i128) -> Result<(), GenerateError> {
    let FieldKind::Int { ty, endian } = field.kind else {
        return Err(GenerateError::ShapeMismatch(node.path.clone()));
    };
    if !ty.contains(value) {
        return Err(GenerateError::ValueOutOfType {
            field: node.path.clone(),
            value,
        });
    }
    let span = node
        .span
        .ok_or_else(|| GenerateError::ShapeMismatch(node.path.clone()))?;
    blob[span.offset..span.end()].copy_from_slice(&ty.encode(value, endian));
    node.value = NodeValue::Int(value);
    Ok(())
}

fn render_record(doc: &TestlangDoc, rec: &Record, node: &mut AstNode, out: &mut Vec<u8>) -> Result<(), GenerateError> {
    let start = out.len();
    let path = node.path.clone();
    let NodeValue::Record(children) = &mut node.value else {
        return Err(GenerateError::ShapeMismatch(path));
    };
    if children.len() != rec.fields.len() {
        return Err(GenerateError::ShapeMismatch(path));
    }
    for (f, child) in rec.fields.iter().zip(children.iter_mut()) {
        render_field(doc, f, child, out)?;
    }
    for (i, f) in rec.fields.iter().enumerate() {
        let Some(SizeSpec::Ref { field: src, unit }) = &f.size else {
            continue;
        };
        let measured = match unit {
            SizeUnit::Bytes => children[i].span.map_or(0, |s| s.len),
            SizeUnit::Elements => children[i].children().len(),
        } as i128;
        let j = rec
            .fields
            .iter()
            .position(|g| &g.name == src)
            .ok_or_else(|| GenerateError::ShapeMismatch(path.clone()))?;
        patch_int(out, &mut children[j], &rec.fields[j], measured)?;
    }
    node.span = Some(Span {
        offset: start,
        len: out.len() - start,
    });
    Ok(())
}

fn render_field(doc: &TestlangDoc, f: &Field, node: &mut AstNode, out: &mut Vec<u8>) -> Result<(), GenerateError> {
    let start = out.len();
    match (&f.kind, &mut node.value) {
        (FieldKind::Int { ty, endian }, NodeValue::Int(v)) => {
            if !ty.contains(*v) {
                return Err(GenerateError::ValueOutOfType {
                    field: node.path.clone(),
                    value: *v,
                });
            }
            out.extend(ty.encode(*v, *endian));
        }
        (FieldKind::Bytes | FieldKind::String | FieldKind::Custom(_), NodeValue::Bytes(content)) => {
            match f.encoder {
                Some(t) => out.extend(t.encode(content)),
                None => out.extend_from_slice(content),
            }
            if let Some(term) = f.terminator() {
                out.extend_from_slice(term);
            }
        }
        (FieldKind::Array(elem), NodeValue::Array(items)) => {
            for item in items.iter_mut() {
                render_field(doc, elem, item, out)?;
            }
        }
        (FieldKind::Record(name), NodeValue::Record(_)) => {
            let rec = doc
                .record(name)
                .ok_or_else(|| GenerateError::ShapeMismatch(node.path.clone()))?;
            return render_record(doc, rec, node, out);
        }
        _ => return Err(GenerateError::ShapeMismatch(node.path.clone())),
    }
    node.span = Some(Span {
        offset: start,
        len: out.len() - start,
    });
    Ok(())
}
