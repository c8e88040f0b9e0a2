//! Mapping value trees of FDP-mode documents to producer calls.

use rand::seq::SliceRandom;

use crate::ast::{AstNode, NodeValue};
use crate::fdp::{FdpCall, FdpOp, StringPolicy};
use crate::int::IntWidth;
use crate::rng::SeedStream;
use crate::testlang::{Constraint, Field, FieldKind, SizeSpec, TestlangDoc};

use super::walk::{leaf_infos, LeafInfo};
use super::GenerateError;

/// One call per leaf, in consumption order. Leaves marked as violated become
/// unchecked calls.
pub(crate) fn map_calls(doc: &TestlangDoc, root: &AstNode) -> Result<Vec<FdpCall>, GenerateError> {
    for rec in doc.records.values() {
        for f in &rec.fields {
            if let FieldKind::Array(_) = f.kind {
                if let Some(SizeSpec::Range { .. }) = f.size {
                    return Err(unsupported(
                        &format!("{}.{}", rec.name, f.name),
                        "element count has no consumer call",
                    ));
                }
            }
        }
    }
    let leaves = leaf_infos(doc, root);
    let mut calls = Vec::with_capacity(leaves.len());
    for li in &leaves {
        let node = root
            .find(&li.path)
            .ok_or_else(|| GenerateError::ShapeMismatch(li.path.clone()))?;
        let op = match &node.value {
            NodeValue::Int(v) => int_op(li, *v)?,
            NodeValue::Bytes(content) => blob_op(li, content)?,
            _ => return Err(GenerateError::ShapeMismatch(li.path.clone())),
        };
        calls.push(FdpCall {
            op,
            checked: node.constraint_satisfied,
        });
    }
    Ok(calls)
}

fn unsupported(field: &str, reason: &str) -> GenerateError {
    GenerateError::UnsupportedKindForFdp {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

fn int_op(li: &LeafInfo, value: i128) -> Result<FdpOp, GenerateError> {
    let f = li.field;
    let ty = f.int_type().ok_or_else(|| GenerateError::ShapeMismatch(li.path.clone()))?;
    Ok(match &f.constraint {
        Constraint::Range(0, 1) if ty.width == IntWidth::W8 && !ty.signed => FdpOp::Bool(value == 1),
        Constraint::Range(min, max) => FdpOp::IntInRange {
            ty,
            min: *min,
            max: *max,
            value,
        },
        Constraint::Enum(members) if li.sizes.is_none() => {
            let idx = members
                .iter()
                .position(|m| m.as_int() == Some(value))
                .ok_or_else(|| unsupported(&li.path, "value is not an enum member"))?;
            FdpOp::IntInRange {
                ty,
                min: 0,
                max: members.len() as i128 - 1,
                value: idx as i128,
            }
        }
        _ => FdpOp::Int { ty, value },
    })
}

fn blob_op(li: &LeafInfo, content: &[u8]) -> Result<FdpOp, GenerateError> {
    let f: &Field = li.field;
    if f.terminator().is_some() {
        return Err(unsupported(&li.path, "terminated content has no consumer call"));
    }
    let bytes = match f.encoder {
        Some(t) => t.encode(content),
        None => content.to_vec(),
    };
    let is_string = matches!(f.kind, FieldKind::String);
    let text = || {
        String::from_utf8(bytes.clone()).map_err(|_| unsupported(&li.path, "string content is not UTF-8"))
    };
    let string = |text: String, policy| FdpOp::String {
        text,
        policy,
        ascii: false,
    };
    Ok(match f.size {
        Some(SizeSpec::Range { .. }) if li.tail => {
            if is_string {
                string(text()?, StringPolicy::Remaining)
            } else {
                FdpOp::RemainingBytes(bytes)
            }
        }
        Some(SizeSpec::Range { max, .. }) if is_string => string(
            text()?,
            StringPolicy::RandomLength { max_len: max as usize },
        ),
        Some(SizeSpec::Range { .. }) => {
            return Err(unsupported(&li.path, "variable-length bytes before the end of input"))
        }
        _ if is_string => string(text()?, StringPolicy::Exact),
        _ => FdpOp::Bytes(bytes),
    })
}

/// Marks one Const integer or size field as violated and changes its value.
/// Returns the path of the changed leaf.
pub(crate) fn violate(doc: &TestlangDoc, root: &mut AstNode, seeds: &SeedStream) -> Result<String, GenerateError> {
    let mut rng = seeds.substream("crash");
    let eligible: Vec<(String, crate::int::IntType)> = leaf_infos(doc, root)
        .into_iter()
        .filter(|li| li.sizes.is_some() || matches!(li.field.constraint, Constraint::Const(_)))
        .filter_map(|li| li.field.int_type().map(|ty| (li.path, ty)))
        .collect();
    let (path, ty) = eligible.choose(&mut rng).ok_or(GenerateError::NoEligibleField)?;
    let node = root.find_mut(path).expect("path from this tree");
    let v = node.as_int().expect("integer leaf");
    let nv = if ty.contains(v + 1) { v + 1 } else { v - 1 };
    node.value = NodeValue::Int(nv);
    node.constraint_satisfied = false;
    Ok(path.clone())
}
