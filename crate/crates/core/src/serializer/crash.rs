//! Crash-mode generation: push exactly one field out of its constraint.
//!
//! Candidates are tried in a seeded order and each one is checked against the
//! document. A candidate is kept only if the checker blames the chosen field,
//! so the recorded violation is always the one a parser would see.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::ast::{AstNode, NodeValue};
use crate::testlang::{structure_check, Constraint, Field, FieldKind, SizeSpec, TestlangDoc};

use super::build::{printable, random_bytes, step_of};
use super::render::{patch_int, render};
use super::walk::{leaf_infos, LeafInfo};
use super::GenerateError;

/// One way to break a leaf.
enum Edit {
    /// Replace the value, then render (sizes follow).
    Set(NodeValue),
    /// Render first, then overwrite the declared size.
    Declare(i128),
}

pub(crate) fn violate(
    doc: &TestlangDoc,
    root: &AstNode,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<u8>, AstNode, String), GenerateError> {
    let mut leaves = leaf_infos(doc, root);
    leaves.shuffle(rng);
    for li in &leaves {
        let Some(node) = root.find(&li.path) else { continue };
        let mut menu = candidates(li, node, rng);
        menu.shuffle(rng);
        for edit in menu {
            let mut tree = root.clone();
            let blob = match edit {
                Edit::Set(v) => {
                    tree.find_mut(&li.path).expect("path from this tree").value = v;
                    match render(doc, &mut tree) {
                        Ok(b) => b,
                        Err(_) => continue,
                    }
                }
                Edit::Declare(v) => {
                    let mut blob = render(doc, &mut tree)?;
                    let leaf = tree.find_mut(&li.path).expect("path from this tree");
                    if patch_int(&mut blob, leaf, li.field, v).is_err() {
                        continue;
                    }
                    blob
                }
            };
            let blamed = match structure_check(doc, &blob) {
                Err(e) => e.blamed_field() == Some(li.path.as_str()),
                Ok(_) => false,
            };
            if blamed {
                tree.find_mut(&li.path).expect("path from this tree").constraint_satisfied = false;
                return Ok((blob, tree, li.path.clone()));
            }
        }
    }
    Err(GenerateError::NoEligibleField)
}

fn candidates(li: &LeafInfo, node: &AstNode, rng: &mut ChaCha8Rng) -> Vec<Edit> {
    let f = li.field;
    match (&f.kind, &node.value) {
        (FieldKind::Int { ty, .. }, NodeValue::Int(d)) if li.sizes.is_some() => {
            let d = *d;
            let mut vals = vec![0, d + 1, 2 * d, ty.max_value()];
            vals.sort();
            vals.dedup();
            vals.into_iter()
                .filter(|&v| v != d && ty.contains(v))
                .map(Edit::Declare)
                .collect()
        }
        (FieldKind::Int { ty, .. }, NodeValue::Int(_)) => {
            let mut vals = vec![0, ty.min_value(), ty.max_value()];
            match &f.constraint {
                Constraint::Range(lo, hi) => vals.extend([lo - 1, hi + 1]),
                Constraint::Enum(_) | Constraint::Const(_) => {
                    for m in f.constraint.members().unwrap_or_default() {
                        if let Some(v) = m.as_int() {
                            vals.extend([v - 1, v + 1]);
                        }
                    }
                }
                _ => return Vec::new(),
            }
            vals.sort();
            vals.dedup();
            vals.into_iter()
                .filter(|&v| ty.contains(v) && !f.constraint.admits_int(v))
                .map(|v| Edit::Set(NodeValue::Int(v)))
                .collect()
        }
        (_, NodeValue::Bytes(content)) => blob_candidates(li, f, content, rng),
        _ => Vec::new(),
    }
}

fn blob_candidates(li: &LeafInfo, f: &Field, content: &[u8], rng: &mut ChaCha8Rng) -> Vec<Edit> {
    let set = |b: Vec<u8>| Edit::Set(NodeValue::Bytes(b));
    if matches!(f.constraint, Constraint::Enum(_) | Constraint::Const(_)) {
        return near_misses(content)
            .into_iter()
            .filter(|c| !f.constraint.admits_bytes(c))
            .map(set)
            .collect();
    }
    let fill = |n: usize, rng: &mut ChaCha8Rng| {
        let avoid = f.terminator().map(|t| t[0]);
        match f.kind {
            FieldKind::String => printable(n, avoid, rng),
            _ => random_bytes(n, avoid, rng),
        }
    };
    if f.terminator().is_some() {
        let (min, max) = f.terminated_range();
        let mut out = vec![set(fill((8 * max).max(max + 1) as usize, rng))];
        if min > 0 {
            out.push(set(Vec::new()));
        }
        return out;
    }
    match f.size {
        Some(SizeSpec::Range { min, max }) if li.tail => {
            let step = step_of(f);
            let content_len = |serialized: u64| match f.encoder {
                Some(t) => t.content_len(serialized),
                None => serialized,
            } as usize;
            let over = (max / step + 1) * step;
            let mut out = vec![set(fill(content_len(over), rng))];
            if min > 0 {
                let under = (min - 1) / step * step;
                out.push(set(fill(content_len(under), rng)));
            }
            out
        }
        _ => Vec::new(),
    }
}

/// Same-length variants of `content` differing in one or two positions.
fn near_misses(content: &[u8]) -> Vec<Vec<u8>> {
    let n = content.len();
    if n == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for &pos in &[0, n / 2, n - 1] {
        for mask in [0x01u8, 0x20] {
            let mut c = content.to_vec();
            c[pos] ^= mask;
            out.push(c);
        }
    }
    out.dedup();
    out
}
