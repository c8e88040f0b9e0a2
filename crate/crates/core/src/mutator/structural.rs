//! Mutations that edit a value tree and re-render it.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ast::{AstNode, GenMode, NodeValue, TestlangAst};
use crate::rng::SeedStream;
use crate::serializer::{self, leaf_infos, patch_int, render, Generator, LeafInfo};
use crate::testlang::{structure_check, Constraint, Field, Hint, SizeSpec, TestlangDoc};

use super::{MutateError, MutationStrategy};

/// Result of a structural operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Edited {
    pub bytes: Vec<u8>,
    pub ast: TestlangAst,
}

fn inapplicable(s: MutationStrategy) -> MutateError {
    MutateError::StrategyInapplicable(s)
}

fn finish(doc: &TestlangDoc, mut root: AstNode, mode: GenMode, violated: Vec<String>) -> Result<Edited, MutateError> {
    let bytes = render(doc, &mut root)?;
    Ok(Edited {
        bytes,
        ast: TestlangAst {
            root,
            doc_id: doc.doc_id(),
            mode_used: mode,
            violated_fields: violated,
        },
    })
}

/// Candidate values for an integer field: the constraint's bounds and their
/// neighbours, zero, and the extremes of the field's type.
pub fn boundary_menu(f: &Field) -> Vec<i128> {
    let Some(ty) = f.int_type() else { return Vec::new() };
    let mut vals = vec![0, ty.min_value(), ty.max_value()];
    match &f.constraint {
        Constraint::Range(lo, hi) => vals.extend([*lo, *hi, lo - 1, hi + 1]),
        c => {
            for v in c.members().unwrap_or_default().iter().filter_map(|m| m.as_int()) {
                vals.extend([v - 1, v, v + 1]);
            }
        }
    }
    vals.retain(|v| ty.contains(*v));
    vals.sort();
    vals.dedup();
    vals
}

pub fn boundary_value(ast: &TestlangAst, doc: &TestlangDoc, rng: &mut ChaCha8Rng) -> Result<Edited, MutateError> {
    let leaves: Vec<LeafInfo> = leaf_infos(doc, &ast.root)
        .into_iter()
        .filter(|li| li.sizes.is_none() && li.field.int_type().is_some())
        .collect();
    let li = leaves.choose(rng).ok_or(inapplicable(MutationStrategy::BoundaryValue))?;
    let mut root = ast.root.clone();
    let node = root.find_mut(&li.path).expect("path from this tree");
    let current = node.as_int();
    let menu = boundary_menu(li.field);
    let fresh: Vec<i128> = menu.iter().copied().filter(|v| Some(*v) != current).collect();
    let v = *fresh.choose(rng).or(menu.first()).expect("type extremes are always present");
    node.value = NodeValue::Int(v);
    node.constraint_satisfied = li.field.constraint.admits_int(v);
    finish(doc, root, GenMode::Coverage, Vec::new())
}

const FILENAME: &[&str] = &[
    "../../../../../../etc/passwd",
    "..\\../..\\../windows/win.ini",
    "....//....//....//etc/passwd",
    "%2e%2e%2f../../etc/passwd",
    "../../etc/passwd%00.png",
    "../",
];

const QUERY: &[&str] = &[
    "' OR '1'='1'--",
    "' OR 1=1--",
    "\" OR 1=1 --",
    "1'; DROP TABLE users--",
    "' UNION SELECT NULL,NULL--",
    "admin'--",
];

const URL: &[&str] = &[
    "file:///etc/passwd",
    "http://127.0.0.1:22/",
    "http://169.254.169.254/latest/meta-data/",
    "gopher://localhost:25/_HELO",
    "jar:http://localhost/a.jar!/",
    "javascript:alert(1)",
    "//localhost@evil.example/",
];

const TEXT: &[&str] = &[
    "%s%s%s%s%n",
    "<script>alert(1)</script>",
    "${jndi:ldap://localhost/a}",
    "$(id)",
    "`id`",
    "; cat /etc/passwd",
    "{{7*7}}",
];

/// Built-in payloads for a semantic hint.
pub fn payloads(hint: Hint) -> &'static [&'static str] {
    match hint {
        Hint::Filename => FILENAME,
        Hint::Query => QUERY,
        Hint::Url => URL,
        Hint::Text => TEXT,
    }
}

/// `payload` truncated, or repeated, to fit a length window.
fn fit(payload: &[u8], min: usize, max: usize) -> Vec<u8> {
    let mut out = payload.to_vec();
    while out.len() < min && !payload.is_empty() {
        out.extend_from_slice(payload);
    }
    out.truncate(max.max(min));
    out
}

pub fn type_aware(ast: &TestlangAst, doc: &TestlangDoc, rng: &mut ChaCha8Rng) -> Result<Edited, MutateError> {
    let leaves: Vec<(LeafInfo, Hint)> = leaf_infos(doc, &ast.root)
        .into_iter()
        .filter(|li| li.field.kind.is_blob() && li.field.constraint.members().is_none())
        .filter_map(|li| li.field.hint.map(|h| (li, h)))
        .collect();
    let (li, hint) = leaves.choose(rng).ok_or(inapplicable(MutationStrategy::TypeAware))?;
    let f = li.field;
    let content_len = |serialized: u64| match f.encoder {
        Some(t) => t.content_len(serialized),
        None => serialized,
    } as usize;
    let (min, max) = match (&f.size, f.terminator()) {
        (Some(SizeSpec::Fixed(n)), _) => (content_len(*n), content_len(*n)),
        (_, Some(_)) => {
            let (lo, hi) = f.terminated_range();
            (lo as usize, hi as usize)
        }
        (Some(SizeSpec::Range { min, max }), _) => (content_len(*min), content_len(*max)),
        _ => (0, usize::MAX),
    };
    let mut payload: Vec<u8> = payloads(*hint).choose(rng).unwrap().as_bytes().to_vec();
    if let Some(term) = f.terminator() {
        payload.retain(|b| !term.contains(b));
    }
    let content = fit(&payload, min, max);
    let mut root = ast.root.clone();
    root.find_mut(&li.path).expect("path from this tree").value = NodeValue::Bytes(content);
    finish(doc, root, GenMode::Coverage, Vec::new()).map_err(|_| inapplicable(MutationStrategy::TypeAware))
}

pub fn constraint_violation(ast: &TestlangAst, doc: &TestlangDoc, rng: &mut ChaCha8Rng) -> Result<Edited, MutateError> {
    let (bytes, root, violated) = serializer::crash::violate(doc, &ast.root, rng)
        .map_err(|_| inapplicable(MutationStrategy::ConstraintViolation))?;
    Ok(Edited {
        bytes,
        ast: TestlangAst {
            root,
            doc_id: doc.doc_id(),
            mode_used: GenMode::Crash,
            violated_fields: vec![violated],
        },
    })
}

pub const CROSS_FIELD_DELTAS: [i128; 3] = [-1, 1, 255];

/// Moves one size field off the length of what it sizes, leaving the sized
/// content untouched. Returns the delta applied alongside the edit.
pub fn cross_field(ast: &TestlangAst, doc: &TestlangDoc, rng: &mut ChaCha8Rng) -> Result<(Edited, i128), MutateError> {
    let mut pairs: Vec<LeafInfo> = leaf_infos(doc, &ast.root)
        .into_iter()
        .filter(|li| li.sizes.is_some())
        .collect();
    pairs.shuffle(rng);
    for li in &pairs {
        let mut deltas = CROSS_FIELD_DELTAS;
        deltas.shuffle(rng);
        for delta in deltas {
            let mut root = ast.root.clone();
            let mut bytes = render(doc, &mut root)?;
            let node = root.find_mut(&li.path).expect("path from this tree");
            let d = node.as_int().expect("size fields are integers");
            if patch_int(&mut bytes, node, li.field, d + delta).is_err() {
                continue;
            }
            node.constraint_satisfied = false;
            let blamed = match structure_check(doc, &bytes) {
                Err(e) => e.blamed_field() == Some(li.path.as_str()),
                Ok(_) => false,
            };
            if blamed {
                let ast = TestlangAst {
                    root,
                    doc_id: doc.doc_id(),
                    mode_used: GenMode::Crash,
                    violated_fields: vec![li.path.clone()],
                };
                return Ok((Edited { bytes, ast }, delta));
            }
        }
    }
    Err(inapplicable(MutationStrategy::CrossField))
}

/// One record of `doc`, rendered on its own, inserted into `raw` or spliced
/// over a span of it.
pub fn ast_free(raw: &[u8], doc: &TestlangDoc, rng: &mut ChaCha8Rng) -> Result<Vec<u8>, MutateError> {
    let gen = Generator::new(doc)?;
    let names: Vec<&String> = doc.records.keys().collect();
    let name = names.choose(rng).ok_or(inapplicable(MutationStrategy::AstFree))?;
    let frag = gen.generate_record(name, &SeedStream::new(rng.gen()))?;
    if raw.is_empty() {
        return Ok(frag);
    }
    Ok(if rng.gen_bool(0.5) {
        let at = rng.gen_range(0..=raw.len());
        [&raw[..at], &frag, &raw[at..]].concat()
    } else {
        let i = rng.gen_range(0..raw.len());
        let j = rng.gen_range(i + 1..=raw.len());
        [&raw[..i], &frag, &raw[j..]].concat()
    })
}

