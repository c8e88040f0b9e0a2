//! Parsing a blob back against a document.

use std::collections::HashMap;

use thiserror::Error;

use crate::ast::{child_path, element_path, AstNode, GenMode, NodeValue, Span, TestlangAst};

use super::{Constraint, Field, FieldKind, Mode, Record, SizeSpec, TestlangDoc, ENTRY_RECORD};

/// Bound on re-parses tried when looking for a consistent declared length.
const MAX_RESYNC_ATTEMPTS: usize = 512;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("{count} trailing bytes at offset {offset}")]
    TrailingBytes { offset: usize, count: usize },
    #[error("`{size_field}` declares {declared} for `{content}`{}", match .consistent { Some(c) => format!(" but the input is consistent with {c}"), None => String::new() })]
    SizeRefMismatch {
        size_field: String,
        content: String,
        declared: i128,
        consistent: Option<u64>,
    },
    #[error("`{field}` violates its constraint: {detail}")]
    ConstraintViolated { field: String, detail: String },
    #[error("`{field}` needs {needed} bytes, {available} left{}", match .sized_by { Some(s) => format!(" (length from `{s}`)"), None => String::new() })]
    Underflow {
        field: String,
        sized_by: Option<String>,
        needed: usize,
        available: usize,
    },
    #[error("cannot check: {0}")]
    Unsupported(String),
}

impl CheckError {
    /// The field the failure is attributed to: the violating field, or the
    /// size field whose declared length does not fit the input.
    pub fn blamed_field(&self) -> Option<&str> {
        match self {
            Self::ConstraintViolated { field, .. } => Some(field),
            Self::SizeRefMismatch { size_field, .. } => Some(size_field),
            Self::Underflow {
                sized_by: Some(s), ..
            } => Some(s),
            Self::Underflow { field, .. } => Some(field),
            Self::TrailingBytes { .. } | Self::Unsupported(_) => None,
        }
    }
}

/// Parses `blob` left to right against `doc` and returns its AST. The whole
/// blob must be consumed.
pub fn structure_check(doc: &TestlangDoc, blob: &[u8]) -> Result<TestlangAst, CheckError> {
    if doc.mode != Mode::Bytes {
        return Err(CheckError::Unsupported("document is in fdp mode".into()));
    }
    let Some(entry) = doc.entry() else {
        return Err(CheckError::Unsupported("document has no INPUT record".into()));
    };
    let no_overrides = HashMap::new();
    let mut first = Parser::new(doc, blob, &no_overrides);
    let err = match first.run(entry) {
        Ok(root) => {
            return Ok(TestlangAst {
                root,
                doc_id: doc.doc_id(),
                mode_used: GenMode::Coverage,
                violated_fields: Vec::new(),
            })
        }
        Err(e) => e,
    };
    let preferred = match &err {
        CheckError::TrailingBytes { .. } => None,
        CheckError::Underflow { sized_by, .. } => sized_by.as_deref(),
        _ => return Err(err),
    };
    let mut pairs = first.pairs.clone();
    // the size field that overran is the likeliest culprit
    pairs.sort_by_key(|p| Some(p.size_path.as_str()) != preferred);
    match resync(doc, entry, blob, &pairs) {
        Some(found) => Err(found),
        None => Err(err),
    }
}

/// Looks for a single size field whose declared value, if changed, would make
/// the whole blob parse. Pairs are tried in order, nearest values first.
fn resync(doc: &TestlangDoc, entry: &Record, blob: &[u8], pairs: &[RefPair]) -> Option<CheckError> {
    let mut attempts = 0;
    let limit = blob.len() as i128;
    for pair in pairs {
        let mut cands: Vec<i128> = (0..=limit).filter(|&c| c != pair.declared).collect();
        cands.sort_by_key(|&c| ((c - pair.declared).abs(), c));
        for cand in cands {
            attempts += 1;
            if attempts > MAX_RESYNC_ATTEMPTS {
                return None;
            }
            let overrides = HashMap::from([(pair.size_path.clone(), cand)]);
            if Parser::new(doc, blob, &overrides).run(entry).is_ok() {
                return Some(CheckError::SizeRefMismatch {
                    size_field: pair.size_path.clone(),
                    content: pair.content_path.clone(),
                    declared: pair.declared,
                    consistent: Some(cand as u64),
                });
            }
        }
    }
    None
}

#[derive(Clone, Debug)]
struct RefPair {
    size_path: String,
    content_path: String,
    declared: i128,
}

struct Parser<'a> {
    doc: &'a TestlangDoc,
    blob: &'a [u8],
    pos: usize,
    overrides: &'a HashMap<String, i128>,
    pairs: Vec<RefPair>,
}

impl<'a> Parser<'a> {
    fn new(doc: &'a TestlangDoc, blob: &'a [u8], overrides: &'a HashMap<String, i128>) -> Self {
        Self {
            doc,
            blob,
            pos: 0,
            overrides,
            pairs: Vec::new(),
        }
    }

    fn run(&mut self, entry: &Record) -> Result<AstNode, CheckError> {
        let root = self.record(entry, ENTRY_RECORD.to_string(), ENTRY_RECORD, true)?;
        if self.pos < self.blob.len() {
            return Err(CheckError::TrailingBytes {
                offset: self.pos,
                count: self.blob.len() - self.pos,
            });
        }
        Ok(root)
    }

    fn remaining(&self) -> usize {
        self.blob.len() - self.pos
    }

    fn record(&mut self, rec: &Record, path: String, name: &str, tail: bool) -> Result<AstNode, CheckError> {
        let start = self.pos;
        // size-source values seen so far in this record
        let mut locals: HashMap<&str, (i128, String)> = HashMap::new();
        let mut children = Vec::with_capacity(rec.fields.len());
        let n = rec.fields.len();
        for (i, f) in rec.fields.iter().enumerate() {
            let fpath = child_path(&path, &f.name);
            let node = self.field(f, fpath, &f.name, tail && i + 1 == n, &locals)?;
            if let Some(v) = node.as_int() {
                locals.insert(f.name.as_str(), (v, node.path.clone()));
            }
            children.push(node);
        }
        let mut node = AstNode::new(path, name, NodeValue::Record(children));
        node.span = Some(Span {
            offset: start,
            len: self.pos - start,
        });
        Ok(node)
    }

    fn field(
        &mut self,
        f: &Field,
        path: String,
        name: &str,
        tail: bool,
        locals: &HashMap<&str, (i128, String)>,
    ) -> Result<AstNode, CheckError> {
        let start = self.pos;
        let value = match &f.kind {
            FieldKind::Int { ty, endian } => {
                let width = ty.width.bytes();
                if self.remaining() < width {
                    return Err(CheckError::Underflow {
                        field: path,
                        sized_by: None,
                        needed: width,
                        available: self.remaining(),
                    });
                }
                let decoded = ty.decode(&self.blob[self.pos..self.pos + width], *endian);
                self.pos += width;
                let v = self.overrides.get(&path).copied().unwrap_or(decoded);
                if !f.constraint.admits_int(v) {
                    return Err(CheckError::ConstraintViolated {
                        field: path,
                        detail: format!("{v} is not admitted"),
                    });
                }
                NodeValue::Int(v)
            }
            FieldKind::Bytes | FieldKind::String | FieldKind::Custom(_) => {
                NodeValue::Bytes(self.blob_field(f, &path, locals)?)
            }
            FieldKind::Array(elem) => {
                let mut items = Vec::new();
                match &f.size {
                    Some(SizeSpec::Range { min, max }) => {
                        while self.remaining() > 0 {
                            let i = items.len();
                            items.push(self.field(elem, element_path(&path, i), &elem.name, false, locals)?);
                        }
                        let count = items.len() as u64;
                        if count < *min || count > *max {
                            return Err(CheckError::ConstraintViolated {
                                field: path,
                                detail: format!("{count} elements, expected [{min}, {max}]"),
                            });
                        }
                    }
                    _ => {
                        let count = self.declared_len(f, &path, locals)?;
                        for i in 0..count {
                            items.push(self.field(elem, element_path(&path, i), &elem.name, false, locals)?);
                        }
                    }
                }
                NodeValue::Array(items)
            }
            FieldKind::Record(rname) => {
                let rec = self
                    .doc
                    .record(rname)
                    .ok_or_else(|| CheckError::Unsupported(format!("no record named `{rname}`")))?;
                return self.record(rec, path, name, tail);
            }
        };
        let mut node = AstNode::new(path, name, value);
        node.span = Some(Span {
            offset: start,
            len: self.pos - start,
        });
        Ok(node)
    }

    /// Length from a Fixed or Ref size; records the ref pair.
    fn declared_len(
        &mut self,
        f: &Field,
        path: &str,
        locals: &HashMap<&str, (i128, String)>,
    ) -> Result<usize, CheckError> {
        match &f.size {
            Some(SizeSpec::Fixed(n)) => Ok(*n as usize),
            Some(SizeSpec::Ref { field, .. }) => {
                let (v, spath) = locals
                    .get(field.as_str())
                    .cloned()
                    .ok_or_else(|| CheckError::Unsupported(format!("size field `{field}` not parsed")))?;
                self.pairs.push(RefPair {
                    size_path: spath.clone(),
                    content_path: path.to_string(),
                    declared: v,
                });
                if v < 0 {
                    return Err(CheckError::SizeRefMismatch {
                        size_field: spath,
                        content: path.to_string(),
                        declared: v,
                        consistent: None,
                    });
                }
                Ok(v as usize)
            }
            _ => Ok(self.remaining()),
        }
    }

    fn blob_field(
        &mut self,
        f: &Field,
        path: &str,
        locals: &HashMap<&str, (i128, String)>,
    ) -> Result<Vec<u8>, CheckError> {
        let violated = |detail: String| CheckError::ConstraintViolated {
            field: path.to_string(),
            detail,
        };
        let raw: &[u8] = if let Some(term) = f.terminator() {
            let hay = &self.blob[self.pos..];
            let Some(at) = hay.windows(term.len()).position(|w| w == term) else {
                return Err(CheckError::Underflow {
                    field: path.to_string(),
                    sized_by: None,
                    needed: hay.len() + term.len(),
                    available: hay.len(),
                });
            };
            let raw = &self.blob[self.pos..self.pos + at];
            self.pos += at + term.len();
            let (min, max) = f.terminated_range();
            if (raw.len() as u64) < min || raw.len() as u64 > max {
                return Err(violated(format!("length {} outside [{min}, {max}]", raw.len())));
            }
            raw
        } else {
            let len = match (&f.size, f.implied_len()) {
                (None, Some(n)) => n as usize,
                (Some(SizeSpec::Fixed(_) | SizeSpec::Ref { .. }), _) => self.declared_len(f, path, locals)?,
                _ => self.remaining(),
            };
            if len > self.remaining() {
                let sized_by = match &f.size {
                    Some(SizeSpec::Ref { field, .. }) => locals.get(field.as_str()).map(|(_, p)| p.clone()),
                    _ => None,
                };
                return Err(CheckError::Underflow {
                    field: path.to_string(),
                    sized_by,
                    needed: len,
                    available: self.remaining(),
                });
            }
            let raw = &self.blob[self.pos..self.pos + len];
            self.pos += len;
            if let Some(SizeSpec::Range { min, max }) = f.size {
                if (len as u64) < min || len as u64 > max {
                    return Err(violated(format!("length {len} outside [{min}, {max}]")));
                }
            }
            raw
        };
        let content = match f.encoder {
            Some(t) => t
                .decode(raw)
                .ok_or_else(|| violated(format!("not valid {}", t.name())))?,
            None => raw.to_vec(),
        };
        if matches!(f.kind, FieldKind::String) && std::str::from_utf8(&content).is_err() {
            return Err(violated("string is not valid UTF-8".into()));
        }
        if matches!(f.constraint, Constraint::Enum(_) | Constraint::Const(_)) && !f.constraint.admits_bytes(&content) {
            return Err(violated("value is not a permitted member".into()));
        }
        Ok(content)
    }
}
