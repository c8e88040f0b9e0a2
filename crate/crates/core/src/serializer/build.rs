//! Value-tree construction for coverage-mode generation.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ast::{child_path, element_path, AstNode, NodeValue};
use crate::int::IntType;
use crate::rng::SeedStream;
use crate::testlang::{
    Constraint, Field, FieldKind, GeneratorRef, Record, SizeSpec, DEFAULT_MAX_BYTES,
    DEFAULT_MAX_ELEMENTS, ENTRY_RECORD,
};

use super::{builtin, external, GenerateError, Generator};

/// What a size field decided for the field it sizes.
enum Plan {
    Len(u64),
    Content(Vec<u8>),
}

pub(crate) fn build_input(gen: &Generator, seeds: &SeedStream) -> Result<AstNode, GenerateError> {
    let entry = gen.doc.entry().expect("validated document has INPUT");
    Builder { gen, seeds }.record(entry, ENTRY_RECORD.to_string(), ENTRY_RECORD)
}

pub(crate) fn build_record(gen: &Generator, rec: &Record, seeds: &SeedStream) -> Result<AstNode, GenerateError> {
    Builder { gen, seeds }.record(rec, rec.name.clone(), &rec.name)
}

struct Builder<'g, 'a> {
    gen: &'g Generator<'a>,
    seeds: &'g SeedStream,
}

impl Builder<'_, '_> {
    fn rng(&self, path: &str) -> ChaCha8Rng {
        self.seeds.substream(path)
    }

    fn record(&self, rec: &Record, path: String, name: &str) -> Result<AstNode, GenerateError> {
        let refs = rec.size_refs();
        let mut plans: HashMap<&str, Plan> = HashMap::new();
        let mut children = Vec::with_capacity(rec.fields.len());
        for f in &rec.fields {
            let fpath = child_path(&path, &f.name);
            let node = if let Some(content) = refs.get(f.name.as_str()) {
                let cpath = child_path(&path, &content.name);
                let plan = self.plan_size(f, &fpath, content, &cpath)?;
                let len = match &plan {
                    Plan::Len(l) => *l,
                    Plan::Content(c) => content.serialized_len(c),
                };
                plans.insert(content.name.as_str(), plan);
                AstNode::new(fpath, &f.name, NodeValue::Int(len as i128))
            } else {
                self.field(f, fpath, &f.name, plans.remove(f.name.as_str()))?
            };
            children.push(node);
        }
        Ok(AstNode::new(path, name, NodeValue::Record(children)))
    }

    /// Decides the length a size field declares, before its content exists.
    fn plan_size(&self, src: &Field, spath: &str, content: &Field, cpath: &str) -> Result<Plan, GenerateError> {
        if let Some(members) = content.constraint.members() {
            let bytes: Vec<&[u8]> = members.iter().filter_map(|m| m.as_bytes()).collect();
            let pick = bytes.choose(&mut self.rng(cpath)).expect("validated enum is nonempty");
            return Ok(Plan::Content(pick.to_vec()));
        }
        let ty = src.int_type().expect("size source is an integer");
        let (cap, step) = match &content.kind {
            FieldKind::Array(_) => (DEFAULT_MAX_ELEMENTS, 1),
            _ => (DEFAULT_MAX_BYTES, step_of(content)),
        };
        let mut rng = self.rng(spath);
        let len = match &src.constraint {
            Constraint::Range(lo, hi) => {
                draw_len((*lo).max(0), (*hi).min(ty.max_value()), step, &mut rng)
            }
            Constraint::Enum(_) | Constraint::Const(_) => {
                let ok: Vec<i128> = src
                    .constraint
                    .members()
                    .unwrap_or_default()
                    .iter()
                    .filter_map(|v| v.as_int())
                    .filter(|&v| v >= 0 && (v as u64).is_multiple_of(step))
                    .collect();
                ok.choose(&mut rng).map(|&v| v as u64)
            }
            _ => draw_len(0, (cap as i128).min(ty.max_value()), step, &mut rng),
        };
        len.map(Plan::Len).ok_or_else(|| GenerateError::Infeasible {
            field: spath.to_string(),
            reason: format!("no admissible length for `{}`", content.name),
        })
    }

    fn field(&self, f: &Field, path: String, name: &str, plan: Option<Plan>) -> Result<AstNode, GenerateError> {
        let value = match &f.kind {
            FieldKind::Int { ty, .. } => NodeValue::Int(draw_int(*ty, &f.constraint, &mut self.rng(&path))),
            FieldKind::Bytes | FieldKind::String | FieldKind::Custom(_) => {
                NodeValue::Bytes(self.blob(f, &path, plan)?)
            }
            FieldKind::Array(elem) => {
                let count = match (plan, &f.size) {
                    (Some(Plan::Len(n)), _) => n,
                    (_, Some(SizeSpec::Fixed(n))) => *n,
                    (_, Some(SizeSpec::Range { min, max })) => self.rng(&path).gen_range(*min..=*max),
                    _ => 0,
                };
                let items = (0..count as usize)
                    .map(|i| self.field(elem, element_path(&path, i), &elem.name, None))
                    .collect::<Result<Vec<_>, _>>()?;
                NodeValue::Array(items)
            }
            FieldKind::Record(rname) => {
                let rec = self
                    .gen
                    .doc
                    .record(rname)
                    .ok_or_else(|| GenerateError::ShapeMismatch(path.clone()))?;
                return self.record(rec, path, name);
            }
        };
        Ok(AstNode::new(path, name, value))
    }

    fn blob(&self, f: &Field, path: &str, plan: Option<Plan>) -> Result<Vec<u8>, GenerateError> {
        let mut rng = self.rng(path);
        if let Some(Plan::Content(c)) = plan {
            return Ok(c);
        }
        if let Some(members) = f.constraint.members() {
            let bytes: Vec<&[u8]> = members.iter().filter_map(|m| m.as_bytes()).collect();
            return Ok(bytes.choose(&mut rng).expect("validated enum is nonempty").to_vec());
        }
        let infeasible = |reason: String| GenerateError::Infeasible {
            field: path.to_string(),
            reason,
        };
        let len = match (plan, &f.size) {
            (Some(Plan::Len(n)), _) => n,
            (_, Some(SizeSpec::Fixed(n))) => *n,
            (_, Some(SizeSpec::Range { min, max })) if f.terminator().is_none() => {
                draw_len(*min as i128, *max as i128, step_of(f), &mut rng)
                    .ok_or_else(|| infeasible(format!("no encodable length in [{min}, {max}]")))?
            }
            _ => {
                let (min, max) = f.terminated_range();
                rng.gen_range(min..=max)
            }
        };
        if len > self.gen.budget.max_bytes {
            return Err(infeasible(format!(
                "length {len} exceeds the {}-byte content cap",
                self.gen.budget.max_bytes
            )));
        }
        let n = match f.encoder {
            Some(t) => t.content_len(len),
            None => len,
        } as usize;
        let avoid = f.terminator().map(|t| t[0]);
        Ok(match &f.kind {
            FieldKind::Bytes => random_bytes(n, avoid, &mut rng),
            FieldKind::String => printable(n, avoid, &mut rng),
            FieldKind::Custom(GeneratorRef::Builtin { name, args }) => {
                builtin::run_builtin(name, args, n, &mut rng)
            }
            FieldKind::Custom(GeneratorRef::External(cmd)) => {
                let seed = self.seeds.child_seed(path);
                let out = external::run_external_generator(cmd, seed, path, n as u64, self.gen.budget.timeout)
                    .map_err(|error| GenerateError::ExternalGeneratorFailure {
                        field: path.to_string(),
                        error,
                    })?;
                let exact = matches!(f.size, Some(SizeSpec::Fixed(_)));
                if exact && out.len() != n {
                    return Err(GenerateError::ExternalGeneratorFailure {
                        field: path.to_string(),
                        error: external::ExternalError::WrongLength {
                            expected: n as u64,
                            got: out.len() as u64,
                        },
                    });
                }
                out
            }
            _ => unreachable!("blob kinds only"),
        })
    }
}

/// Serialized-length granularity imposed by a field's transform.
pub(crate) fn step_of(f: &Field) -> u64 {
    match f.encoder {
        Some(crate::testlang::Transform::Hex) => 2,
        Some(crate::testlang::Transform::Base64) => 4,
        None => 1,
    }
}

/// Uniform multiple of `step` in [lo, hi], if any.
pub(crate) fn draw_len(lo: i128, hi: i128, step: u64, rng: &mut ChaCha8Rng) -> Option<u64> {
    let lo = lo.max(0);
    let step = step as i128;
    let kmin = (lo + step - 1) / step;
    let kmax = hi.div_euclid(step);
    (kmin <= kmax).then(|| (rng.gen_range(kmin..=kmax) * step) as u64)
}

pub(crate) fn draw_int(ty: IntType, c: &Constraint, rng: &mut ChaCha8Rng) -> i128 {
    match c {
        Constraint::Range(lo, hi) => rng.gen_range(*lo..=*hi),
        Constraint::Enum(_) | Constraint::Const(_) => {
            let ints: Vec<i128> = c.members().unwrap_or_default().iter().filter_map(|v| v.as_int()).collect();
            *ints.choose(rng).expect("validated enum is nonempty")
        }
        _ => rng.gen_range(ty.min_value()..=ty.max_value()),
    }
}

pub(crate) fn random_bytes(n: usize, avoid: Option<u8>, rng: &mut ChaCha8Rng) -> Vec<u8> {
    (0..n)
        .map(|_| loop {
            let b: u8 = rng.gen();
            if Some(b) != avoid {
                break b;
            }
        })
        .collect()
}

pub(crate) fn printable(n: usize, avoid: Option<u8>, rng: &mut ChaCha8Rng) -> Vec<u8> {
    (0..n)
        .map(|_| loop {
            let b: u8 = rng.gen_range(0x20..=0x7e);
            if Some(b) != avoid {
                break b;
            }
        })
        .collect()
}
