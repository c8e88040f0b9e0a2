use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::diag::{DiagCode, Diagnostic};
use super::{
    Constraint, Field, FieldKind, GeneratorRef, Mode, Record, SizeSpec, SizeUnit, TestlangDoc,
    Value, BUILTIN_GENERATORS, ENTRY_RECORD,
};

/// All errors and warnings for `doc`. No errors means the document is ready
/// for generation.
pub fn validate(doc: &TestlangDoc) -> Vec<Diagnostic> {
    let mut v = Validator {
        doc,
        diags: Vec::new(),
        seen: HashSet::new(),
    };
    v.run();
    v.diags
}

struct Validator<'a> {
    doc: &'a TestlangDoc,
    diags: Vec<Diagnostic>,
    seen: HashSet<(DiagCode, String)>,
}

impl<'a> Validator<'a> {
    fn push(&mut self, d: Diagnostic) {
        if self.seen.insert((d.code, d.path.clone())) {
            self.diags.push(d);
        }
    }

    fn error(&mut self, code: DiagCode, path: impl Into<String>, msg: impl Into<String>) {
        self.push(Diagnostic::error(code, path, msg));
    }

    fn warn(&mut self, code: DiagCode, path: impl Into<String>, msg: impl Into<String>) {
        self.push(Diagnostic::warning(code, path, msg));
    }

    fn run(&mut self) {
        let doc = self.doc;
        if doc.is_partial {
            if doc.records.contains_key(ENTRY_RECORD) {
                self.warn(
                    DiagCode::PartialRedefinesInput,
                    ENTRY_RECORD,
                    "partial document redefines the entry record",
                );
            }
        } else if !doc.records.contains_key(ENTRY_RECORD) {
            self.error(
                DiagCode::MissingEntryRecord,
                ENTRY_RECORD,
                "document has no INPUT record",
            );
        }
        for rec in doc.records.values() {
            self.record(rec);
        }
        let cyclic = self.cycles();
        if !doc.is_partial && !cyclic {
            self.unused_records();
            if doc.mode == Mode::Bytes {
                if let Some(entry) = doc.entry() {
                    self.tail_walk(entry, true);
                }
            }
        }
    }

    fn record(&mut self, rec: &'a Record) {
        if rec.fields.is_empty() {
            self.warn(DiagCode::EmptyRecord, &rec.name, "record has no fields");
        }
        let mut names = HashSet::new();
        for f in &rec.fields {
            if !names.insert(f.name.as_str()) {
                self.error(
                    DiagCode::DuplicateFieldName,
                    format!("{}.{}", rec.name, f.name),
                    format!("field `{}` appears more than once", f.name),
                );
            }
        }
        let refs = self.size_refs(rec);
        for f in &rec.fields {
            let path = format!("{}.{}", rec.name, f.name);
            self.field(f, &path);
            if f.int_type().is_some() && f.constraint.is_none() && !refs.contains(f.name.as_str()) {
                self.warn(
                    DiagCode::UnconstrainedField,
                    path,
                    "integer field has no range, enum or const",
                );
            }
        }
    }

    /// Checks every size reference of a record; returns the size-source names.
    fn size_refs(&mut self, rec: &'a Record) -> BTreeSet<&'a str> {
        let mut sources: BTreeMap<&str, &str> = BTreeMap::new();
        for (i, f) in rec.fields.iter().enumerate() {
            let Some(SizeSpec::Ref { field: target, unit }) = &f.size else {
                continue;
            };
            let path = format!("{}.{}.size", rec.name, f.name);
            let pos = rec.fields.iter().position(|g| &g.name == target);
            let Some(pos) = pos else {
                self.error(
                    DiagCode::UnresolvedSizeRef,
                    path,
                    format!("size refers to unknown field `{target}`"),
                );
                continue;
            };
            if pos >= i {
                self.error(
                    DiagCode::ForwardSizeRef,
                    path,
                    format!("size field `{target}` must come before `{}`", f.name),
                );
                continue;
            }
            let src = &rec.fields[pos];
            let Some(ty) = src.int_type() else {
                self.error(
                    DiagCode::InvalidSizeRef,
                    path,
                    format!("size field `{target}` is not an integer"),
                );
                continue;
            };
            let unit_ok = match unit {
                SizeUnit::Bytes => f.kind.is_blob(),
                SizeUnit::Elements => matches!(f.kind, FieldKind::Array(_)),
            };
            if !unit_ok {
                self.error(
                    DiagCode::InvalidSizeRef,
                    path.clone(),
                    "byte sizes apply to bytes, string and custom fields; element counts to arrays",
                );
            }
            if let Some(prev) = sources.insert(target.as_str(), f.name.as_str()) {
                self.error(
                    DiagCode::DuplicateSizeRef,
                    path.clone(),
                    format!("`{target}` already sizes `{prev}`"),
                );
            }
            // lengths the content can take must be values the size field admits
            if let Some(members) = f.constraint.members() {
                for m in members {
                    if let Some(b) = m.as_bytes() {
                        let len = f.serialized_len(b) as i128;
                        if !ty.contains(len) || !src.constraint.admits_int(len) {
                            self.error(
                                DiagCode::SizeConstraintConflict,
                                path.clone(),
                                format!("member of length {len} is not a value `{target}` admits"),
                            );
                        }
                    }
                }
            } else if !admits_some_length(src) {
                self.error(
                    DiagCode::SizeConstraintConflict,
                    path,
                    format!("`{target}` admits no non-negative length"),
                );
            }
        }
        sources.into_keys().collect()
    }

    fn field(&mut self, f: &Field, path: &str) {
        match &f.kind {
            FieldKind::Int { ty, .. } => {
                match &f.constraint {
                    Constraint::None => {}
                    Constraint::Range(lo, hi) => {
                        if lo > hi {
                            self.error(DiagCode::InvalidRange, path, format!("empty range [{lo}, {hi}]"));
                        } else if !ty.contains(*lo) || !ty.contains(*hi) {
                            self.error(
                                DiagCode::InvalidRange,
                                path,
                                format!("range [{lo}, {hi}] does not fit {ty}"),
                            );
                        }
                    }
                    c @ (Constraint::Enum(_) | Constraint::Const(_)) if vals_of(c).is_empty() => {
                        self.error(DiagCode::EmptyEnum, path, "enum has no members");
                    }
                    c @ (Constraint::Enum(_) | Constraint::Const(_)) => {
                        for v in vals_of(c) {
                            match v {
                                Value::Int(i) if ty.contains(*i) => {}
                                Value::Int(i) => self.error(
                                    DiagCode::EnumTypeMismatch,
                                    path,
                                    format!("{i} does not fit {ty}"),
                                ),
                                Value::Bytes(_) => self.error(
                                    DiagCode::EnumTypeMismatch,
                                    path,
                                    "integer field with a byte-string member",
                                ),
                            }
                        }
                    }
                    Constraint::Terminator(_) => self.error(
                        DiagCode::ConflictingConstraints,
                        path,
                        "terminators apply to bytes and string fields",
                    ),
                }
                if f.encoder.is_some() {
                    self.error(DiagCode::InvalidTransform, path, "integers cannot carry an encoder");
                }
                if f.hint.is_some() {
                    self.error(DiagCode::InvalidValue, path, "hints apply to bytes and string fields");
                }
            }
            FieldKind::Bytes | FieldKind::String | FieldKind::Custom(_) => self.blob(f, path),
            FieldKind::Array(elem) => {
                match &f.size {
                    None => self.error(
                        DiagCode::MissingRequired,
                        format!("{path}.size"),
                        "array has no element count",
                    ),
                    Some(SizeSpec::Range { min, max }) if min > max => self.error(
                        DiagCode::InvalidRange,
                        format!("{path}.size"),
                        format!("empty count range [{min}, {max}]"),
                    ),
                    _ => {}
                }
                if !f.constraint.is_none() {
                    self.error(DiagCode::InvalidValue, path, "arrays take no value constraint");
                }
                if matches!(elem.size, Some(SizeSpec::Ref { .. })) {
                    self.error(
                        DiagCode::InvalidSizeRef,
                        format!("{path}.element.size"),
                        "array elements cannot be sized by reference; wrap them in a record",
                    );
                }
                self.field(elem, &format!("{path}[]"));
            }
            FieldKind::Record(name) => {
                if !self.doc.records.contains_key(name) && !self.doc.is_partial {
                    self.error(
                        DiagCode::UnresolvedRecordRef,
                        path,
                        format!("no record named `{name}`"),
                    );
                }
                if f.size.is_some() || !f.constraint.is_none() {
                    self.error(DiagCode::InvalidValue, path, "record fields take no size or constraint");
                }
            }
        }
    }

    fn blob(&mut self, f: &Field, path: &str) {
        let size_path = format!("{path}.size");
        if let FieldKind::Custom(g) = &f.kind {
            if let GeneratorRef::Builtin { name, .. } = g {
                if !BUILTIN_GENERATORS.contains(&name.as_str()) {
                    self.error(
                        DiagCode::UnknownBuiltin,
                        path,
                        format!("no builtin generator `{name}` (have {})", BUILTIN_GENERATORS.join(", ")),
                    );
                }
            }
            if !f.constraint.is_none() {
                self.error(DiagCode::InvalidValue, path, "custom fields take no value constraint");
            }
            if f.size.is_none() {
                self.error(DiagCode::MissingRequired, size_path.clone(), "custom field has no size");
            }
        }
        if let Some(SizeSpec::Range { min, max }) = f.size {
            if min > max {
                self.error(
                    DiagCode::InvalidRange,
                    size_path.clone(),
                    format!("empty length range [{min}, {max}]"),
                );
            }
        }
        match &f.constraint {
            Constraint::None => {
                if f.size.is_none() && !matches!(f.kind, FieldKind::Custom(_)) {
                    self.error(
                        DiagCode::MissingRequired,
                        size_path.clone(),
                        "field needs a size, a terminator, or a const/enum value",
                    );
                }
            }
            Constraint::Range(..) => self.error(
                DiagCode::InvalidRange,
                path,
                "value ranges apply to integers; use size for lengths",
            ),
            c @ (Constraint::Enum(_) | Constraint::Const(_)) => {
                let vals = vals_of(c);
                if vals.is_empty() {
                    self.error(DiagCode::EmptyEnum, path, "enum has no members");
                }
                for v in &vals {
                    match v {
                        Value::Bytes(b) => {
                            if matches!(f.kind, FieldKind::String) && std::str::from_utf8(b).is_err() {
                                self.error(DiagCode::EnumTypeMismatch, path, "string member is not UTF-8");
                            }
                            if let Some(SizeSpec::Fixed(n)) = f.size {
                                if f.serialized_len(b) != n {
                                    self.error(
                                        DiagCode::InvalidSize,
                                        size_path.clone(),
                                        format!("member length {} differs from size {n}", f.serialized_len(b)),
                                    );
                                }
                            }
                        }
                        Value::Int(_) => self.error(
                            DiagCode::EnumTypeMismatch,
                            path,
                            "byte field with an integer member",
                        ),
                    }
                }
                if matches!(f.size, Some(SizeSpec::Range { .. })) {
                    self.error(
                        DiagCode::InvalidSize,
                        size_path.clone(),
                        "const and enum fields take their length from the members",
                    );
                }
            }
            Constraint::Terminator(t) => {
                if t.is_empty() {
                    self.error(DiagCode::InvalidValue, format!("{path}.terminator"), "empty terminator");
                }
                if matches!(f.size, Some(SizeSpec::Fixed(_) | SizeSpec::Ref { .. })) {
                    self.error(
                        DiagCode::InvalidSize,
                        size_path.clone(),
                        "terminated fields take a length range only",
                    );
                }
                if f.encoder.is_some() {
                    self.error(
                        DiagCode::InvalidTransform,
                        path,
                        "terminated fields cannot carry an encoder",
                    );
                }
            }
        }
        if let Some(t) = f.encoder {
            match f.size {
                Some(SizeSpec::Fixed(n)) if !t.length_feasible(n) => self.error(
                    DiagCode::InvalidSize,
                    size_path,
                    format!("no {} output is exactly {n} bytes long", t.name()),
                ),
                Some(SizeSpec::Range { min, max }) if min <= max && !(min..=max).any(|l| t.length_feasible(l)) => {
                    self.error(
                        DiagCode::InvalidSize,
                        size_path,
                        format!("no {} output length lies in [{min}, {max}]", t.name()),
                    )
                }
                _ => {}
            }
        }
    }

    /// Reports each cycle in the record graph; returns whether any exists.
    fn cycles(&mut self) -> bool {
        let doc = self.doc;
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        let mut found = false;
        for name in doc.records.keys() {
            let mut stack = Vec::new();
            found |= self.dfs(name, &mut state, &mut stack);
        }
        found
    }

    fn dfs<'b>(&mut self, name: &'b str, state: &mut BTreeMap<&'b str, u8>, stack: &mut Vec<&'b str>) -> bool
    where
        'a: 'b,
    {
        match state.get(name) {
            Some(2) => return false,
            Some(1) => {
                let start = stack.iter().position(|n| *n == name).unwrap_or(0);
                let mut cycle: Vec<&str> = stack[start..].to_vec();
                cycle.push(name);
                self.error(
                    DiagCode::RecordCycle,
                    cycle[0],
                    format!("records reference each other in a cycle: {}", cycle.join(" -> ")),
                );
                return true;
            }
            _ => {}
        }
        let Some(rec) = self.doc.records.get(name) else {
            return false;
        };
        state.insert(name, 1);
        stack.push(name);
        let mut found = false;
        for f in &rec.fields {
            for target in record_targets(f) {
                if let Some((key, _)) = self.doc.records.get_key_value(target) {
                    found |= self.dfs(key.as_str(), state, stack);
                }
            }
        }
        stack.pop();
        state.insert(name, 2);
        found
    }

    fn unused_records(&mut self) {
        let doc = self.doc;
        let mut reached = BTreeSet::new();
        let mut todo = vec![ENTRY_RECORD];
        while let Some(name) = todo.pop() {
            if !reached.insert(name) {
                continue;
            }
            if let Some(rec) = doc.records.get(name) {
                for f in &rec.fields {
                    todo.extend(record_targets(f));
                }
            }
        }
        for name in doc.records.keys() {
            if !reached.contains(name.as_str()) {
                self.warn(DiagCode::UnusedRecord, name, "record is not reachable from INPUT");
            }
        }
    }

    /// Fields whose length cannot be read off the blob must sit at the very
    /// end of the input.
    fn tail_walk(&mut self, rec: &Record, tail: bool) {
        let n = rec.fields.len();
        for (i, f) in rec.fields.iter().enumerate() {
            let allowed = tail && i + 1 == n;
            self.tail_field(f, &format!("{}.{}", rec.name, f.name), allowed);
        }
    }

    fn tail_field(&mut self, f: &Field, path: &str, allowed: bool) {
        let ambiguous = match &f.kind {
            FieldKind::Int { .. } => false,
            FieldKind::Record(name) => {
                if let Some(rec) = self.doc.records.get(name) {
                    self.tail_walk(rec, allowed);
                }
                false
            }
            FieldKind::Array(elem) => {
                self.tail_field(elem, &format!("{path}[]"), false);
                matches!(f.size, Some(SizeSpec::Range { .. }))
            }
            _ => !blob_delimited(f),
        };
        if ambiguous && !allowed {
            self.error(
                DiagCode::AmbiguousLength,
                path,
                "variable-length field without a size reference or terminator must be the last field of the input",
            );
        }
    }
}

fn vals_of(c: &Constraint) -> Vec<&Value> {
    c.members().unwrap_or_default()
}

fn admits_some_length(src: &Field) -> bool {
    let Some(ty) = src.int_type() else {
        return false;
    };
    match &src.constraint {
        Constraint::Range(_, hi) => *hi >= 0,
        Constraint::Enum(_) | Constraint::Const(_) => vals_of(&src.constraint)
            .iter()
            .any(|v| v.as_int().is_some_and(|i| i >= 0)),
        _ => ty.max_value() >= 0,
    }
}

/// Whether a byte-like field's length is determined without looking past it.
pub(crate) fn blob_delimited(f: &Field) -> bool {
    match f.size {
        Some(SizeSpec::Fixed(_) | SizeSpec::Ref { .. }) => true,
        _ => f.terminator().is_some() || f.implied_len().is_some(),
    }
}

fn record_targets(f: &Field) -> Vec<&str> {
    match &f.kind {
        FieldKind::Record(name) => vec![name.as_str()],
        FieldKind::Array(elem) => record_targets(elem),
        _ => Vec::new(),
    }
}
