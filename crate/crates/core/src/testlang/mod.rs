//! Testlang: a declarative description of a structured input format.
//!
//! A document is an ordered set of records. Each record is an ordered list of
//! fields; fields are integers, byte strings, text strings, arrays, references
//! to other records, or custom generator hooks. The record named `INPUT` is
//! the entry point. See the README for the JSON syntax.

mod check;
mod diag;
mod json;
mod merge;
mod parse;
mod validate;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::int::{Endian, IntType};

pub use check::{structure_check, CheckError};
pub use diag::{DiagCode, Diagnostic, Severity};
pub use json::to_json;
pub use merge::{merge_partial, MergeError};
pub use parse::parse_testlang;
pub use validate::validate;

pub const ENTRY_RECORD: &str = "INPUT";
pub const SCHEMA_VERSION: u32 = 1;

/// Fallback length bounds used when nothing in the document caps a length.
pub const DEFAULT_MAX_BYTES: u64 = 32;
pub const DEFAULT_MAX_ELEMENTS: u64 = 8;
/// Content bounds for terminator-delimited fields without an explicit size.
pub const DEFAULT_TERMINATED_RANGE: (u64, u64) = (0, 16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Bytes,
    Fdp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestlangDoc {
    pub schema_version: u32,
    pub mode: Mode,
    pub default_endian: Endian,
    pub is_partial: bool,
    pub records: IndexMap<String, Record>,
    pub metadata: DocMetadata,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocMetadata {
    pub target_lines: Vec<(String, u32)>,
    pub deprioritized: bool,
    pub created_seq: u64,
    pub use_count: u64,
    pub lines_achieved: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub name: String,
    pub fields: Vec<Field>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub name: String,
    pub kind: FieldKind,
    pub size: Option<SizeSpec>,
    pub constraint: Constraint,
    pub hint: Option<Hint>,
    pub encoder: Option<Transform>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FieldKind {
    /// Endianness is resolved against the document default at parse time.
    Int { ty: IntType, endian: Endian },
    Bytes,
    /// UTF-8 text.
    String,
    Array(Box<Field>),
    Record(String),
    Custom(GeneratorRef),
}

impl FieldKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Int { .. } => "int",
            Self::Bytes => "bytes",
            Self::String => "string",
            Self::Array(_) => "array",
            Self::Record(_) => "record",
            Self::Custom(_) => "custom",
        }
    }

    pub fn int_type(&self) -> Option<IntType> {
        match self {
            Self::Int { ty, .. } => Some(*ty),
            _ => None,
        }
    }

    /// Leaves whose content is a byte sequence.
    pub fn is_blob(&self) -> bool {
        matches!(self, Self::Bytes | Self::String | Self::Custom(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SizeUnit {
    Bytes,
    Elements,
}

/// Length of a field: in serialized bytes for byte-like fields (after any
/// transform, excluding a terminator), in elements for arrays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SizeSpec {
    Fixed(u64),
    Ref { field: String, unit: SizeUnit },
    Range { min: u64, max: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Int(i128),
    Bytes(Vec<u8>),
}

impl Value {
    pub fn as_int(&self) -> Option<i128> {
        match self {
            Self::Int(v) => Some(*v),
            Self::Bytes(_) => None,
        }
    }

    pub fn as_bytes(&self) -> Option<&[u8]> {
        match self {
            Self::Bytes(b) => Some(b),
            Self::Int(_) => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Constraint {
    #[default]
    None,
    Range(i128, i128),
    Enum(Vec<Value>),
    Const(Value),
    Terminator(Vec<u8>),
}

impl Constraint {
    pub fn is_none(&self) -> bool {
        matches!(self, Self::None)
    }

    /// Whether an integer satisfies the constraint.
    pub fn admits_int(&self, v: i128) -> bool {
        match self {
            Self::None | Self::Terminator(_) => true,
            Self::Range(lo, hi) => (*lo..=*hi).contains(&v),
            Self::Enum(vals) => vals.iter().any(|x| x.as_int() == Some(v)),
            Self::Const(c) => c.as_int() == Some(v),
        }
    }

    /// Whether byte content satisfies a membership constraint.
    pub fn admits_bytes(&self, b: &[u8]) -> bool {
        match self {
            Self::Enum(vals) => vals.iter().any(|x| x.as_bytes() == Some(b)),
            Self::Const(c) => c.as_bytes() == Some(b),
            _ => true,
        }
    }

    /// Members of an Enum or Const constraint.
    pub fn members(&self) -> Option<Vec<&Value>> {
        match self {
            Self::Enum(vals) => Some(vals.iter().collect()),
            Self::Const(c) => Some(vec![c]),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hint {
    Filename,
    Query,
    Url,
    Text,
}

impl Hint {
    pub fn name(self) -> &'static str {
        match self {
            Self::Filename => "filename",
            Self::Query => "query",
            Self::Url => "url",
            Self::Text => "text",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "filename" => Self::Filename,
            "query" => Self::Query,
            "url" => Self::Url,
            "text" => Self::Text,
            _ => return None,
        })
    }
}

/// Serialization transform applied to a byte-like field's content.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transform {
    Hex,
    Base64,
}

impl Transform {
    pub fn name(self) -> &'static str {
        match self {
            Self::Hex => "hex",
            Self::Base64 => "base64",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hex" => Some(Self::Hex),
            "base64" => Some(Self::Base64),
            _ => None,
        }
    }

    pub fn encode(self, content: &[u8]) -> Vec<u8> {
        use base64::Engine;
        match self {
            Self::Hex => hex::encode(content).into_bytes(),
            Self::Base64 => base64::engine::general_purpose::STANDARD
                .encode(content)
                .into_bytes(),
        }
    }

    pub fn decode(self, encoded: &[u8]) -> Option<Vec<u8>> {
        use base64::Engine;
        match self {
            Self::Hex => hex::decode(encoded).ok(),
            Self::Base64 => base64::engine::general_purpose::STANDARD.decode(encoded).ok(),
        }
    }

    /// Whether some content encodes to exactly `len` bytes.
    pub fn length_feasible(self, len: u64) -> bool {
        match self {
            Self::Hex => len.is_multiple_of(2),
            Self::Base64 => len.is_multiple_of(4),
        }
    }

    /// Content length that encodes to `len` bytes (`len` must be feasible).
    pub fn content_len(self, len: u64) -> u64 {
        match self {
            Self::Hex => len / 2,
            Self::Base64 => len / 4 * 3,
        }
    }
}

pub const BUILTIN_GENERATORS: &[&str] = &["ascii_digits", "ascii_printable", "utf8_text", "uuid_like"];

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorRef {
    Builtin {
        name: String,
        args: BTreeMap<String, serde_json::Value>,
    },
    /// Shell command line; `{seed}`, `{max_bytes}` and `{field}` are
    /// substituted before it runs.
    External(String),
}

impl TestlangDoc {
    pub fn entry(&self) -> Option<&Record> {
        self.records.get(ENTRY_RECORD)
    }

    pub fn record(&self, name: &str) -> Option<&Record> {
        self.records.get(name)
    }

    /// Content fingerprint of the format (records, mode, endianness);
    /// metadata does not contribute.
    pub fn doc_id(&self) -> String {
        use sha2::{Digest, Sha256};
        let canon = json::format_json(self);
        let digest = Sha256::digest(canon.to_string().as_bytes());
        hex::encode(&digest[..8])
    }
}

impl Record {
    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.name == name)
    }

    /// Maps each size-source field name to the field it sizes.
    pub fn size_refs(&self) -> BTreeMap<&str, &Field> {
        self.fields
            .iter()
            .filter_map(|f| match &f.size {
                Some(SizeSpec::Ref { field, .. }) => Some((field.as_str(), f)),
                _ => None,
            })
            .collect()
    }
}

impl Field {
    pub fn int_type(&self) -> Option<IntType> {
        self.kind.int_type()
    }

    pub fn endian(&self) -> Endian {
        match self.kind {
            FieldKind::Int { endian, .. } => endian,
            _ => Endian::Big,
        }
    }

    pub fn terminator(&self) -> Option<&[u8]> {
        match &self.constraint {
            Constraint::Terminator(t) => Some(t),
            _ => None,
        }
    }

    /// Length bounds of a terminator-delimited field.
    pub fn terminated_range(&self) -> (u64, u64) {
        match self.size {
            Some(SizeSpec::Range { min, max }) => (min, max),
            _ => DEFAULT_TERMINATED_RANGE,
        }
    }

    /// For byte-like Enum/Const fields without a size: the common serialized
    /// member length, if all members agree.
    pub fn implied_len(&self) -> Option<u64> {
        if self.size.is_some() || !self.kind.is_blob() {
            return None;
        }
        let members = self.constraint.members()?;
        let lens: Vec<u64> = members
            .iter()
            .filter_map(|m| m.as_bytes())
            .map(|b| self.serialized_len(b))
            .collect();
        let first = *lens.first()?;
        lens.iter().all(|&l| l == first).then_some(first)
    }

    pub fn serialized_len(&self, content: &[u8]) -> u64 {
        match self.encoder {
            Some(t) => t.encode(content).len() as u64,
            None => content.len() as u64,
        }
    }
}
