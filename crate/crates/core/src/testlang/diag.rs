use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// Stable machine-readable diagnostic codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagCode {
    SyntaxError,
    UnsupportedSchemaVersion,
    MissingRequired,
    UnknownFieldKind,
    InvalidValue,
    InvalidWidth,
    InvalidSize,
    InvalidRange,
    EmptyEnum,
    EnumTypeMismatch,
    ConflictingConstraints,
    UnknownBuiltin,
    InvalidTransform,
    EmptyRecord,
    DuplicateRecordName,
    DuplicateFieldName,
    MissingEntryRecord,
    UnresolvedRecordRef,
    RecordCycle,
    UnresolvedSizeRef,
    ForwardSizeRef,
    InvalidSizeRef,
    DuplicateSizeRef,
    SizeConstraintConflict,
    AmbiguousLength,
    UnconstrainedField,
    UnusedRecord,
    PartialRedefinesInput,
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagCode,
    /// Location of the offending node, e.g. `Lookup.table.size`.
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: DiagCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            code,
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn warning(code: DiagCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            code,
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}] {}: {}", self.code, self.path, self.message)
    }
}

pub(crate) fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
