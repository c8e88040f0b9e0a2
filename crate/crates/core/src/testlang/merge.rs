use thiserror::Error;

use super::diag::{has_errors, Diagnostic};
use super::{validate, TestlangDoc, ENTRY_RECORD};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum MergeError {
    #[error("base document is itself partial")]
    BaseIsPartial,
    #[error("overlay document is not marked partial")]
    NotPartial,
    #[error("merged document does not validate ({} diagnostics)", .0.len())]
    MergeProducesInvalidDoc(Vec<Diagnostic>),
}

/// Overlays a partial document on a base, record by record: a record in
/// `partial` replaces the base record of the same name in place, and records
/// new to the base are appended. Fields are never merged individually.
/// The base entry record is kept even if the partial redefines it.
pub fn merge_partial(base: &TestlangDoc, partial: &TestlangDoc) -> Result<TestlangDoc, MergeError> {
    if base.is_partial {
        return Err(MergeError::BaseIsPartial);
    }
    if !partial.is_partial {
        return Err(MergeError::NotPartial);
    }
    let mut merged = base.clone();
    for (name, rec) in &partial.records {
        if name == ENTRY_RECORD && base.records.contains_key(ENTRY_RECORD) {
            log::warn!("partial redefines {ENTRY_RECORD}; keeping the base record");
            continue;
        }
        merged.records.insert(name.clone(), rec.clone());
    }
    for line in &partial.metadata.target_lines {
        if !merged.metadata.target_lines.contains(line) {
            merged.metadata.target_lines.push(line.clone());
        }
    }
    merged.is_partial = false;
    let diags = validate(&merged);
    if has_errors(&diags) {
        return Err(MergeError::MergeProducesInvalidDoc(
            diags.into_iter().filter(Diagnostic::is_error).collect(),
        ));
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::super::parse_testlang;
    use super::*;

    const BASE: &str = r#"{"records": [
        {"name": "INPUT", "fields": [{"name": "r", "kind": "record", "record": "R"}]},
        {"name": "R", "fields": [{"name": "x", "kind": "int", "width": 8, "const": 1}]}
    ]}"#;

    #[test]
    fn empty_partial_only_clears_the_flag() {
        let base = parse_testlang(BASE).unwrap();
        let partial = parse_testlang(r#"{"is_partial": true, "records": []}"#).unwrap();
        assert_eq!(merge_partial(&base, &partial).unwrap(), base);
    }

    #[test]
    fn invalid_merge_is_rejected() {
        let base = parse_testlang(BASE).unwrap();
        let partial = parse_testlang(
            r#"{"is_partial": true, "records": [
                {"name": "R", "fields": [{"name": "y", "kind": "record", "record": "Missing"}]}
            ]}"#,
        )
        .unwrap();
        assert!(matches!(
            merge_partial(&base, &partial),
            Err(MergeError::MergeProducesInvalidDoc(_))
        ));
    }

    #[test]
    fn flags_are_checked() {
        let base = parse_testlang(BASE).unwrap();
        assert_eq!(merge_partial(&base, &base), Err(MergeError::NotPartial));
    }
}
