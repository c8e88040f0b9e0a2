use testforge::rng::SeedStream;
use testforge::serializer::generate;
use testforge::testlang::{merge_partial, to_json, validate, CheckError, MergeError};
use testforge::{parse_testlang, structure_check, GenMode, TestlangDoc};

fn golden(name: &str) -> TestlangDoc {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    parse_testlang(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn partial_pair_merges_to_golden() {
    let merged = merge_partial(&golden("base.json"), &golden("partial.json")).unwrap();
    assert_eq!(merged, golden("merged.json"));
    assert_eq!(to_json(&merged), to_json(&golden("merged.json")));
    assert_eq!(merged.records.keys().collect::<Vec<_>>(), ["INPUT", "Lookup"]);
}

#[test]
fn merged_doc_generates_within_new_ranges() {
    let merged = merge_partial(&golden("base.json"), &golden("partial.json")).unwrap();
    for seed in 0..50 {
        let (blob, ast) = generate(&merged, &SeedStream::new(seed), GenMode::Coverage).unwrap();
        assert_eq!(&blob[..4], b"LKUP");
        let key = ast.find("INPUT.lookup.key").unwrap().as_int().unwrap();
        assert!((60..=70).contains(&key));
        structure_check(&merged, &blob).unwrap();
    }
}

#[test]
fn merge_argument_order_matters() {
    let base = golden("base.json");
    let partial = golden("partial.json");
    assert_eq!(merge_partial(&partial, &base), Err(MergeError::BaseIsPartial));
}

#[test]
fn canonical_json_round_trips() {
    for name in ["simple.json", "base.json", "partial.json", "merged.json"] {
        let d = golden(name);
        let text = to_json(&d);
        let again = parse_testlang(&text).unwrap();
        assert_eq!(again, d, "{name}");
        assert_eq!(to_json(&again), text, "{name}");
    }
}

#[test]
fn structure_check_reports_truncation_and_trailing_bytes() {
    let d = golden("simple.json");
    let (blob, _) = generate(&d, &SeedStream::new(5), GenMode::Coverage).unwrap();
    assert!(structure_check(&d, &blob[..blob.len().min(5)]).is_err());
    let mut long = blob.clone();
    long.extend_from_slice(b"zz");
    let err = structure_check(&d, &long).unwrap_err();
    assert!(err.blamed_field().is_some(), "{err:?}");
    let bad_magic = structure_check(&d, b"NOPE\0\0\0");
    assert!(matches!(bad_magic, Err(CheckError::ConstraintViolated { .. })), "{bad_magic:?}");
}

#[test]
fn parse_errors_carry_paths() {
    let err = parse_testlang(r#"{"records": [{"name": "INPUT", "fields": [{"name": "x", "kind": "int", "width": 12}]}]}"#)
        .unwrap_err();
    assert!(err.iter().any(|d| d.path.starts_with("INPUT.x")), "{err:?}");
    assert!(parse_testlang("not json").is_err());
    let no_entry = parse_testlang(r#"{"records": [{"name": "A", "fields": [{"name": "x", "kind": "int", "width": 8}]}]}"#).unwrap();
    assert!(validate(&no_entry).iter().any(|d| d.is_error()));
}
