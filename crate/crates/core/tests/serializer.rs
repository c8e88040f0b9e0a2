mod common;

use common::fdp_reference::{mirror, reference_consume};
use testforge::fdp::{encode, Dialect, FdpOp, StringPolicy};
use testforge::rng::SeedStream;
use testforge::serializer::{generate, generate_fdp_calls, ExternalError, GenerateError, Generator};
use testforge::testlang::CheckError;
use testforge::{parse_testlang, structure_check, GenMode, TestlangDoc};

fn doc(text: &str) -> TestlangDoc {
    parse_testlang(text).expect("parses")
}

fn simple() -> TestlangDoc {
    doc(include_str!("golden/simple.json"))
}

fn le16(b: &[u8]) -> usize {
    u16::from_le_bytes([b[0], b[1]]) as usize
}

#[test]
fn table_size_matches_table_length() {
    let d = simple();
    for seed in 0..200 {
        let (blob, ast) = generate(&d, &SeedStream::new(seed), GenMode::Coverage).unwrap();
        assert_eq!(&blob[..4], b"LKUP");
        let declared = le16(&blob[4..6]);
        assert_eq!(declared, blob.len() - 7, "seed {seed}");
        let table = ast.find("INPUT.lookup.table").unwrap();
        assert_eq!(table.as_bytes().unwrap().len(), declared);
        assert_eq!(ast.find("INPUT.lookup.table_size").unwrap().as_int(), Some(declared as i128));
        assert!(structure_check(&d, &blob).is_ok());
    }
}

#[test]
fn generation_is_deterministic_per_seed() {
    let d = simple();
    let a = generate(&d, &SeedStream::new(11), GenMode::Coverage).unwrap();
    let b = generate(&d, &SeedStream::new(11), GenMode::Coverage).unwrap();
    assert_eq!(a, b);
    let distinct: std::collections::HashSet<Vec<u8>> = (0..50)
        .map(|s| generate(&d, &SeedStream::new(s), GenMode::Coverage).unwrap().0)
        .collect();
    assert!(distinct.len() > 40);
}

#[test]
fn const_byte_renders_alone() {
    let d = doc(r#"{"records": [{"name": "INPUT", "fields": [{"name": "c", "kind": "bytes", "const": [65]}]}]}"#);
    let (blob, _) = generate(&d, &SeedStream::new(0), GenMode::Coverage).unwrap();
    assert_eq!(blob, [0x41]);
}

#[test]
fn crash_mode_leaves_a_range_field_out_of_range() {
    let d = doc(
        r#"{"records": [{"name": "INPUT", "fields": [
            {"name": "n", "kind": "int", "width": 32, "range": [10, 100]}
        ]}]}"#,
    );
    for seed in 0..50 {
        let (blob, ast) = generate(&d, &SeedStream::new(seed), GenMode::Crash).unwrap();
        let v = u32::from_be_bytes(blob[..4].try_into().unwrap()) as i128;
        assert!(!(10..=100).contains(&v), "seed {seed}: {v}");
        assert_eq!(ast.violated_fields, ["INPUT.n"]);
        assert!(!ast.find("INPUT.n").unwrap().constraint_satisfied);
        match structure_check(&d, &blob) {
            Err(CheckError::ConstraintViolated { field, .. }) => assert_eq!(field, "INPUT.n"),
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn crash_violations_are_blamed_on_the_recorded_field() {
    let d = simple();
    let mut seen = std::collections::HashSet::new();
    for seed in 0..300 {
        let (blob, ast) = generate(&d, &SeedStream::new(seed), GenMode::Crash).unwrap();
        let err = structure_check(&d, &blob).unwrap_err();
        assert_eq!(ast.violated_fields.len(), 1);
        assert_eq!(err.blamed_field(), Some(ast.violated_fields[0].as_str()), "seed {seed}");
        seen.insert(ast.violated_fields[0].clone());
    }
    for f in ["INPUT.magic", "INPUT.lookup.key", "INPUT.lookup.table_size"] {
        assert!(seen.contains(f), "{f} never violated: {seen:?}");
    }
}

#[test]
fn crash_needs_a_breakable_field() {
    let d = doc(r#"{"records": [{"name": "INPUT", "fields": [{"name": "x", "kind": "int", "width": 8}]}]}"#);
    assert_eq!(
        generate(&d, &SeedStream::new(0), GenMode::Crash),
        Err(GenerateError::NoEligibleField)
    );
}

#[test]
fn terminated_and_encoded_fields_check_clean() {
    let d = doc(
        r#"{"records": [{"name": "INPUT", "fields": [
            {"name": "name", "kind": "string", "terminator": "\u0000", "size": {"min": 1, "max": 12}},
            {"name": "n", "kind": "int", "width": 8},
            {"name": "digest", "kind": "bytes", "size": 8, "encoder": "hex"},
            {"name": "id", "kind": "custom", "size": 36, "generator": {"builtin": "uuid_like"}},
            {"name": "rest", "kind": "bytes", "size": {"min": 0, "max": 12}, "encoder": "base64"}
        ]}]}"#,
    );
    for seed in 0..100 {
        let (blob, ast) = generate(&d, &SeedStream::new(seed), GenMode::Coverage).unwrap();
        let checked = structure_check(&d, &blob).unwrap();
        assert_eq!(checked.root.value, ast.root.value, "seed {seed}");
        let name = ast.find("INPUT.name").unwrap().as_bytes().unwrap();
        assert!((1..=12).contains(&name.len()));
        assert!(!name.contains(&0));
        let digest = ast.find("INPUT.digest").unwrap();
        assert_eq!(digest.span.unwrap().len, 8);
        assert_eq!(digest.as_bytes().unwrap().len(), 4);
        let rest = ast.find("INPUT.rest").unwrap().span.unwrap().len;
        assert_eq!(rest % 4, 0);
    }
}

#[test]
fn arrays_follow_their_count_field() {
    let d = doc(
        r#"{"records": [
            {"name": "INPUT", "fields": [
                {"name": "count", "kind": "int", "width": 8, "range": [1, 5]},
                {"name": "items", "kind": "array", "size": {"ref": "count"},
                 "element": {"name": "item", "kind": "record", "record": "Item"}}
            ]},
            {"name": "Item", "fields": [
                {"name": "len", "kind": "int", "width": 8},
                {"name": "data", "kind": "bytes", "size": {"ref": "len"}}
            ]}
        ]}"#,
    );
    for seed in 0..50 {
        let (blob, ast) = generate(&d, &SeedStream::new(seed), GenMode::Coverage).unwrap();
        let count = blob[0] as usize;
        assert!((1..=5).contains(&count));
        assert_eq!(ast.find("INPUT.items").unwrap().children().len(), count);
        assert!(ast.find(&format!("INPUT.items[{}].data", count - 1)).is_some());
        structure_check(&d, &blob).unwrap();
    }
}

#[test]
fn external_generator_supplies_field_content() {
    let d = doc(
        r#"{"records": [{"name": "INPUT", "fields": [
            {"name": "tag", "kind": "custom", "size": 4, "generator": {"external": "printf abcd"}}
        ]}]}"#,
    );
    let (blob, _) = generate(&d, &SeedStream::new(0), GenMode::Coverage).unwrap();
    assert_eq!(blob, b"abcd");

    let short = doc(
        r#"{"records": [{"name": "INPUT", "fields": [
            {"name": "tag", "kind": "custom", "size": 4, "generator": {"external": "printf ab"}}
        ]}]}"#,
    );
    assert_eq!(
        generate(&short, &SeedStream::new(0), GenMode::Coverage),
        Err(GenerateError::ExternalGeneratorFailure {
            field: "INPUT.tag".into(),
            error: ExternalError::WrongLength { expected: 4, got: 2 },
        })
    );

    let failing = doc(
        r#"{"records": [{"name": "INPUT", "fields": [
            {"name": "tag", "kind": "custom", "size": 4, "generator": {"external": "false"}}
        ]}]}"#,
    );
    assert!(matches!(
        generate(&failing, &SeedStream::new(0), GenMode::Coverage),
        Err(GenerateError::ExternalGeneratorFailure {
            error: ExternalError::NonzeroExit(Some(1)),
            ..
        })
    ));
}

#[test]
fn invalid_and_wrong_mode_docs_are_refused() {
    let bad = doc(
        r#"{"records": [{"name": "INPUT", "fields": [
            {"name": "data", "kind": "bytes", "size": {"ref": "missing"}}
        ]}]}"#,
    );
    assert!(matches!(Generator::new(&bad), Err(GenerateError::InvalidDoc(_))));
    let d = simple();
    assert!(matches!(
        generate_fdp_calls(&d, &SeedStream::new(0), GenMode::Coverage),
        Err(GenerateError::ModeMismatch { .. })
    ));
}

fn fdp_doc() -> TestlangDoc {
    doc(
        r#"{"mode": "fdp", "records": [{"name": "INPUT", "fields": [
            {"name": "a", "kind": "int", "width": 32, "range": [0, 100]},
            {"name": "b", "kind": "int", "width": 8, "const": 128},
            {"name": "flag", "kind": "int", "width": 8, "range": [0, 1]},
            {"name": "op", "kind": "int", "width": 16, "enum": [3, 9, 27]},
            {"name": "n", "kind": "int", "width": 8, "range": [0, 16]},
            {"name": "key", "kind": "bytes", "size": {"ref": "n"}},
            {"name": "name", "kind": "string", "size": {"min": 0, "max": 20}},
            {"name": "tail", "kind": "bytes", "size": {"min": 0, "max": 32}}
        ]}]}"#,
    )
}

#[test]
fn fdp_calls_decode_to_the_generated_values() {
    let d = fdp_doc();
    for seed in 0..100 {
        let (calls, ast) = generate_fdp_calls(&d, &SeedStream::new(seed), GenMode::Coverage).unwrap();
        assert_eq!(calls.len(), 8);
        assert!(matches!(calls[2].op, FdpOp::Bool(_)));
        assert!(matches!(
            calls[6].op,
            FdpOp::String {
                policy: StringPolicy::RandomLength { max_len: 20 },
                ..
            }
        ));
        assert!(matches!(calls[7].op, FdpOp::RemainingBytes(_)));
        assert!(ast.root.walk().iter().all(|n| n.span.is_none()));
        let n = ast.find("INPUT.n").unwrap().as_int().unwrap();
        assert_eq!(ast.find("INPUT.key").unwrap().as_bytes().unwrap().len() as i128, n);
        {
            let dialect = Dialect::Llvm;
            let blob = encode(dialect, &calls).unwrap();
            let (plan, expected) = mirror(&calls);
            assert_eq!(reference_consume(dialect, &blob, &plan), expected, "seed {seed}");
        }
    }
}

#[test]
fn fdp_crash_marks_one_unchecked_call() {
    let d = fdp_doc();
    for seed in 0..50 {
        let (calls, ast) = generate_fdp_calls(&d, &SeedStream::new(seed), GenMode::Crash).unwrap();
        assert_eq!(ast.violated_fields.len(), 1);
        let v = &ast.violated_fields[0];
        assert!(v == "INPUT.b" || v == "INPUT.n", "{v}");
        assert_eq!(calls.iter().filter(|c| !c.checked).count(), 1);
        if v == "INPUT.b" {
            assert_ne!(ast.find(v).unwrap().as_int(), Some(128));
        } else {
            let n = ast.find(v).unwrap().as_int().unwrap();
            assert_ne!(ast.find("INPUT.key").unwrap().as_bytes().unwrap().len() as i128, n);
        }
    }
}

#[test]
fn terminated_fields_have_no_fdp_mapping() {
    let d = doc(
        r#"{"mode": "fdp", "records": [{"name": "INPUT", "fields": [
            {"name": "s", "kind": "string", "terminator": "\n"}
        ]}]}"#,
    );
    assert!(matches!(
        generate_fdp_calls(&d, &SeedStream::new(0), GenMode::Coverage),
        Err(GenerateError::UnsupportedKindForFdp { .. })
    ));
}

#[test]
fn standalone_record_renders_alone() {
    let d = simple();
    let g = Generator::new(&d).unwrap();
    let rec = g.generate_record("Lookup", &SeedStream::new(3)).unwrap();
    assert_eq!(le16(&rec), rec.len() - 3);
}
