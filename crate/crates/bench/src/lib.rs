//! Shared fixtures for the benchmarks.

use testforge::fdp::{FdpCall, FdpOp, StringPolicy};
use testforge::int::{IntType, IntWidth};
use testforge::{parse_testlang, TestlangDoc};

pub const LOOKUP_DOC: &str = include_str!("../../core/tests/golden/simple.json");
pub const TLV_DOC: &str = include_str!("../../core/tests/golden/gen/02_tlv.json");

pub fn doc(text: &str) -> TestlangDoc {
    parse_testlang(text).expect("fixture parses")
}

/// A mixed call list of `n` producer calls ending in remaining bytes.
pub fn call_list(n: usize) -> Vec<FdpCall> {
    let u16t = IntType::new(IntWidth::W16, false);
    let i32t = IntType::new(IntWidth::W32, true);
    let mut calls = Vec::with_capacity(n + 1);
    for i in 0..n {
        let op = match i % 5 {
            0 => FdpOp::IntInRange {
                ty: u16t,
                min: 10,
                max: 5000,
                value: 10 + (i as i128 * 37) % 4990,
            },
            1 => FdpOp::Int {
                ty: i32t,
                value: -(i as i128) * 1001,
            },
            2 => FdpOp::Bool(i % 3 == 0),
            3 => FdpOp::Bytes(vec![i as u8; 8]),
            _ => FdpOp::String {
                text: format!("s{i}"),
                policy: StringPolicy::RandomLength { max_len: 16 },
                ascii: true,
            },
        };
        calls.push(FdpCall::checked(op));
    }
    calls.push(FdpCall::checked(FdpOp::RemainingBytes(b"tail".to_vec())));
    calls
}
