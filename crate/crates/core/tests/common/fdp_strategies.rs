//! proptest strategies for checked FDP call lists whose values the
//! consumer can actually return.

use proptest::prelude::*;
use testforge::fdp::{Dialect, FdpCall, FdpOp, StringPolicy};
use testforge::int::{IntType, IntWidth};

pub fn int_type() -> impl Strategy<Value = IntType> {
    (
        prop_oneof![
            Just(IntWidth::W8),
            Just(IntWidth::W16),
            Just(IntWidth::W32),
            Just(IntWidth::W64)
        ],
        any::<bool>(),
    )
        .prop_map(|(w, s)| IntType::new(w, s))
}

pub fn value_in(ty: IntType) -> impl Strategy<Value = i128> {
    let (lo, hi) = (ty.min_value(), ty.max_value());
    prop_oneof![
        Just(lo),
        Just(hi),
        Just(0i128),
        (lo..=hi),
    ]
}

pub fn ranged() -> impl Strategy<Value = FdpOp> {
    int_type().prop_flat_map(|ty| {
        let (lo, hi) = (ty.min_value(), ty.max_value());
        let bounds = prop_oneof![
            // full width
            Just((lo, hi)),
            // singleton
            value_in(ty).prop_map(|v| (v, v)),
            // near the top of the type
            (0i128..300).prop_map(move |k| ((hi - k).max(lo), hi)),
            (value_in(ty), value_in(ty)).prop_map(|(a, b)| (a.min(b), a.max(b))),
        ];
        bounds.prop_flat_map(move |(min, max)| {
            (min..=max).prop_map(move |value| FdpOp::IntInRange {
                ty,
                min,
                max,
                value,
            })
        })
    })
}

pub fn text() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z\\\\]{0,12}",
        "[ -~]{0,12}",
        any::<String>().prop_map(|s| s.chars().take(8).collect()),
    ]
}

pub fn float_op() -> impl Strategy<Value = FdpOp> {
    let bounds = prop_oneof![
        Just((0.0, 1.0)),
        Just((f64::MIN, f64::MAX)),
        (-1e6f64..1e6, 0f64..1e6).prop_map(|(a, w)| (a, a + w)),
        (-1e300f64..0.0, 0f64..1e300),
    ];
    (bounds, any::<u64>(), any::<bool>()).prop_map(|((min, max), raw, half)| {
        // a value the consumer can return: computed the consumer's way
        let p = raw as f64 / u64::MAX as f64;
        let value = if max > 0.0 && min < 0.0 && max > min + f64::MAX {
            let range = max / 2.0 - min / 2.0;
            let base = if half { min + range } else { min };
            base + range * p
        } else {
            min + (max - min) * p
        };
        FdpOp::FloatInRange { min, max, value }
    })
}

pub fn op(dialect: Dialect) -> impl Strategy<Value = FdpOp> {
    let string = (text(), 0usize..20, any::<bool>(), 0u8..3).prop_filter_map(
        "string must fit its policy",
        move |(text, max_len, ascii, which)| {
            let text = if ascii {
                text.chars().filter(char::is_ascii).collect()
            } else {
                text
            };
            let policy = match which {
                0 => StringPolicy::RandomLength { max_len },
                _ if dialect == Dialect::Jazzer => StringPolicy::RandomLength { max_len },
                _ => StringPolicy::Exact,
            };
            let fits = match policy {
                StringPolicy::RandomLength { max_len } => {
                    let units: usize = match dialect {
                        Dialect::Llvm => text.len(),
                        Dialect::Jazzer => text.chars().map(char::len_utf16).sum(),
                    };
                    units <= max_len
                }
                _ => true,
            };
            fits.then_some(FdpOp::String { text, policy, ascii })
        },
    );
    prop_oneof![
        3 => ranged(),
        2 => int_type().prop_flat_map(|ty| value_in(ty).prop_map(move |value| FdpOp::Int { ty, value })),
        1 => any::<bool>().prop_map(FdpOp::Bool),
        1 => proptest::collection::vec(any::<u8>(), 0..10).prop_map(FdpOp::Bytes),
        2 => string,
        1 => float_op(),
        1 => (any::<u64>()).prop_map(|raw| FdpOp::Probability(raw as f64 / u64::MAX as f64)),
    ]
}

pub fn call_list(dialect: Dialect) -> impl Strategy<Value = Vec<FdpCall>> {
    (
        proptest::collection::vec(op(dialect), 0..12),
        proptest::option::of(proptest::collection::vec(any::<u8>(), 0..8)),
    )
        .prop_map(|(ops, tail)| {
            let mut calls: Vec<FdpCall> = ops.into_iter().map(FdpCall::checked).collect();
            if let Some(tail) = tail {
                calls.push(FdpCall::checked(FdpOp::RemainingBytes(tail)));
            }
            calls
        })
}
