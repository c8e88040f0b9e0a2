//! Inverse encoders for FuzzedDataProvider-style consumers.
//!
//! A FuzzedDataProvider slices a fuzz buffer into typed values: primitives
//! (integers, booleans, floats) are consumed from the *end* of the buffer and
//! byte/string data from the *front*. The encoder here goes the other way:
//! given the values a harness should observe, it builds a buffer that makes
//! the harness's consume sequence return exactly those values.
//!
//! Two consumer dialects are supported:
//!
//! * [`Dialect::Llvm`] - libFuzzer's `FuzzedDataProvider.h`.
//! * [`Dialect::Jazzer`] - Jazzer's `FuzzedDataProvider` for the JVM.
//!
//! Floating point follows IEEE-754 binary64 round-to-nearest semantics with
//! no fused multiply-add. Builds of the upstream consumers that contract
//! `a + b * c` may decode some values differently.
//!
//! Every producer exists in a *checked* form, which rejects values the
//! consumer cannot return, and an *unchecked* form, which coerces: integers
//! reduce modulo the range, floats snap to the nearest producible value,
//! strings are truncated or masked, and calls after exhaustion are dropped.

mod calls;
mod dialect;
mod encoder;

use std::fmt;

use thiserror::Error;

use crate::int::IntType;

pub use calls::{parse_call_list, render_call_list, CallListError};
pub use encoder::FdpEncoder;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dialect {
    Llvm,
    Jazzer,
}

impl Dialect {
    pub fn name(self) -> &'static str {
        match self {
            Self::Llvm => "llvm",
            Self::Jazzer => "jazzer",
        }
    }
}

impl std::str::FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "llvm" => Ok(Self::Llvm),
            "jazzer" => Ok(Self::Jazzer),
            other => Err(format!("unknown FDP dialect `{other}` (expected llvm or jazzer)")),
        }
    }
}

/// How the mirrored consumer determines a string's length.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StringPolicy {
    /// `ConsumeRandomLengthString(max_len)` / `consumeString(maxLength)`:
    /// backslash-escaped, terminated by a backslash followed by any other byte.
    RandomLength { max_len: usize },
    /// `ConsumeBytesAsString(len)` with `len` equal to the payload length
    /// (libFuzzer only).
    Exact,
    /// `ConsumeRemainingBytesAsString()` / `consumeRemainingAsString()`.
    /// Exhausts the buffer.
    Remaining,
}

/// One producer call; mirrors one consumer call in the target harness.
#[derive(Clone, Debug, PartialEq)]
pub enum FdpOp {
    Bytes(Vec<u8>),
    RemainingBytes(Vec<u8>),
    String {
        text: String,
        policy: StringPolicy,
        /// Consumer is the ASCII-only variant (`consumeAsciiString`).
        ascii: bool,
    },
    Bool(bool),
    Int {
        ty: IntType,
        value: i128,
    },
    IntInRange {
        ty: IntType,
        min: i128,
        max: i128,
        value: i128,
    },
    FloatInRange {
        min: f64,
        max: f64,
        value: f64,
    },
    Probability(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdpCall {
    pub op: FdpOp,
    pub checked: bool,
}

impl FdpCall {
    pub fn checked(op: FdpOp) -> Self {
        Self { op, checked: true }
    }

    pub fn unchecked(op: FdpOp) -> Self {
        Self { op, checked: false }
    }

    pub fn op_name(&self) -> &'static str {
        match self.op {
            FdpOp::Bytes(_) => "bytes",
            FdpOp::RemainingBytes(_) => "remaining_bytes",
            FdpOp::String { .. } => "string",
            FdpOp::Bool(_) => "bool",
            FdpOp::Int { .. } => "int",
            FdpOp::IntInRange { .. } => "int_in_range",
            FdpOp::FloatInRange { .. } => "float_in_range",
            FdpOp::Probability(_) => "probability",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FdpErrorCode {
    ProduceAfterExhaustion,
    ValueNotProducible,
    RangeViolation,
    NonFiniteFloat,
}

impl fmt::Display for FdpErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::ProduceAfterExhaustion => "ProduceAfterExhaustion",
            Self::ValueNotProducible => "ValueNotProducible",
            Self::RangeViolation => "RangeViolation",
            Self::NonFiniteFloat => "NonFiniteFloat",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{code} at call {call_index}: {message}")]
pub struct FdpSemanticError {
    pub code: FdpErrorCode,
    pub call_index: usize,
    pub message: String,
}

/// Encode a whole call list. The error names the first offending call.
pub fn encode(dialect: Dialect, calls: &[FdpCall]) -> Result<Vec<u8>, FdpSemanticError> {
    let mut enc = FdpEncoder::new(dialect);
    for call in calls {
        enc.apply(call)?;
    }
    Ok(enc.finalize())
}
