//! Structure-aware fuzzing input toolkit.
//!
//! * [`testlang`]: the format description language (parse, validate, merge,
//!   structure check).
//! * [`serializer`]: deterministic generation of bytes or FDP producer calls.
//! * [`fdp`]: inverse encoders for FuzzedDataProvider consumers.
//! * [`mutator`]: structure-aware and dictionary mutation.
//! * [`scheduler`]: directed seed and document selection.
//! * [`corpus`]: deduplicated, persistent seed pools.
//! * [`driver`]: the fuzz loop around an external runner process.

pub mod ast;
pub mod corpus;
pub mod driver;
pub mod fdp;
pub mod int;
pub mod mutator;
pub mod rng;
pub mod scheduler;
pub mod serializer;
pub mod testlang;

pub use ast::{AstNode, GenMode, NodeValue, Span, TestlangAst};
pub use testlang::{parse_testlang, structure_check, validate, TestlangDoc};
