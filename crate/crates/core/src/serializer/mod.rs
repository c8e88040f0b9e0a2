//! Rendering documents to concrete inputs.
//!
//! Generation first builds a value tree (the AST) field by field, each field
//! drawing from its own random sub-stream keyed by its path, then renders the
//! tree to bytes in one pass and backpatches size fields with the measured
//! length of the content they describe.

pub(crate) mod build;
mod builtin;
pub(crate) mod crash;
mod external;
mod fdp_calls;
mod render;
mod walk;

use std::time::Duration;

use thiserror::Error;

use crate::ast::{GenMode, TestlangAst};
use crate::fdp::FdpCall;
use crate::rng::SeedStream;
use crate::testlang::{validate, Diagnostic, Mode, TestlangDoc};

pub use builtin::run_builtin;
pub use external::{run_external_generator, ExternalError};
pub use render::{patch_int, render};
pub use walk::{leaf_infos, LeafInfo};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum GenerateError {
    #[error("document has validation errors: {}", first_message(.0))]
    InvalidDoc(Vec<Diagnostic>),
    #[error("operation needs a {expected:?}-mode document")]
    ModeMismatch { expected: Mode },
    #[error("no field can be rendered out of its constraint")]
    NoEligibleField,
    #[error("`{field}`: {reason}")]
    Infeasible { field: String, reason: String },
    #[error("external generator for `{field}` failed: {error}")]
    ExternalGeneratorFailure { field: String, error: ExternalError },
    #[error("`{field}` cannot hold value {value}")]
    ValueOutOfType { field: String, value: i128 },
    #[error("value tree does not match the document at `{0}`")]
    ShapeMismatch(String),
    #[error("`{field}` has no producer-call mapping: {reason}")]
    UnsupportedKindForFdp { field: String, reason: String },
}

fn first_message(d: &[Diagnostic]) -> String {
    d.first().map(ToString::to_string).unwrap_or_default()
}

/// Caps applied to external generator processes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExternalBudget {
    pub timeout: Duration,
    /// Upper bound on any single field's content length.
    pub max_bytes: u64,
}

impl Default for ExternalBudget {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(5),
            max_bytes: 1 << 16,
        }
    }
}

/// A validated document ready for repeated generation.
#[derive(Clone, Debug)]
pub struct Generator<'a> {
    doc: &'a TestlangDoc,
    budget: ExternalBudget,
}

impl<'a> Generator<'a> {
    pub fn new(doc: &'a TestlangDoc) -> Result<Self, GenerateError> {
        let errors: Vec<Diagnostic> = validate(doc).into_iter().filter(Diagnostic::is_error).collect();
        if !errors.is_empty() {
            return Err(GenerateError::InvalidDoc(errors));
        }
        if doc.is_partial || doc.entry().is_none() {
            return Err(GenerateError::InvalidDoc(Vec::new()));
        }
        Ok(Self {
            doc,
            budget: ExternalBudget::default(),
        })
    }

    pub fn with_budget(mut self, budget: ExternalBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn doc(&self) -> &'a TestlangDoc {
        self.doc
    }

    /// Bytes-mode generation. Output is a function of (document, seed, mode).
    pub fn generate(&self, seeds: &SeedStream, mode: GenMode) -> Result<(Vec<u8>, TestlangAst), GenerateError> {
        if self.doc.mode != Mode::Bytes {
            return Err(GenerateError::ModeMismatch { expected: Mode::Bytes });
        }
        let mut root = build::build_input(self, seeds)?;
        let blob = render(self.doc, &mut root)?;
        match mode {
            GenMode::Coverage => Ok((blob, self.ast(root, mode, Vec::new()))),
            GenMode::Crash => {
                let (blob, root, violated) = crash::violate(self.doc, &root, &mut seeds.substream("crash"))?;
                Ok((blob, self.ast(root, mode, vec![violated])))
            }
        }
    }

    /// Producer calls for an FDP-mode document.
    pub fn generate_fdp_calls(
        &self,
        seeds: &SeedStream,
        mode: GenMode,
    ) -> Result<(Vec<FdpCall>, TestlangAst), GenerateError> {
        if self.doc.mode != Mode::Fdp {
            return Err(GenerateError::ModeMismatch { expected: Mode::Fdp });
        }
        let mut root = build::build_input(self, seeds)?;
        // resolves size values; the bytes themselves are not used
        render(self.doc, &mut root)?;
        let mut violated = Vec::new();
        if mode == GenMode::Crash {
            violated.push(fdp_calls::violate(self.doc, &mut root, seeds)?);
        }
        let calls = fdp_calls::map_calls(self.doc, &root)?;
        strip_spans(&mut root);
        Ok((calls, self.ast(root, mode, violated)))
    }

    /// One record rendered on its own, for splicing into other inputs.
    pub fn generate_record(&self, name: &str, seeds: &SeedStream) -> Result<Vec<u8>, GenerateError> {
        let rec = self
            .doc
            .record(name)
            .ok_or_else(|| GenerateError::ShapeMismatch(name.to_string()))?;
        let mut node = build::build_record(self, rec, seeds)?;
        render::render_record_standalone(self.doc, rec, &mut node)
    }

    fn ast(&self, root: crate::ast::AstNode, mode: GenMode, violated: Vec<String>) -> TestlangAst {
        TestlangAst {
            root,
            doc_id: self.doc.doc_id(),
            mode_used: mode,
            violated_fields: violated,
        }
    }
}

fn strip_spans(node: &mut crate::ast::AstNode) {
    node.span = None;
    for c in node.children_mut() {
        strip_spans(c);
    }
}

/// Validates `doc` and generates one bytes-mode input.
pub fn generate(doc: &TestlangDoc, seeds: &SeedStream, mode: GenMode) -> Result<(Vec<u8>, TestlangAst), GenerateError> {
    Generator::new(doc)?.generate(seeds, mode)
}

/// Validates `doc` and generates one producer-call list.
pub fn generate_fdp_calls(
    doc: &TestlangDoc,
    seeds: &SeedStream,
    mode: GenMode,
) -> Result<(Vec<FdpCall>, TestlangAst), GenerateError> {
    Generator::new(doc)?.generate_fdp_calls(seeds, mode)
}
