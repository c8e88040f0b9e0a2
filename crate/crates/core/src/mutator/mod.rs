//! Structure-aware and dictionary mutation.
//!
//! Seeds that carry an AST can use every strategy. Raw seeds from other
//! generators have no structure to edit and are limited to AST-free splicing,
//! dictionary operators and the byte-level fallbacks.

mod dict;
mod structural;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::TestlangAst;
use crate::serializer::GenerateError;
use crate::testlang::{Mode, TestlangDoc};

pub use dict::{
    dict_insert, dict_replace_bytes, dict_replace_chunk, DictParseError, Dictionary, DEFAULT_MAX_TOKEN_SIZE,
};
pub use structural::{
    ast_free, boundary_menu, boundary_value, constraint_violation, cross_field, payloads, type_aware, Edited,
    CROSS_FIELD_DELTAS,
};

pub const DEFAULT_P_FALLBACK: f64 = 0.15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationStrategy {
    BoundaryValue,
    TypeAware,
    ConstraintViolation,
    CrossField,
    AstFree,
    DictTokenInsert,
    DictTokenReplace,
    DictByteReplace,
    FallbackBitFlip,
    FallbackByteFlip,
}

impl MutationStrategy {
    pub const ALL: [Self; 10] = [
        Self::BoundaryValue,
        Self::TypeAware,
        Self::ConstraintViolation,
        Self::CrossField,
        Self::AstFree,
        Self::DictTokenInsert,
        Self::DictTokenReplace,
        Self::DictByteReplace,
        Self::FallbackBitFlip,
        Self::FallbackByteFlip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::BoundaryValue => "boundary_value",
            Self::TypeAware => "type_aware",
            Self::ConstraintViolation => "constraint_violation",
            Self::CrossField => "cross_field",
            Self::AstFree => "ast_free",
            Self::DictTokenInsert => "dict_token_insert",
            Self::DictTokenReplace => "dict_token_replace",
            Self::DictByteReplace => "dict_byte_replace",
            Self::FallbackBitFlip => "fallback_bit_flip",
            Self::FallbackByteFlip => "fallback_byte_flip",
        }
    }

    /// Needs a seed AST.
    pub fn needs_ast(self) -> bool {
        matches!(
            self,
            Self::BoundaryValue | Self::TypeAware | Self::ConstraintViolation | Self::CrossField
        )
    }

    pub fn is_dict(self) -> bool {
        matches!(self, Self::DictTokenInsert | Self::DictTokenReplace | Self::DictByteReplace)
    }

    pub fn is_fallback(self) -> bool {
        matches!(self, Self::FallbackBitFlip | Self::FallbackByteFlip)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum MutateError {
    #[error("{} does not apply to this seed", .0.name())]
    StrategyInapplicable(MutationStrategy),
    #[error("dictionary is empty")]
    DictEmpty,
    #[error("no strategy applies to this seed")]
    NoApplicableStrategy,
    #[error(transparent)]
    Generate(#[from] GenerateError),
}

/// Output of one mutation.
#[derive(Clone, Debug, PartialEq)]
pub struct Mutation {
    pub bytes: Vec<u8>,
    pub strategy: MutationStrategy,
    /// Present for structural strategies.
    pub ast: Option<TestlangAst>,
}

#[derive(Clone, Debug)]
pub struct Mutator<'a> {
    doc: Option<&'a TestlangDoc>,
    dict: Option<&'a Dictionary>,
    p_fallback: f64,
}

impl<'a> Mutator<'a> {
    pub fn new(doc: Option<&'a TestlangDoc>, dict: Option<&'a Dictionary>) -> Self {
        Self {
            doc,
            dict,
            p_fallback: DEFAULT_P_FALLBACK,
        }
    }

    pub fn with_p_fallback(mut self, p: f64) -> Self {
        self.p_fallback = p.clamp(0.0, 1.0);
        self
    }

    /// Strategies allowed for a seed with or without an AST, given what this
    /// mutator was built with.
    pub fn applicable(&self, has_ast: bool) -> Vec<MutationStrategy> {
        let structural_doc = self.doc.filter(|d| d.mode == Mode::Bytes);
        let dict = self.dict.is_some_and(|d| !d.is_empty());
        MutationStrategy::ALL
            .into_iter()
            .filter(|s| {
                if s.needs_ast() {
                    has_ast && structural_doc.is_some()
                } else if *s == MutationStrategy::AstFree {
                    self.doc.is_some()
                } else if s.is_dict() {
                    dict
                } else {
                    true
                }
            })
            .collect()
    }

    /// Applies exactly one strategy. Strategies that turn out not to apply
    /// are dropped and the draw is repeated.
    pub fn mutate(
        &self,
        input: &[u8],
        ast: Option<&TestlangAst>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Mutation, MutateError> {
        let mut pool = self.applicable(ast.is_some());
        let mut last = MutateError::NoApplicableStrategy;
        while let Some(s) = draw_strategy(&pool, self.p_fallback, rng) {
            match self.apply(s, input, ast, rng) {
                Ok(m) => return Ok(m),
                Err(e @ (MutateError::StrategyInapplicable(_) | MutateError::DictEmpty)) => {
                    last = e;
                    pool.retain(|x| *x != s);
                }
                Err(e) => return Err(e),
            }
        }
        Err(match last {
            MutateError::DictEmpty => MutateError::NoApplicableStrategy,
            e => e,
        })
    }

    /// Runs one named strategy.
    pub fn apply(
        &self,
        s: MutationStrategy,
        input: &[u8],
        ast: Option<&TestlangAst>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Mutation, MutateError> {
        let raw = |bytes: Vec<u8>| Mutation {
            bytes,
            strategy: s,
            ast: None,
        };
        let structured = |e: Edited| Mutation {
            bytes: e.bytes,
            strategy: s,
            ast: Some(e.ast),
        };
        if s.needs_ast() {
            let (Some(ast), Some(doc)) = (ast, self.doc.filter(|d| d.mode == Mode::Bytes)) else {
                return Err(MutateError::StrategyInapplicable(s));
            };
            return Ok(structured(match s {
                MutationStrategy::BoundaryValue => boundary_value(ast, doc, rng)?,
                MutationStrategy::TypeAware => type_aware(ast, doc, rng)?,
                MutationStrategy::ConstraintViolation => constraint_violation(ast, doc, rng)?,
                _ => cross_field(ast, doc, rng)?.0,
            }));
        }
        if s.is_dict() {
            let token = self.dict.and_then(|d| d.choose(rng)).ok_or(MutateError::DictEmpty)?;
            return Ok(raw(match s {
                MutationStrategy::DictTokenInsert => dict_insert(input, token, rng),
                _ if input.is_empty() => return Err(MutateError::StrategyInapplicable(s)),
                MutationStrategy::DictTokenReplace => dict_replace_chunk(input, token, rng),
                _ => dict_replace_bytes(input, token, rng),
            }));
        }
        match s {
            MutationStrategy::AstFree => {
                let doc = self.doc.ok_or(MutateError::StrategyInapplicable(s))?;
                Ok(raw(ast_free(input, doc, rng)?))
            }
            _ if input.is_empty() => Err(MutateError::StrategyInapplicable(s)),
            MutationStrategy::FallbackBitFlip => {
                let mut out = input.to_vec();
                let bit = rng.gen_range(0..out.len() * 8);
                out[bit / 8] ^= 1 << (bit % 8);
                Ok(raw(out))
            }
            _ => {
                let mut out = input.to_vec();
                let i = rng.gen_range(0..out.len());
                out[i] ^= 0xff;
                Ok(raw(out))
            }
        }
    }
}

/// Picks a fallback with probability `p_fallback` and any other strategy
/// otherwise, uniformly within the group. An empty group defers to the other.
pub fn draw_strategy(pool: &[MutationStrategy], p_fallback: f64, rng: &mut ChaCha8Rng) -> Option<MutationStrategy> {
    let (fallback, main): (Vec<MutationStrategy>, Vec<MutationStrategy>) =
        pool.iter().partition(|s| s.is_fallback());
    let use_fallback = match (main.is_empty(), fallback.is_empty()) {
        (true, true) => return None,
        (true, false) => true,
        (false, true) => false,
        (false, false) => rng.gen_bool(p_fallback),
    };
    let group = if use_fallback { &fallback } else { &main };
    group.choose(rng).copied()
}
