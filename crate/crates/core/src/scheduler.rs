//! Directed seed selection and Testlang document selection.

use std::collections::BTreeSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Coverage, Line, SeedEntry};
use crate::testlang::DocMetadata;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SchedError {
    #[error("pool is empty")]
    EmptyPool,
    #[error("bad candidate file: {0}")]
    BadCandidates(String),
}

fn default_priority() -> u32 {
    1
}

/// A target location plus the lines that gate it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugCandidate {
    pub id: String,
    pub vulnerable_lines: BTreeSet<Line>,
    #[serde(default)]
    pub key_lines: BTreeSet<Line>,
    #[serde(default)]
    pub triggered: bool,
    #[serde(default = "default_priority")]
    pub priority: u32,
}

/// Reads a JSON list of `{id, vulnerable_lines, key_lines, priority}`.
pub fn parse_candidates(text: &str) -> Result<Vec<BugCandidate>, SchedError> {
    serde_json::from_str(text).map_err(|e| SchedError::BadCandidates(e.to_string()))
}

/// Σ priority × |coverage ∩ key_lines| over candidates not yet triggered.
pub fn score(coverage: &Coverage, candidates: &[BugCandidate]) -> u64 {
    candidates
        .iter()
        .filter(|c| !c.triggered)
        .map(|c| c.priority as u64 * c.key_lines.intersection(coverage).count() as u64)
        .sum()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedScore {
    pub seed_id: String,
    pub score: u64,
}

pub fn score_seeds<'a>(pool: impl IntoIterator<Item = &'a SeedEntry>, candidates: &[BugCandidate]) -> Vec<SeedScore> {
    pool.into_iter()
        .map(|e| SeedScore {
            seed_id: e.id.clone(),
            score: score(&e.coverage, candidates),
        })
        .collect()
}

/// Marks every live candidate whose vulnerable lines intersect a crashing
/// input's coverage. Returns the ids newly marked.
pub fn mark_triggered(candidates: &mut [BugCandidate], crash_coverage: &Coverage) -> Vec<String> {
    let mut hit = Vec::new();
    for c in candidates.iter_mut().filter(|c| !c.triggered) {
        if !c.vulnerable_lines.is_disjoint(crash_coverage) {
            c.triggered = true;
            hit.push(c.id.clone());
        }
    }
    hit
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Uniform,
    Scored,
    Weighted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulerConfig {
    pub p_uniform: f64,
    pub p_scored: f64,
    /// Added to every score in the weighted branch.
    pub epsilon: u64,
    /// Testlang weight halves every `1 / recency_decay` ranks.
    pub recency_decay: f64,
    pub deprioritized_factor: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            p_uniform: 0.25,
            p_scored: 0.25,
            epsilon: 1,
            recency_decay: 0.5,
            deprioritized_factor: 0.1,
        }
    }
}

impl SchedulerConfig {
    /// Index into `scores` and the branch that chose it: uniform over all,
    /// uniform over positive scores, or weighted by score + ε.
    pub fn select_seed(&self, scores: &[u64], rng: &mut ChaCha8Rng) -> Result<(usize, Branch), SchedError> {
        if scores.is_empty() {
            return Err(SchedError::EmptyPool);
        }
        let r: f64 = rng.gen();
        if r < self.p_uniform {
            return Ok((rng.gen_range(0..scores.len()), Branch::Uniform));
        }
        if r < self.p_uniform + self.p_scored {
            let hot: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] > 0).collect();
            let i = if hot.is_empty() {
                rng.gen_range(0..scores.len())
            } else {
                hot[rng.gen_range(0..hot.len())]
            };
            return Ok((i, Branch::Scored));
        }
        let w = WeightedIndex::new(scores.iter().map(|s| s + self.epsilon)).map_err(|_| SchedError::EmptyPool)?;
        Ok((w.sample(rng), Branch::Weighted))
    }

    /// Selection weight of each document: recency × deprioritization ×
    /// 1 / (1 + use_count). Rank 0 is the newest `created_seq`; equal
    /// sequence numbers share a rank.
    pub fn testlang_weights(&self, metas: &[&DocMetadata]) -> Vec<f64> {
        let mut seqs: Vec<u64> = metas.iter().map(|m| m.created_seq).collect();
        seqs.sort_unstable_by(|a, b| b.cmp(a));
        seqs.dedup();
        metas
            .iter()
            .map(|m| {
                let rank = seqs.iter().position(|s| *s == m.created_seq).unwrap() as f64;
                let recency = 2f64.powf(-self.recency_decay * rank);
                let dep = if m.deprioritized { self.deprioritized_factor } else { 1.0 };
                recency * dep / (1.0 + m.use_count as f64)
            })
            .collect()
    }

    /// Draws a document index without touching use counts.
    pub fn pick_testlang(&self, metas: &[&DocMetadata], rng: &mut ChaCha8Rng) -> Result<usize, SchedError> {
        if metas.is_empty() {
            return Err(SchedError::EmptyPool);
        }
        let w = WeightedIndex::new(self.testlang_weights(metas)).map_err(|_| SchedError::EmptyPool)?;
        Ok(w.sample(rng))
    }

    /// Draws a document and increments its use count.
    pub fn select_testlang(&self, metas: &mut [&mut DocMetadata], rng: &mut ChaCha8Rng) -> Result<usize, SchedError> {
        let view: Vec<&DocMetadata> = metas.iter().map(|m| &**m).collect();
        let i = self.pick_testlang(&view, rng)?;
        metas[i].use_count += 1;
        Ok(i)
    }
}
