//! The fuzz loop: pick a document or a seed, produce an input, run it, gate
//! the result into the corpus, and keep candidate scores current.

mod config;
mod runner;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::ast::{GenMode, TestlangAst};
use crate::corpus::{seed_id, AddOutcome, CorpusError, CorpusStats, CorpusStore, Origin};
use crate::fdp::{encode, Dialect};
use crate::mutator::{Dictionary, Mutator, DEFAULT_MAX_TOKEN_SIZE};
use crate::rng::SeedStream;
use crate::scheduler::{mark_triggered, parse_candidates, score, BugCandidate, SchedulerConfig};
use crate::serializer::Generator;
use crate::testlang::{parse_testlang, Diagnostic, Mode, TestlangDoc};

pub use config::CampaignConfig;
pub use runner::{RunResult, RunStatus, Runner, RunnerError};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {}", .diagnostics.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Doc {
        path: PathBuf,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("runner protocol error: {0}")]
    RunnerProtocolError(String),
    #[error("runner failed {failures} times in a row: {last}")]
    RunnerCrashLoop { failures: u32, last: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CampaignReport {
    pub executions: u64,
    pub adds: u64,
    pub crashes: u64,
    pub timeouts: u64,
    /// Zero-based iteration of the first crashing execution.
    pub first_crash_iteration: Option<u64>,
    pub triggered: Vec<String>,
    /// Executions per producing action: `generate_coverage`,
    /// `generate_crash`, or a mutation strategy name.
    pub per_strategy: BTreeMap<String, u64>,
    pub corpus: CorpusStats,
}

#[derive(Serialize)]
struct Event<'a> {
    iter: u64,
    action: &'a str,
    source: &'a str,
    input: &'a str,
    len: usize,
    status: RunStatus,
    outcome: &'a str,
    new_lines: usize,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    triggered: &'a [String],
}

struct Produced {
    bytes: Vec<u8>,
    action: String,
    source: String,
    origin: Origin,
    ast: Option<TestlangAst>,
    doc: Option<usize>,
}

/// All state of one campaign.
pub struct Campaign {
    runner_cmd: Vec<String>,
    timeout: Duration,
    crash_loop_limit: u32,
    iterations: u64,
    seed: u64,
    p_gen: f64,
    p_crash: f64,
    p_fallback: f64,
    timeout_is_crash: bool,
    stop_on_crash: bool,
    dialect: Dialect,
    sched: SchedulerConfig,
    docs: Vec<TestlangDoc>,
    candidates: Vec<BugCandidate>,
    dict: Option<Dictionary>,
    corpus: CorpusStore,
    scores: Vec<u64>,
    events: Vec<String>,
}

impl Campaign {
    /// Loads every file named by `cfg`.
    pub fn from_config(cfg: &CampaignConfig) -> Result<Self, DriverError> {
        let mut docs = Vec::new();
        for path in &cfg.docs {
            let text = std::fs::read_to_string(path).map_err(|e| DriverError::Config(format!("{}: {e}", path.display())))?;
            let doc = parse_testlang(&text).map_err(|diagnostics| DriverError::Doc {
                path: path.clone(),
                diagnostics,
            })?;
            docs.push(doc);
        }
        let candidates = match &cfg.candidates {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| DriverError::Config(format!("{}: {e}", p.display())))?;
                parse_candidates(&text).map_err(|e| DriverError::Config(format!("{}: {e}", p.display())))?
            }
            None => Vec::new(),
        };
        let dict = match &cfg.dictionary {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| DriverError::Config(format!("{}: {e}", p.display())))?;
                Some(
                    Dictionary::parse(&text, DEFAULT_MAX_TOKEN_SIZE)
                        .map_err(|e| DriverError::Config(format!("{}: {e}", p.display())))?,
                )
            }
            None => None,
        };
        let corpus = match &cfg.corpus_dir {
            Some(dir) => {
                let (store, issues) = CorpusStore::load(dir)?;
                for issue in issues {
                    log::warn!("corpus: {issue:?}");
                }
                store
            }
            None => CorpusStore::new(),
        };
        Self::new(cfg, docs, candidates, dict, corpus)
    }

    pub fn new(
        cfg: &CampaignConfig,
        docs: Vec<TestlangDoc>,
        candidates: Vec<BugCandidate>,
        dict: Option<Dictionary>,
        corpus: CorpusStore,
    ) -> Result<Self, DriverError> {
        if docs.is_empty() {
            return Err(DriverError::Config("at least one document is required".into()));
        }
        for (i, d) in docs.iter().enumerate() {
            if let Err(e) = Generator::new(d) {
                let path = cfg.docs.get(i).cloned().unwrap_or_default();
                let diagnostics = match e {
                    crate::serializer::GenerateError::InvalidDoc(d) => d,
                    _ => Vec::new(),
                };
                return Err(DriverError::Doc { path, diagnostics });
            }
        }
        let scores = corpus.entries().map(|e| score(&e.coverage, &candidates)).collect();
        Ok(Self {
            runner_cmd: cfg.runner.clone(),
            timeout: Duration::from_millis(cfg.exec_timeout_ms),
            crash_loop_limit: cfg.crash_loop_limit.max(1),
            iterations: cfg.iterations,
            seed: cfg.seed,
            p_gen: cfg.p_gen,
            p_crash: cfg.p_crash,
            p_fallback: cfg.p_fallback,
            timeout_is_crash: cfg.timeout_is_crash,
            stop_on_crash: cfg.stop_on_crash,
            dialect: cfg.dialect,
            sched: cfg.scheduler,
            docs,
            candidates,
            dict,
            corpus,
            scores,
            events: Vec::new(),
        })
    }

    pub fn corpus(&self) -> &CorpusStore {
        &self.corpus
    }

    pub fn candidates(&self) -> &[BugCandidate] {
        &self.candidates
    }

    pub fn docs(&self) -> &[TestlangDoc] {
        &self.docs
    }

    /// One JSON object per executed iteration.
    pub fn events(&self) -> &[String] {
        &self.events
    }

    pub fn event_log(&self) -> String {
        let mut s = self.events.join("\n");
        if !s.is_empty() {
            s.push('\n');
        }
        s
    }

    /// Runs the configured number of iterations. Every iteration executes
    /// exactly one input.
    pub fn run(&mut self) -> Result<CampaignReport, DriverError> {
        let mut report = CampaignReport::default();
        if self.iterations == 0 {
            report.corpus = self.corpus.stats();
            return Ok(report);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut runner = Runner::new(self.runner_cmd.clone(), self.timeout).map_err(runner_fatal)?;
        for iter in 0..self.iterations {
            let produced = self.produce(&mut rng);
            let result = self.execute(&mut runner, &produced.bytes)?;
            report.executions += 1;
            *report.per_strategy.entry(produced.action.clone()).or_default() += 1;

            let crash = result.status == RunStatus::Crash || (self.timeout_is_crash && result.status == RunStatus::Timeout);
            if result.status == RunStatus::Timeout {
                report.timeouts += 1;
            }
            let before = self.corpus.union_coverage().len();
            let outcome = self.corpus.add_seed(
                produced.bytes.clone(),
                produced.origin.clone(),
                produced.ast,
                result.coverage.clone(),
                crash,
            )?;
            let new_lines = self.corpus.union_coverage().len() - before;
            let mut triggered = Vec::new();
            if crash {
                report.crashes += 1;
                report.first_crash_iteration.get_or_insert(iter);
                triggered = mark_triggered(&mut self.candidates, &result.coverage);
                report.triggered.extend(triggered.iter().cloned());
            }
            let outcome_name = match &outcome {
                AddOutcome::Added(_) => "added",
                AddOutcome::DuplicateOf(_) => "duplicate",
                AddOutcome::NotInteresting => "not_interesting",
            };
            if let AddOutcome::Added(_) = outcome {
                report.adds += 1;
                self.scores.push(score(&result.coverage, &self.candidates));
                if let Some(i) = produced.doc {
                    self.docs[i].metadata.lines_achieved += new_lines as u64;
                }
            }
            if !triggered.is_empty() {
                self.rescore();
            }
            let input = seed_id(&produced.bytes);
            let event = Event {
                iter,
                action: &produced.action,
                source: &produced.source,
                input: &input[..16],
                len: produced.bytes.len(),
                status: result.status,
                outcome: outcome_name,
                new_lines,
                triggered: &triggered,
            };
            self.events.push(serde_json::to_string(&event).expect("event serializes"));
            if crash && self.stop_on_crash {
                break;
            }
        }
        report.corpus = self.corpus.stats();
        Ok(report)
    }

    fn rescore(&mut self) {
        self.scores = self.corpus.entries().map(|e| score(&e.coverage, &self.candidates)).collect();
    }

    fn execute(&self, runner: &mut Runner, input: &[u8]) -> Result<RunResult, DriverError> {
        let mut failures = 0;
        loop {
            match runner.run(input) {
                Ok(r) => return Ok(r),
                Err(RunnerError::Protocol(m)) => return Err(DriverError::RunnerProtocolError(m)),
                Err(e) => {
                    failures += 1;
                    log::warn!("runner failure {failures}: {e}");
                    if failures >= self.crash_loop_limit {
                        return Err(DriverError::RunnerCrashLoop {
                            failures,
                            last: e.to_string(),
                        });
                    }
                }
            }
        }
    }

    fn produce(&mut self, rng: &mut ChaCha8Rng) -> Produced {
        if self.corpus.is_empty() || rng.gen_bool(self.p_gen) {
            if let Some(p) = self.generate(rng) {
                return p;
            }
        }
        if !self.corpus.is_empty() {
            if let Some(p) = self.mutate(rng) {
                return p;
            }
        }
        Produced {
            bytes: Vec::new(),
            action: "empty".into(),
            source: String::new(),
            origin: Origin::External,
            ast: None,
            doc: None,
        }
    }

    fn generate(&mut self, rng: &mut ChaCha8Rng) -> Option<Produced> {
        let mut metas: Vec<_> = self.docs.iter_mut().map(|d| &mut d.metadata).collect();
        let i = self.sched.select_testlang(&mut metas, rng).ok()?;
        let crash = rng.gen_bool(self.p_crash);
        let seeds = SeedStream::new(rng.gen());
        let doc = &self.docs[i];
        let gen = Generator::new(doc).ok()?;
        let modes: &[GenMode] = if crash {
            &[GenMode::Crash, GenMode::Coverage]
        } else {
            &[GenMode::Coverage]
        };
        for &mode in modes {
            let made = match doc.mode {
                Mode::Bytes => gen.generate(&seeds, mode).ok(),
                Mode::Fdp => gen
                    .generate_fdp_calls(&seeds, mode)
                    .ok()
                    .and_then(|(calls, ast)| encode(self.dialect, &calls).ok().map(|b| (b, ast))),
            };
            if let Some((bytes, ast)) = made {
                let doc_id = doc.doc_id();
                return Some(Produced {
                    bytes,
                    action: format!("generate_{}", if mode == GenMode::Crash { "crash" } else { "coverage" }),
                    source: doc_id.clone(),
                    origin: Origin::Testlang { doc_id },
                    ast: Some(ast),
                    doc: Some(i),
                });
            }
        }
        None
    }

    fn mutate(&self, rng: &mut ChaCha8Rng) -> Option<Produced> {
        let (idx, _) = self.sched.select_seed(&self.scores, rng).ok()?;
        let entry = self.corpus.entries().nth(idx)?;
        let own_doc = match &entry.origin {
            Origin::Testlang { doc_id } => self.docs.iter().position(|d| &d.doc_id() == doc_id),
            Origin::External => None,
        };
        let doc_idx = own_doc.or_else(|| (0..self.docs.len()).collect::<Vec<_>>().choose(rng).copied());
        let doc = doc_idx.map(|i| &self.docs[i]);
        let mutator = Mutator::new(doc, self.dict.as_ref()).with_p_fallback(self.p_fallback);
        let ast = if own_doc.is_some() { entry.ast.as_ref() } else { None };
        let m = mutator.mutate(&entry.bytes, ast, rng).ok()?;
        let origin = match (&m.ast, doc) {
            (Some(_), Some(d)) => Origin::Testlang { doc_id: d.doc_id() },
            _ => Origin::External,
        };
        Some(Produced {
            doc: if m.ast.is_some() { doc_idx } else { None },
            bytes: m.bytes,
            action: m.strategy.name().to_string(),
            source: entry.id[..16].to_string(),
            origin,
            ast: m.ast,
        })
    }
}

fn runner_fatal(e: RunnerError) -> DriverError {
    DriverError::RunnerCrashLoop {
        failures: 0,
        last: e.to_string(),
    }
}

/// Loads `cfg`, runs the campaign, then writes the event log and corpus if
/// the config names them.
pub fn run_loop(cfg: &CampaignConfig) -> Result<CampaignReport, DriverError> {
    let mut campaign = Campaign::from_config(cfg)?;
    let result = campaign.run();
    if let Some(p) = &cfg.event_log {
        std::fs::write(p, campaign.event_log())?;
    }
    if let Some(dir) = &cfg.corpus_dir {
        campaign.corpus().persist(dir)?;
    }
    result
}
