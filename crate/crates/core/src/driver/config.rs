use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::fdp::Dialect;
use crate::scheduler::SchedulerConfig;

use super::DriverError;

fn default_iterations() -> u64 {
    1000
}
fn default_p_gen() -> f64 {
    0.3
}
fn default_p_crash() -> f64 {
    0.3
}
fn default_p_fallback() -> f64 {
    crate::mutator::DEFAULT_P_FALLBACK
}
fn default_timeout_ms() -> u64 {
    1000
}
fn default_crash_loop_limit() -> u32 {
    5
}

/// Campaign settings, read from TOML. Relative paths are resolved against
/// the directory of the config file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    /// Runner argv.
    pub runner: Vec<String>,
    pub docs: Vec<PathBuf>,
    pub candidates: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    /// Loaded at start if present, written back at the end.
    pub corpus_dir: Option<PathBuf>,
    /// JSON-lines event log.
    pub event_log: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_iterations")]
    pub iterations: u64,
    /// Chance of generating from a document instead of mutating a seed.
    #[serde(default = "default_p_gen")]
    pub p_gen: f64,
    /// Chance a generation uses crash mode.
    #[serde(default = "default_p_crash")]
    pub p_crash: f64,
    #[serde(default = "default_p_fallback")]
    pub p_fallback: f64,
    #[serde(default = "default_timeout_ms")]
    pub exec_timeout_ms: u64,
    /// Consecutive runner failures tolerated before the campaign aborts.
    #[serde(default = "default_crash_loop_limit")]
    pub crash_loop_limit: u32,
    /// Encoder dialect for FDP-mode documents.
    /// End the campaign at the first crashing execution.
    #[serde(default)]
    pub stop_on_crash: bool,
    /// Treat runner timeouts as crashes.
    #[serde(default)]
    pub timeout_is_crash: bool,
    #[serde(default = "default_dialect", deserialize_with = "dialect")]
    pub dialect: Dialect,
    #[serde(default)]
    pub scheduler: SchedulerConfig,
}

fn default_dialect() -> Dialect {
    Dialect::Llvm
}

fn dialect<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Dialect, D::Error> {
    String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
}

impl CampaignConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, DriverError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| DriverError::Config(e.to_string()))?;
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.docs.iter_mut().for_each(fix);
        for p in [&mut cfg.candidates, &mut cfg.dictionary, &mut cfg.corpus_dir, &mut cfg.event_log]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        for (name, p) in [("p_gen", cfg.p_gen), ("p_crash", cfg.p_crash), ("p_fallback", cfg.p_fallback)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(DriverError::Config(format!("{name} must be in [0, 1]")));
            }
        }
        if cfg.docs.is_empty() {
            return Err(DriverError::Config("at least one document is required".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, DriverError> {
        let text = std::fs::read_to_string(path).map_err(|e| DriverError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Settings with every optional input absent.
    pub fn minimal(runner: Vec<String>, docs: Vec<PathBuf>) -> Self {
        Self {
            runner,
            docs,
            candidates: None,
            dictionary: None,
            corpus_dir: None,
            event_log: None,
            seed: 0,
            iterations: default_iterations(),
            p_gen: default_p_gen(),
            p_crash: default_p_crash(),
            p_fallback: default_p_fallback(),
            exec_timeout_ms: default_timeout_ms(),
            crash_loop_limit: default_crash_loop_limit(),
            stop_on_crash: false,
            timeout_is_crash: false,
            dialect: default_dialect(),
            scheduler: SchedulerConfig::default(),
        }
    }
}
