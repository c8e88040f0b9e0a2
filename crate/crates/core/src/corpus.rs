//! Deduplicated seed pools with an interestingness gate and an on-disk form.
//!
//! On disk a store is two directories, `testlang/` and `external/`, each
//! holding `<id>.bin` (the input), `<id>.meta` (JSON: origin, coverage, crash
//! flag, sequence number) and, for testlang seeds, `<id>.ast`.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ast::TestlangAst;

/// A covered source line: (path, 1-based line).
pub type Line = (String, u32);
pub type Coverage = BTreeSet<Line>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Origin {
    Testlang { doc_id: String },
    External,
}

impl Origin {
    fn dir(&self) -> &'static str {
        match self {
            Self::Testlang { .. } => "testlang",
            Self::External => "external",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedEntry {
    pub id: String,
    pub bytes: Vec<u8>,
    pub origin: Origin,
    /// Present exactly for testlang-origin seeds.
    pub ast: Option<TestlangAst>,
    pub coverage: Coverage,
    pub crash: bool,
    pub created_seq: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AddOutcome {
    Added(String),
    DuplicateOf(String),
    NotInteresting,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("storage failure at {path}: {source}")]
    StorageFailure { path: PathBuf, source: io::Error },
    #[error("testlang seeds need an AST and external seeds must not have one")]
    OriginMismatch,
}

/// Problems found while loading; the affected entries are skipped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LoadIssue {
    CorruptEntry { path: PathBuf, reason: String },
    UnknownFile(PathBuf),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub testlang: usize,
    pub external: usize,
    pub union_coverage: usize,
    pub crashes: usize,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    origin: Origin,
    coverage: Vec<Line>,
    crash: bool,
    created_seq: u64,
}

pub fn seed_id(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusStore {
    entries: IndexMap<String, SeedEntry>,
    union: Coverage,
    next_seq: u64,
}

impl CorpusStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&SeedEntry> {
        self.entries.get(id)
    }

    pub fn contains(&self, bytes: &[u8]) -> bool {
        self.entries.contains_key(&seed_id(bytes))
    }

    /// All entries in insertion order.
    pub fn entries(&self) -> impl Iterator<Item = &SeedEntry> {
        self.entries.values()
    }

    pub fn testlang_entries(&self) -> impl Iterator<Item = &SeedEntry> {
        self.entries().filter(|e| e.ast.is_some())
    }

    pub fn external_entries(&self) -> impl Iterator<Item = &SeedEntry> {
        self.entries().filter(|e| e.origin == Origin::External)
    }

    pub fn union_coverage(&self) -> &Coverage {
        &self.union
    }

    /// Whether coverage adds at least one line the pool has not seen.
    pub fn is_new_coverage(&self, coverage: &Coverage) -> bool {
        !coverage.is_subset(&self.union)
    }

    /// Admits a seed if it is new and either crashes or covers a new line.
    pub fn add_seed(
        &mut self,
        bytes: Vec<u8>,
        origin: Origin,
        ast: Option<TestlangAst>,
        coverage: Coverage,
        crash: bool,
    ) -> Result<AddOutcome, CorpusError> {
        if matches!(origin, Origin::Testlang { .. }) != ast.is_some() {
            return Err(CorpusError::OriginMismatch);
        }
        let id = seed_id(&bytes);
        if self.entries.contains_key(&id) {
            return Ok(AddOutcome::DuplicateOf(id));
        }
        if !crash && !self.is_new_coverage(&coverage) {
            return Ok(AddOutcome::NotInteresting);
        }
        self.union.extend(coverage.iter().cloned());
        let entry = SeedEntry {
            id: id.clone(),
            bytes,
            origin,
            ast,
            coverage,
            crash,
            created_seq: self.next_seq,
        };
        self.next_seq += 1;
        self.entries.insert(id.clone(), entry);
        Ok(AddOutcome::Added(id))
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats {
            testlang: self.testlang_entries().count(),
            external: self.external_entries().count(),
            union_coverage: self.union.len(),
            crashes: self.entries().filter(|e| e.crash).count(),
        }
    }

    /// Writes every entry under `dir`. Existing files for the same ids are
    /// overwritten; nothing is deleted.
    pub fn persist(&self, dir: &Path) -> Result<(), CorpusError> {
        for sub in ["testlang", "external"] {
            let p = dir.join(sub);
            fs::create_dir_all(&p).map_err(|source| CorpusError::StorageFailure { path: p, source })?;
        }
        for e in self.entries() {
            persist_entry(dir, e)?;
        }
        Ok(())
    }

    /// Reads a store written by [`CorpusStore::persist`]. Corrupt entries and
    /// stray files are reported and skipped. A missing directory is an empty
    /// store.
    pub fn load(dir: &Path) -> Result<(Self, Vec<LoadIssue>), CorpusError> {
        let mut found = Vec::new();
        let mut issues = Vec::new();
        for sub in ["testlang", "external"] {
            let p = dir.join(sub);
            let listing = match fs::read_dir(&p) {
                Ok(l) => l,
                Err(e) if e.kind() == io::ErrorKind::NotFound => continue,
                Err(source) => return Err(CorpusError::StorageFailure { path: p, source }),
            };
            for item in listing {
                let item = item.map_err(|source| CorpusError::StorageFailure {
                    path: p.clone(),
                    source,
                })?;
                let path = item.path();
                match path.extension().and_then(|e| e.to_str()) {
                    Some("bin") => match read_entry(&path, sub) {
                        Ok(e) => found.push(e),
                        Err(reason) => issues.push(LoadIssue::CorruptEntry { path, reason }),
                    },
                    Some("meta" | "ast") if path.with_extension("bin").exists() => {}
                    _ => {
                        log::warn!("ignoring {}", path.display());
                        issues.push(LoadIssue::UnknownFile(path));
                    }
                }
            }
        }
        found.sort_by(|a, b| (a.created_seq, &a.id).cmp(&(b.created_seq, &b.id)));
        let mut store = Self::new();
        for e in found {
            store.union.extend(e.coverage.iter().cloned());
            store.next_seq = store.next_seq.max(e.created_seq + 1);
            store.entries.insert(e.id.clone(), e);
        }
        issues.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
        Ok((store, issues))
    }
}

fn write(path: PathBuf, data: &[u8]) -> Result<(), CorpusError> {
    fs::write(&path, data).map_err(|source| CorpusError::StorageFailure { path, source })
}

fn persist_entry(dir: &Path, e: &SeedEntry) -> Result<(), CorpusError> {
    let base = dir.join(e.origin.dir()).join(&e.id);
    let meta = Meta {
        origin: e.origin.clone(),
        coverage: e.coverage.iter().cloned().collect(),
        crash: e.crash,
        created_seq: e.created_seq,
    };
    write(base.with_extension("bin"), &e.bytes)?;
    write(
        base.with_extension("meta"),
        serde_json::to_string_pretty(&meta).expect("meta serializes").as_bytes(),
    )?;
    if let Some(ast) = &e.ast {
        write(
            base.with_extension("ast"),
            serde_json::to_string(ast).expect("ast serializes").as_bytes(),
        )?;
    }
    Ok(())
}

fn read_entry(bin: &Path, sub: &str) -> Result<SeedEntry, String> {
    let bytes = fs::read(bin).map_err(|e| e.to_string())?;
    let id = bin.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
    if seed_id(&bytes) != id {
        return Err("content does not match its id".into());
    }
    let meta_text = fs::read_to_string(bin.with_extension("meta")).map_err(|e| format!("meta: {e}"))?;
    let meta: Meta = serde_json::from_str(&meta_text).map_err(|e| format!("meta: {e}"))?;
    if meta.origin.dir() != sub {
        return Err(format!("{} seed stored under {sub}/", meta.origin.dir()));
    }
    let ast = match meta.origin {
        Origin::Testlang { .. } => {
            let text = fs::read_to_string(bin.with_extension("ast")).map_err(|e| format!("ast: {e}"))?;
            Some(serde_json::from_str(&text).map_err(|e| format!("ast: {e}"))?)
        }
        Origin::External => None,
    };
    Ok(SeedEntry {
        id,
        bytes,
        origin: meta.origin,
        ast,
        coverage: meta.coverage.into_iter().collect(),
        crash: meta.crash,
        created_seq: meta.created_seq,
    })
}
