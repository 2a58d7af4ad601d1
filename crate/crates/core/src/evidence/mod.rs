//! Per-word pronunciation, transliteration and translation signals.
//!
//! Each signal comes from a pluggable provider. File-backed providers are
//! the default; [`remote::RemotePivotProvider`] talks to a generic HTTP
//! service. [`Evidence`] bundles the providers with a phone relaxation table
//! and caches every lookup.

mod lexicon;
mod pivot;
mod relax;
pub mod remote;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub use lexicon::{GraphemeRules, PronunciationLexicon};
pub use pivot::PivotDictionary;
pub use relax::RelaxationTable;
pub use remote::{PivotTask, RemoteConfig, RemotePivotProvider};

#[derive(Debug, Error)]
pub enum EvidenceError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}line {line}: {reason}", path.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default())]
    Malformed {
        path: Option<PathBuf>,
        line: usize,
        reason: String,
    },
}

impl EvidenceError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        EvidenceError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(line: usize, reason: impl Into<String>) -> Self {
        EvidenceError::Malformed {
            path: None,
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn with_path(self, p: &Path) -> Self {
        match self {
            EvidenceError::Io { source, .. } => EvidenceError::io(p, source),
            EvidenceError::Malformed { line, reason, .. } => EvidenceError::Malformed {
                path: Some(p.to_owned()),
                line,
                reason,
            },
        }
    }
}

pub(crate) fn open_lines(path: &Path) -> Result<BufReader<fs::File>, EvidenceError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| EvidenceError::io(path, e))
}

/// Case-folds, trims and collapses internal whitespace of a pivot string.
pub fn normalize_pivot(s: &str) -> String {
    let composed: String = s.nfc().collect::<String>().to_lowercase();
    composed.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhoneSequence(Vec<String>);

impl PhoneSequence {
    pub fn new(phones: Vec<String>) -> Self {
        Self(phones)
    }

    /// Space-separated phone symbols.
    pub fn parse(s: &str) -> Self {
        Self(s.split_whitespace().map(str::to_owned).collect())
    }

    pub fn phones(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a PhoneSequence>) -> Self {
        Self(
            parts
                .into_iter()
                .flat_map(|p| p.0.iter().cloned())
                .collect(),
        )
    }
}

impl fmt::Display for PhoneSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

pub trait PronunciationProvider: Send + Sync {
    /// All known pronunciations of `word`; empty on a miss.
    fn pronounce(&self, word: &str) -> Vec<PhoneSequence>;
}

pub trait PivotProvider: Send + Sync {
    fn lookup(&self, word: &str) -> Option<String>;

    fn lookup_batch(&self, words: &[&str]) -> Vec<Option<String>> {
        words.iter().map(|w| self.lookup(w)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceRecord {
    pub word: String,
    /// Empty when the pronunciation provider had no answer.
    pub pronunciations: Vec<PhoneSequence>,
    pub transliteration: Option<String>,
    pub translation: Option<String>,
}

impl EvidenceRecord {
    pub fn absent(word: impl Into<String>) -> Self {
        Self {
            word: word.into(),
            pronunciations: Vec::new(),
            transliteration: None,
            translation: None,
        }
    }
}

/// Provider bundle with a grow-only lookup cache, safe to share across
/// worker threads.
pub struct Evidence {
    pronunciation: Option<Box<dyn PronunciationProvider>>,
    transliteration: Option<Box<dyn PivotProvider>>,
    translation: Option<Box<dyn PivotProvider>>,
    relaxation: RelaxationTable,
    cache: RwLock<HashMap<String, Arc<EvidenceRecord>>>,
    provider_calls: AtomicUsize,
}

impl Default for Evidence {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Evidence")
            .field("pronunciation", &self.pronunciation.is_some())
            .field("transliteration", &self.transliteration.is_some())
            .field("translation", &self.translation.is_some())
            .field("relaxation", &self.relaxation)
            .field("cached", &self.cache.read().unwrap().len())
            .finish()
    }
}

impl Evidence {
    pub fn new() -> Self {
        Self {
            pronunciation: None,
            transliteration: None,
            translation: None,
            relaxation: RelaxationTable::default(),
            cache: RwLock::new(HashMap::new()),
            provider_calls: AtomicUsize::new(0),
        }
    }

    pub fn with_pronunciation(mut self, p: impl PronunciationProvider + 'static) -> Self {
        self.pronunciation = Some(Box::new(p));
        self
    }

    pub fn with_transliteration(mut self, p: impl PivotProvider + 'static) -> Self {
        self.transliteration = Some(Box::new(p));
        self
    }

    pub fn with_translation(mut self, p: impl PivotProvider + 'static) -> Self {
        self.translation = Some(Box::new(p));
        self
    }

    pub fn with_relaxation(mut self, table: RelaxationTable) -> Self {
        self.relaxation = table;
        self
    }

    pub fn relaxation(&self) -> &RelaxationTable {
        &self.relaxation
    }

    /// Number of times any provider has been queried.
    pub fn provider_calls(&self) -> usize {
        self.provider_calls.load(Ordering::Relaxed)
    }

    pub fn relax(&self, seq: &PhoneSequence) -> PhoneSequence {
        self.relaxation.relax(seq)
    }

    pub fn pronounce(&self, word: &str) -> Vec<PhoneSequence> {
        self.evidence_for(word).pronunciations.clone()
    }

    pub fn transliterate(&self, word: &str) -> Option<String> {
        self.evidence_for(word).transliteration.clone()
    }

    pub fn translate(&self, word: &str) -> Option<String> {
        self.evidence_for(word).translation.clone()
    }

    /// Relaxed, sorted, deduplicated pronunciations of `word`.
    pub fn relaxed_pronunciations(&self, word: &str) -> Vec<PhoneSequence> {
        let mut out: Vec<PhoneSequence> = self
            .evidence_for(word)
            .pronunciations
            .iter()
            .map(|p| self.relax(p))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn evidence_for(&self, word: &str) -> Arc<EvidenceRecord> {
        let key: String = word.nfc().collect();
        if let Some(hit) = self.cache.read().unwrap().get(&key) {
            return Arc::clone(hit);
        }
        let record = Arc::new(self.query(&key));
        let mut cache = self.cache.write().unwrap();
        Arc::clone(cache.entry(key).or_insert(record))
    }

    /// Fills the cache for many words at once, batching pivot lookups.
    pub fn prefetch<'a>(&self, words: impl IntoIterator<Item = &'a str>) {
        let missing: Vec<String> = {
            let cache = self.cache.read().unwrap();
            let mut v: Vec<String> = words
                .into_iter()
                .map(|w| w.nfc().collect::<String>())
                .filter(|w| !cache.contains_key(w))
                .collect();
            v.sort();
            v.dedup();
            v
        };
        if missing.is_empty() {
            return;
        }
        let refs: Vec<&str> = missing.iter().map(String::as_str).collect();
        let batch = |p: &Option<Box<dyn PivotProvider>>| -> Vec<Option<String>> {
            match p {
                Some(p) => {
                    self.provider_calls.fetch_add(1, Ordering::Relaxed);
                    p.lookup_batch(&refs)
                }
                None => vec![None; refs.len()],
            }
        };
        let translits = batch(&self.transliteration);
        let translations = batch(&self.translation);
        let mut cache = self.cache.write().unwrap();
        for ((word, transliteration), translation) in
            missing.into_iter().zip(translits).zip(translations)
        {
            if cache.contains_key(&word) {
                continue;
            }
            let pronunciations = self.pronounce_uncached(&word);
            let record = EvidenceRecord {
                word: word.clone(),
                pronunciations,
                transliteration,
                translation,
            };
            cache.insert(word, Arc::new(record));
        }
    }

    fn pronounce_uncached(&self, word: &str) -> Vec<PhoneSequence> {
        match &self.pronunciation {
            Some(p) => {
                self.provider_calls.fetch_add(1, Ordering::Relaxed);
                p.pronounce(word)
            }
            None => Vec::new(),
        }
    }

    fn query(&self, word: &str) -> EvidenceRecord {
        let pivot = |p: &Option<Box<dyn PivotProvider>>| {
            p.as_ref().and_then(|p| {
                self.provider_calls.fetch_add(1, Ordering::Relaxed);
                p.lookup(word)
            })
        };
        EvidenceRecord {
            word: word.to_owned(),
            pronunciations: self.pronounce_uncached(word),
            transliteration: pivot(&self.transliteration),
            translation: pivot(&self.translation),
        }
    }
}
