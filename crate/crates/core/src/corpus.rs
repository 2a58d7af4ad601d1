//! Evaluation corpora: loading, tokenization and vocabulary extraction.
//!
//! A corpus file holds one utterance per line. The default layout is three
//! tab-separated columns `id<TAB>reference<TAB>hypothesis`; a JSON-lines
//! layout with `{"id", "ref", "hyp"}` objects is also accepted.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate utterance id {id:?}")]
    DuplicateId { line: usize, id: String },
}

/// On-disk layout of a corpus file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    #[default]
    Tsv,
    Jsonl,
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(CorpusFormat::Tsv),
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            other => Err(format!(
                "unknown corpus format {other:?} (expected tsv or jsonl)"
            )),
        }
    }
}

/// Controls how raw text becomes tokens.
///
/// Tokens are whitespace-delimited. Characters in `strip` are removed from
/// the text before splitting; by default nothing is stripped.
#[derive(Debug, Clone, Default)]
pub struct Tokenizer {
    strip: BTreeSet<char>,
}

impl Tokenizer {
    pub fn with_strip_set(strip: impl IntoIterator<Item = char>) -> Self {
        Self {
            strip: strip.into_iter().collect(),
        }
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let composed: String = text.nfc().collect();
        let cleaned: String = if self.strip.is_empty() {
            composed
        } else {
            composed
                .chars()
                .filter(|c| !self.strip.contains(c))
                .collect()
        };
        cleaned.split_whitespace().map(str::to_owned).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    pub reference: Vec<String>,
    pub hypothesis: Vec<String>,
}

impl Utterance {
    pub fn new(id: impl Into<String>, reference: Vec<String>, hypothesis: Vec<String>) -> Self {
        Self {
            id: id.into(),
            reference,
            hypothesis,
        }
    }

    /// Builds an utterance from raw text using the default tokenizer.
    pub fn from_text(id: impl Into<String>, reference: &str, hypothesis: &str) -> Self {
        let tok = Tokenizer::default();
        Self::new(id, tok.tokenize(reference), tok.tokenize(hypothesis))
    }

    /// Applies `f` to both sides, returning a new utterance with the same id.
    pub fn map_sides<E>(
        &self,
        mut f: impl FnMut(&[String]) -> Result<Vec<String>, E>,
    ) -> Result<Utterance, E> {
        Ok(Utterance {
            id: self.id.clone(),
            reference: f(&self.reference)?,
            hypothesis: f(&self.hypothesis)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub locale: String,
    pub utterances: Vec<Utterance>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids.
    pub fn new(locale: impl Into<String>, utterances: Vec<Utterance>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for (i, utt) in utterances.iter().enumerate() {
            if utt.id.is_empty() {
                return Err(CorpusError::Malformed {
                    line: i + 1,
                    reason: "empty utterance id".into(),
                });
            }
            if !seen.insert(utt.id.as_str()) {
                return Err(CorpusError::DuplicateId {
                    line: i + 1,
                    id: utt.id.clone(),
                });
            }
        }
        Ok(Self {
            locale: locale.into(),
            utterances,
        })
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    /// Applies a token-sequence rewrite to both sides of every utterance.
    pub fn map_tokens<E>(
        &self,
        mut f: impl FnMut(&[String]) -> Result<Vec<String>, E>,
    ) -> Result<Corpus, E> {
        let utterances = self
            .utterances
            .iter()
            .map(|u| u.map_sides(&mut f))
            .collect::<Result<Vec<_>, E>>()?;
        Ok(Corpus {
            locale: self.locale.clone(),
            utterances,
        })
    }

    /// Writes the corpus in the three-column TSV layout.
    pub fn write_tsv(&self, mut out: impl Write) -> io::Result<()> {
        for u in &self.utterances {
            writeln!(
                out,
                "{}\t{}\t{}",
                u.id,
                u.reference.join(" "),
                u.hypothesis.join(" ")
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct JsonRecord {
    id: Option<String>,
    #[serde(rename = "ref")]
    reference: Option<String>,
    #[serde(rename = "hyp")]
    hypothesis: Option<String>,
}

pub fn load_corpus(
    path: impl AsRef<Path>,
    locale: &str,
    format: CorpusFormat,
    tokenizer: &Tokenizer,
) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })?;
    read_corpus(BufReader::new(file), locale, format, tokenizer).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io {
            path: path.to_owned(),
            source,
        },
        other => other,
    })
}

/// Parses a corpus from any reader. Blank lines are skipped; line numbers
/// in errors are 1-based physical lines.
pub fn read_corpus(
    reader: impl BufRead,
    locale: &str,
    format: CorpusFormat,
    tokenizer: &Tokenizer,
) -> Result<Corpus, CorpusError> {
    let mut utterances = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: PathBuf::new(),
            source,
        })?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let (id, reference, hypothesis) = match format {
            CorpusFormat::Tsv => parse_tsv_record(line, lineno)?,
            CorpusFormat::Jsonl => parse_json_record(line, lineno)?,
        };
        let id: String = id.trim().nfc().collect();
        if id.is_empty() {
            return Err(CorpusError::Malformed {
                line: lineno,
                reason: "empty utterance id".into(),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { line: lineno, id });
        }
        utterances.push(Utterance {
            id,
            reference: tokenizer.tokenize(&reference),
            hypothesis: tokenizer.tokenize(&hypothesis),
        });
    }
    Ok(Corpus {
        locale: locale.to_owned(),
        utterances,
    })
}

fn parse_tsv_record(line: &str, lineno: usize) -> Result<(String, String, String), CorpusError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 3 {
        return Err(CorpusError::Malformed {
            line: lineno,
            reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
        });
    }
    Ok((fields[0].into(), fields[1].into(), fields[2].into()))
}

fn parse_json_record(line: &str, lineno: usize) -> Result<(String, String, String), CorpusError> {
    let rec: JsonRecord = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
        line: lineno,
        reason: e.to_string(),
    })?;
    let missing = |name: &str| CorpusError::Malformed {
        line: lineno,
        reason: format!("missing field {name:?}"),
    };
    Ok((
        rec.id.ok_or_else(|| missing("id"))?,
        rec.reference.ok_or_else(|| missing("ref"))?,
        rec.hypothesis.ok_or_else(|| missing("hyp"))?,
    ))
}

/// Which side(s) of the corpus a vocabulary was counted over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VocabSource {
    Reference,
    Hypothesis,
    Both,
}

impl VocabSource {
    fn sides<'a>(&self, utt: &'a Utterance) -> impl Iterator<Item = &'a String> {
        let (r, h) = match self {
            VocabSource::Reference => (&utt.reference[..], &[][..]),
            VocabSource::Hypothesis => (&[][..], &utt.hypothesis[..]),
            VocabSource::Both => (&utt.reference[..], &utt.hypothesis[..]),
        };
        r.iter().chain(h.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: BTreeMap<String, u64>,
    source: VocabSource,
}

impl Vocabulary {
    pub fn from_counts(
        source: VocabSource,
        counts: impl IntoIterator<Item = (String, u64)>,
    ) -> Self {
        let mut entries = BTreeMap::new();
        for (w, c) in counts {
            if c > 0 {
                *entries.entry(w).or_insert(0) += c;
            }
        }
        Self { entries, source }
    }

    pub fn source(&self) -> VocabSource {
        self.source
    }

    pub fn count(&self, word: &str) -> u64 {
        self.entries.get(word).copied().unwrap_or(0)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    /// Words in code-point order with their counts.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(w, c)| (w.as_str(), *c))
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

pub fn extract_vocabulary(corpus: &Corpus, source: VocabSource) -> Vocabulary {
    let mut entries = BTreeMap::new();
    for utt in &corpus.utterances {
        for tok in source.sides(utt) {
            *entries.entry(tok.clone()).or_insert(0u64) += 1;
        }
    }
    Vocabulary { entries, source }
}
