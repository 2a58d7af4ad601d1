//! Spelling-variant mining and normalization.
//!
//! Two words are judged variants when their pronunciation (after phone
//! relaxation), transliteration and translation signals agree. Accepted
//! pairs are closed transitively into classes, and each class is rewritten
//! to its member with the highest unigram weight.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{Corpus, Vocabulary};
use crate::disjoint::DisjointSet;
use crate::evidence::Evidence;
use crate::review::{self, ReviewDecision, ReviewError};

#[derive(Debug, Error)]
pub enum SpellError {
    #[error("min_agree must be between 1 and 3, got {0}")]
    BadPolicy(usize),
    #[error("unigram file {path}: {reason}")]
    Unigrams { path: String, reason: String },
    #[error(transparent)]
    Review(#[from] ReviewError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalOutcome {
    Agree,
    Disagree,
    Unavailable,
}

impl fmt::Display for SignalOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignalOutcome::Agree => "agree",
            SignalOutcome::Disagree => "disagree",
            SignalOutcome::Unavailable => "unavailable",
        })
    }
}

impl FromStr for SignalOutcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "agree" => Ok(SignalOutcome::Agree),
            "disagree" => Ok(SignalOutcome::Disagree),
            "unavailable" => Ok(SignalOutcome::Unavailable),
            other => Err(format!("unknown signal outcome {other:?}")),
        }
    }
}

/// How per-signal outcomes combine into an accept/reject decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationPolicy {
    min_agree: usize,
    strict: bool,
}

impl Default for AggregationPolicy {
    fn default() -> Self {
        Self {
            min_agree: 2,
            strict: false,
        }
    }
}

impl AggregationPolicy {
    /// Accept when no signal disagrees and at least `min_agree` agree.
    pub fn new(min_agree: usize) -> Result<Self, SpellError> {
        if !(1..=3).contains(&min_agree) {
            return Err(SpellError::BadPolicy(min_agree));
        }
        Ok(Self {
            min_agree,
            strict: false,
        })
    }

    /// Accept only when all three signals agree.
    pub fn strict() -> Self {
        Self {
            min_agree: 3,
            strict: true,
        }
    }

    pub fn min_agree(&self) -> usize {
        self.min_agree
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn accepts(&self, outcomes: [SignalOutcome; 3]) -> bool {
        let agree = outcomes
            .iter()
            .filter(|o| **o == SignalOutcome::Agree)
            .count();
        if self.strict {
            return agree == 3;
        }
        !outcomes.contains(&SignalOutcome::Disagree) && agree >= self.min_agree
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantVerdict {
    /// The smaller of the two words by code point.
    pub word_a: String,
    pub word_b: String,
    pub pronunciation: SignalOutcome,
    pub transliteration: SignalOutcome,
    pub translation: SignalOutcome,
    pub accepted: bool,
}

impl VariantVerdict {
    pub fn outcomes(&self) -> [SignalOutcome; 3] {
        [self.pronunciation, self.transliteration, self.translation]
    }
}

fn compare_pivot(a: Option<&str>, b: Option<&str>) -> SignalOutcome {
    match (a, b) {
        (Some(x), Some(y)) if x == y => SignalOutcome::Agree,
        (Some(_), Some(_)) => SignalOutcome::Disagree,
        _ => SignalOutcome::Unavailable,
    }
}

pub fn judge_pair(
    a: &str,
    b: &str,
    evidence: &Evidence,
    policy: &AggregationPolicy,
) -> VariantVerdict {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let ea = evidence.evidence_for(a);
    let eb = evidence.evidence_for(b);

    let pa = evidence.relaxed_pronunciations(a);
    let pb = evidence.relaxed_pronunciations(b);
    let pronunciation = if pa.is_empty() || pb.is_empty() {
        SignalOutcome::Unavailable
    } else if pa.iter().any(|p| pb.contains(p)) {
        SignalOutcome::Agree
    } else {
        SignalOutcome::Disagree
    };
    let transliteration =
        compare_pivot(ea.transliteration.as_deref(), eb.transliteration.as_deref());
    let translation = compare_pivot(ea.translation.as_deref(), eb.translation.as_deref());
    let outcomes = [pronunciation, transliteration, translation];

    VariantVerdict {
        word_a: a.to_owned(),
        word_b: b.to_owned(),
        pronunciation,
        transliteration,
        translation,
        accepted: policy.accepts(outcomes),
    }
}

/// Blocking keys of a word: one per relaxed pronunciation plus its
/// transliteration and translation.
fn blocking_keys(word: &str, evidence: &Evidence) -> Vec<String> {
    let rec = evidence.evidence_for(word);
    let mut keys: Vec<String> = evidence
        .relaxed_pronunciations(word)
        .into_iter()
        .map(|p| format!("p\u{1f}{p}"))
        .collect();
    if let Some(t) = &rec.transliteration {
        keys.push(format!("t\u{1f}{t}"));
    }
    if let Some(t) = &rec.translation {
        keys.push(format!("r\u{1f}{t}"));
    }
    keys
}

/// Unordered word pairs that share at least one blocking key, each as
/// `(smaller, larger)`.
pub fn generate_candidates(vocab: &Vocabulary, evidence: &Evidence) -> BTreeSet<(String, String)> {
    evidence.prefetch(vocab.words());
    let mut buckets: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for word in vocab.words() {
        for key in blocking_keys(word, evidence) {
            buckets.entry(key).or_default().push(word);
        }
    }
    let mut pairs = BTreeSet::new();
    for members in buckets.values() {
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                if a != b {
                    let (x, y) = if a < b { (a, b) } else { (b, a) };
                    pairs.insert((x.to_string(), y.to_string()));
                }
            }
        }
    }
    pairs
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpellMining {
    /// Every judged candidate, sorted by word pair.
    pub verdicts: Vec<VariantVerdict>,
}

impl SpellMining {
    pub fn accepted(&self) -> impl Iterator<Item = &VariantVerdict> {
        self.verdicts.iter().filter(|v| v.accepted)
    }

    pub fn accepted_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.accepted()
            .map(|v| (v.word_a.as_str(), v.word_b.as_str()))
    }
}

/// Generates candidates over `vocab` and judges each one. Judging runs on
/// the current rayon pool.
pub fn mine_spell_pairs(
    vocab: &Vocabulary,
    evidence: &Evidence,
    policy: &AggregationPolicy,
) -> SpellMining {
    let candidates: Vec<(String, String)> =
        generate_candidates(vocab, evidence).into_iter().collect();
    let verdicts = candidates
        .par_iter()
        .map(|(a, b)| judge_pair(a, b, evidence, policy))
        .collect();
    SpellMining { verdicts }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UnigramTable {
    weights: BTreeMap<String, f64>,
}

impl UnigramTable {
    /// Reference-side token counts.
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut weights = BTreeMap::new();
        for tok in corpus.utterances.iter().flat_map(|u| u.reference.iter()) {
            *weights.entry(tok.clone()).or_insert(0.0) += 1.0;
        }
        Self { weights }
    }

    pub fn from_weights<S: Into<String>>(weights: impl IntoIterator<Item = (S, f64)>) -> Self {
        Self {
            weights: weights
                .into_iter()
                .map(|(w, x)| (w.into(), x.max(0.0)))
                .collect(),
        }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, SpellError> {
        let path = path.as_ref();
        let err = |reason: String| SpellError::Unigrams {
            path: path.display().to_string(),
            reason,
        };
        let file = std::fs::File::open(path).map_err(|e| err(e.to_string()))?;
        Self::from_reader(io::BufReader::new(file)).map_err(|e| err(e.to_string()))
    }

    /// `word<TAB>weight` per line.
    pub fn from_reader(reader: impl BufRead) -> Result<Self, ReviewError> {
        let mut weights = BTreeMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (word, weight) = line
                .split_once('\t')
                .ok_or_else(|| ReviewError::malformed(idx + 1, "missing tab separator"))?;
            let weight: f64 = weight
                .trim()
                .parse()
                .map_err(|e| ReviewError::malformed(idx + 1, format!("bad weight: {e}")))?;
            if !weight.is_finite() || weight < 0.0 {
                return Err(ReviewError::malformed(
                    idx + 1,
                    format!("weight must be finite and non-negative, got {weight}"),
                ));
            }
            weights.insert(word.trim().nfc().collect(), weight);
        }
        Ok(Self { weights })
    }

    pub fn weight(&self, word: &str) -> f64 {
        self.weights.get(word).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// An external weights file, when given, takes precedence over corpus counts.
pub fn build_unigram_table(
    corpus: Option<&Corpus>,
    file: Option<&Path>,
) -> Result<UnigramTable, SpellError> {
    match (file, corpus) {
        (Some(path), _) => UnigramTable::open(path),
        (None, Some(c)) => Ok(UnigramTable::from_corpus(c)),
        (None, None) => Ok(UnigramTable::default()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpellClass {
    /// Sorted by code point.
    pub members: Vec<String>,
    pub canonical: String,
}

/// Partition of a word subset into interchangeable classes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpellMap {
    classes: Vec<SpellClass>,
    index: HashMap<String, usize>,
}

pub fn build_spell_map<'a>(
    pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    unigrams: &UnigramTable,
) -> SpellMap {
    let mut sets = DisjointSet::new();
    let mut direct: BTreeSet<(&str, &str)> = BTreeSet::new();
    for (a, b) in pairs {
        if a != b {
            sets.union(a, b);
            direct.insert(if a < b { (a, b) } else { (b, a) });
        }
    }
    let mut classes = Vec::new();
    let mut index = HashMap::new();
    for members in sets.groups() {
        let n = members.len();
        let linked = direct
            .iter()
            .filter(|(a, _)| members.binary_search_by(|m| m.as_str().cmp(a)).is_ok())
            .count();
        if linked < n * (n - 1) / 2 {
            log::debug!(
                "class {members:?}: {} member pairs joined only through chains",
                n * (n - 1) / 2 - linked
            );
        }
        let canonical = members
            .iter()
            .max_by(|x, y| {
                unigrams
                    .weight(x)
                    .total_cmp(&unigrams.weight(y))
                    // reversed so the smaller word wins a tie under max_by
                    .then_with(|| y.cmp(x))
            })
            .cloned()
            .expect("groups are never empty");
        let id = classes.len();
        for m in &members {
            index.insert(m.clone(), id);
        }
        classes.push(SpellClass { members, canonical });
    }
    SpellMap { classes, index }
}

impl SpellMap {
    pub fn classes(&self) -> &[SpellClass] {
        &self.classes
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_of(&self, word: &str) -> Option<&SpellClass> {
        self.index.get(word).map(|&i| &self.classes[i])
    }

    pub fn canonical<'a>(&'a self, word: &'a str) -> &'a str {
        self.class_of(word)
            .map(|c| c.canonical.as_str())
            .unwrap_or(word)
    }

    /// Class-aware equality for use as an alignment predicate.
    pub fn equivalent(&self, a: &str, b: &str) -> bool {
        a == b
            || matches!(
                (self.index.get(a), self.index.get(b)),
                (Some(x), Some(y)) if x == y
            )
    }

    /// Rewritten tokens plus the number of tokens that changed.
    pub fn apply_counted(&self, tokens: &[String]) -> (Vec<String>, usize) {
        let mut changed = 0;
        let out = tokens
            .iter()
            .map(|t| {
                let c = self.canonical(t);
                if c != t {
                    changed += 1;
                }
                c.to_owned()
            })
            .collect();
        (out, changed)
    }

    /// Writes `word<TAB>canonical` for every class member.
    pub fn write(&self, mut out: impl Write) -> io::Result<()> {
        for class in &self.classes {
            for m in &class.members {
                writeln!(out, "{m}\t{}", class.canonical)?;
            }
        }
        Ok(())
    }
}

pub fn apply_spell_map(tokens: &[String], map: &SpellMap) -> Vec<String> {
    map.apply_counted(tokens).0
}

pub const SPELL_REVIEW_HEADER: &str =
    "word_a\tword_b\tpron_outcome\ttranslit_outcome\ttrans_outcome\taccepted";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReviewedSpellPair {
    pub verdict: VariantVerdict,
    pub review: Option<ReviewDecision>,
}

impl ReviewedSpellPair {
    /// Whether this pair feeds the spell map on rebuild.
    pub fn included(&self) -> bool {
        review::included(self.verdict.accepted, self.review)
    }
}

/// Writes the header and one row per verdict.
pub fn write_spell_review<'a>(
    verdicts: impl IntoIterator<Item = &'a VariantVerdict>,
    mut out: impl Write,
) -> io::Result<usize> {
    writeln!(out, "{SPELL_REVIEW_HEADER}")?;
    let mut rows = 0;
    for v in verdicts {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            v.word_a, v.word_b, v.pronunciation, v.transliteration, v.translation, v.accepted
        )?;
        rows += 1;
    }
    Ok(rows)
}

/// Reads a spell review file, with or without the trailing verdict column.
pub fn read_spell_review(reader: impl BufRead) -> Result<Vec<ReviewedSpellPair>, ReviewError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() || (lineno == 1 && line.starts_with("word_a\t")) {
            continue;
        }
        let (f, review) = review::split_fields(&line, 6, lineno)?;
        let outcome = |s: &str| -> Result<SignalOutcome, ReviewError> {
            s.parse().map_err(|e| ReviewError::malformed(lineno, e))
        };
        let (a, b): (String, String) = (f[0].nfc().collect(), f[1].nfc().collect());
        let (word_a, word_b) = if a <= b { (a, b) } else { (b, a) };
        out.push(ReviewedSpellPair {
            verdict: VariantVerdict {
                word_a,
                word_b,
                pronunciation: outcome(f[2])?,
                transliteration: outcome(f[3])?,
                translation: outcome(f[4])?,
                accepted: review::parse_bool(f[5], lineno)?,
            },
            review,
        });
    }
    Ok(out)
}
