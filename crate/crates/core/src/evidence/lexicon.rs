use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::Path;

use unicode_normalization::UnicodeNormalization;

use super::{open_lines, EvidenceError, PhoneSequence, PronunciationProvider};

/// Greedy longest-match grapheme → phones rules, used when the lexicon has
/// no entry for a word.
#[derive(Debug, Clone, Default)]
pub struct GraphemeRules {
    rules: BTreeMap<String, Vec<String>>,
    longest: usize,
}

impl GraphemeRules {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, EvidenceError> {
        let path = path.as_ref();
        Self::from_reader(open_lines(path)?).map_err(|e| e.with_path(path))
    }

    /// `grapheme<TAB>phone phone…` per line. An empty phone column marks a
    /// silent grapheme.
    pub fn from_reader(reader: impl BufRead) -> Result<Self, EvidenceError> {
        let mut rules = BTreeMap::new();
        let mut longest = 0;
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| EvidenceError::io("<reader>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let (g, phones) = line
                .split_once('\t')
                .ok_or_else(|| EvidenceError::malformed(idx + 1, "missing tab separator"))?;
            let g: String = g.trim().nfc().collect();
            if g.is_empty() {
                return Err(EvidenceError::malformed(idx + 1, "empty grapheme"));
            }
            longest = longest.max(g.chars().count());
            rules.insert(g, phones.split_whitespace().map(str::to_owned).collect());
        }
        Ok(Self { rules, longest })
    }

    pub fn apply(&self, word: &str) -> Option<PhoneSequence> {
        let chars: Vec<char> = word.chars().collect();
        if chars.is_empty() {
            return None;
        }
        let mut phones = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let max = self.longest.min(chars.len() - i);
            let hit = (1..=max).rev().find_map(|len| {
                let g: String = chars[i..i + len].iter().collect();
                self.rules.get(&g).map(|p| (len, p))
            });
            let (len, p) = hit?;
            phones.extend(p.iter().cloned());
            i += len;
        }
        if phones.is_empty() {
            None
        } else {
            Some(PhoneSequence::new(phones))
        }
    }

    fn phones(&self) -> impl Iterator<Item = &str> {
        self.rules.values().flatten().map(String::as_str)
    }
}

/// Word → pronunciations lexicon. A word may appear on several lines, one
/// per pronunciation variant.
#[derive(Debug, Clone, Default)]
pub struct PronunciationLexicon {
    entries: BTreeMap<String, Vec<PhoneSequence>>,
    rules: Option<GraphemeRules>,
}

impl PronunciationLexicon {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, EvidenceError> {
        let path = path.as_ref();
        Self::from_reader(open_lines(path)?).map_err(|e| e.with_path(path))
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self, EvidenceError> {
        let mut entries: BTreeMap<String, Vec<PhoneSequence>> = BTreeMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| EvidenceError::io("<reader>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let (word, phones) = line
                .split_once('\t')
                .ok_or_else(|| EvidenceError::malformed(idx + 1, "missing tab separator"))?;
            let word: String = word.trim().nfc().collect();
            if word.is_empty() {
                return Err(EvidenceError::malformed(idx + 1, "empty word"));
            }
            let seq = PhoneSequence::parse(phones);
            if seq.is_empty() {
                return Err(EvidenceError::malformed(
                    idx + 1,
                    format!("no phones for {word:?}"),
                ));
            }
            let prons = entries.entry(word).or_default();
            if !prons.contains(&seq) {
                prons.push(seq);
            }
        }
        Ok(Self {
            entries,
            rules: None,
        })
    }

    pub fn with_rules(mut self, rules: GraphemeRules) -> Self {
        self.rules = Some(rules);
        self
    }

    pub fn insert(&mut self, word: &str, seq: PhoneSequence) {
        let prons = self.entries.entry(word.nfc().collect()).or_default();
        if !prons.contains(&seq) {
            prons.push(seq);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every phone symbol the lexicon and rules can produce.
    pub fn inventory(&self) -> BTreeSet<&str> {
        let mut set: BTreeSet<&str> = self
            .entries
            .values()
            .flatten()
            .flat_map(|s| s.phones().iter().map(String::as_str))
            .collect();
        if let Some(rules) = &self.rules {
            set.extend(rules.phones());
        }
        set
    }
}

impl PronunciationProvider for PronunciationLexicon {
    fn pronounce(&self, word: &str) -> Vec<PhoneSequence> {
        if let Some(prons) = self.entries.get(word) {
            return prons.clone();
        }
        self.rules
            .as_ref()
            .and_then(|r| r.apply(word))
            .into_iter()
            .collect()
    }
}
