use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use unicode_normalization::UnicodeNormalization;

use super::{normalize_pivot, open_lines, EvidenceError, PivotProvider};

/// File-backed word → pivot form mapping, used for both transliteration and
/// translation. Keys may be multi-word phrases.
#[derive(Debug, Clone, Default)]
pub struct PivotDictionary {
    entries: BTreeMap<String, String>,
}

impl PivotDictionary {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, EvidenceError> {
        let path = path.as_ref();
        Self::from_reader(open_lines(path)?).map_err(|e| e.with_path(path))
    }

    /// `word<TAB>pivot_form` per line. A later line for the same word
    /// replaces the earlier one.
    pub fn from_reader(reader: impl BufRead) -> Result<Self, EvidenceError> {
        let mut entries = BTreeMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| EvidenceError::io("<reader>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let (word, form) = line
                .split_once('\t')
                .ok_or_else(|| EvidenceError::malformed(idx + 1, "missing tab separator"))?;
            let word = normalize_key(word);
            let form = normalize_pivot(form);
            if word.is_empty() || form.is_empty() {
                return Err(EvidenceError::malformed(
                    idx + 1,
                    "empty word or pivot form",
                ));
            }
            entries.insert(word, form);
        }
        Ok(Self { entries })
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Self {
            entries: pairs
                .into_iter()
                .map(|(w, f)| (normalize_key(w), normalize_pivot(f)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn normalize_key(word: &str) -> String {
    let composed: String = word.nfc().collect();
    composed.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl PivotProvider for PivotDictionary {
    fn lookup(&self, word: &str) -> Option<String> {
        self.entries.get(word).cloned()
    }
}
