//! Built-in subword segmenters.
//!
//! Both methods split a word only into units that are themselves
//! vocabulary words. `UnigramViterbi` may cut at any character boundary;
//! `BytePairMerge` may only cut at boundaries left by its learned merges.
//! In both, the chosen split is the one maximizing the product of unit
//! relative frequencies.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SegError;
use crate::corpus::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegMethod {
    #[default]
    UnigramViterbi,
    BytePairMerge,
}

impl FromStr for SegMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unigram" | "unigram-viterbi" => Ok(SegMethod::UnigramViterbi),
            "bpe" | "byte-pair-merge" => Ok(SegMethod::BytePairMerge),
            other => Err(format!(
                "unknown segmentation method {other:?} (expected unigram or bpe)"
            )),
        }
    }
}

impl fmt::Display for SegMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SegMethod::UnigramViterbi => "unigram",
            SegMethod::BytePairMerge => "bpe",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmenterParams {
    pub max_segments: usize,
    /// Merge budget for byte-pair training; ignored by the unigram method.
    pub num_merges: usize,
}

impl Default for SegmenterParams {
    fn default() -> Self {
        Self {
            max_segments: 3,
            num_merges: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmenterModel {
    method: SegMethod,
    units: BTreeMap<String, u64>,
    total: u64,
    merges: Vec<(String, String)>,
    max_segments: usize,
}

pub fn train_segmenter(
    vocab: &Vocabulary,
    method: SegMethod,
    params: SegmenterParams,
) -> Result<SegmenterModel, SegError> {
    if vocab.is_empty() {
        return Err(SegError::EmptyVocabulary);
    }
    if params.max_segments < 2 {
        return Err(SegError::MaxSegments(params.max_segments));
    }
    let units: BTreeMap<String, u64> = vocab.iter().map(|(w, c)| (w.to_owned(), c)).collect();
    let merges = match method {
        SegMethod::UnigramViterbi => Vec::new(),
        SegMethod::BytePairMerge => learn_merges(&units, params.num_merges),
    };
    Ok(SegmenterModel {
        method,
        total: units.values().sum(),
        units,
        merges,
        max_segments: params.max_segments,
    })
}

/// Classic BPE over word types weighted by count. Ties between equally
/// frequent pairs go to the smallest pair.
fn learn_merges(units: &BTreeMap<String, u64>, budget: usize) -> Vec<(String, String)> {
    let mut words: Vec<(Vec<String>, u64)> = units
        .iter()
        .map(|(w, c)| (w.chars().map(String::from).collect(), *c))
        .collect();
    let mut merges = Vec::new();
    while merges.len() < budget {
        let mut counts: BTreeMap<(&str, &str), u64> = BTreeMap::new();
        for (symbols, c) in &words {
            for pair in symbols.windows(2) {
                *counts.entry((&pair[0], &pair[1])).or_insert(0) += c;
            }
        }
        let Some(((a, b), _)) = counts
            .iter()
            .max_by(|x, y| x.1.cmp(y.1).then_with(|| y.0.cmp(x.0)))
        else {
            break;
        };
        let (a, b) = (a.to_string(), b.to_string());
        for (symbols, _) in &mut words {
            merge_in_place(symbols, &a, &b);
        }
        merges.push((a, b));
    }
    merges
}

fn merge_in_place(symbols: &mut Vec<String>, a: &str, b: &str) {
    let mut i = 0;
    while i + 1 < symbols.len() {
        if symbols[i] == a && symbols[i + 1] == b {
            let right = symbols.remove(i + 1);
            symbols[i].push_str(&right);
        }
        i += 1;
    }
}

impl SegmenterModel {
    pub fn method(&self) -> SegMethod {
        self.method
    }

    pub fn max_segments(&self) -> usize {
        self.max_segments
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn is_unit(&self, s: &str) -> bool {
        self.units.contains_key(s)
    }

    fn log_prob(&self, unit: &str) -> Option<f64> {
        self.units
            .get(unit)
            .map(|&c| (c as f64 / self.total as f64).ln())
    }

    /// Best segmentation of `word` into 2..=max_segments units, or `None`
    /// when no such split exists or the unsplit word scores at least as
    /// well.
    pub fn segment_word(&self, word: &str) -> Option<Vec<String>> {
        let (score, segments) = self.best_split(word)?;
        match self.log_prob(word) {
            Some(whole) if whole >= score => None,
            _ => Some(segments),
        }
    }

    /// Best split into 2..=max_segments units, without letting the unsplit
    /// word compete.
    pub fn split_word(&self, word: &str) -> Option<Vec<String>> {
        self.best_split(word).map(|(_, s)| s)
    }

    /// Pieces the word is reduced to by applying learned merges in order.
    /// Unigram models return single characters.
    pub fn bpe_pieces(&self, word: &str) -> Vec<String> {
        let mut symbols: Vec<String> = word.chars().map(String::from).collect();
        if self.merges.is_empty() {
            return symbols;
        }
        let rank: HashMap<(&str, &str), usize> = self
            .merges
            .iter()
            .enumerate()
            .map(|(i, (a, b))| ((a.as_str(), b.as_str()), i))
            .collect();
        loop {
            let best = symbols
                .windows(2)
                .enumerate()
                .filter_map(|(i, p)| rank.get(&(p[0].as_str(), p[1].as_str())).map(|r| (*r, i)))
                .min();
            let Some((_, i)) = best else { break };
            let right = symbols.remove(i + 1);
            symbols[i].push_str(&right);
        }
        symbols
    }

    /// Byte offsets where a split may occur, excluding 0 and the end.
    fn cut_points(&self, word: &str) -> Vec<usize> {
        match self.method {
            SegMethod::UnigramViterbi => word.char_indices().map(|(i, _)| i).skip(1).collect(),
            SegMethod::BytePairMerge => {
                let mut off = 0;
                let pieces = self.bpe_pieces(word);
                let n = pieces.len();
                pieces
                    .into_iter()
                    .take(n.saturating_sub(1))
                    .map(|p| {
                        off += p.len();
                        off
                    })
                    .collect()
            }
        }
    }

    fn best_split(&self, word: &str) -> Option<(f64, Vec<String>)> {
        let cuts = self.cut_points(word);
        let mut best: Option<(f64, Vec<String>)> = None;
        let mut path = Vec::new();
        self.search(word, 0, &cuts, 0.0, &mut path, &mut best);
        best
    }

    fn search<'w>(
        &self,
        word: &'w str,
        start: usize,
        cuts: &[usize],
        score: f64,
        path: &mut Vec<&'w str>,
        best: &mut Option<(f64, Vec<String>)>,
    ) {
        let remaining = self.max_segments - path.len();
        if remaining == 0 {
            return;
        }
        // close the split with the rest of the word
        if !path.is_empty() {
            let tail = &word[start..];
            if let Some(lp) = self.log_prob(tail) {
                path.push(tail);
                let total = score + lp;
                if better(total, path, best.as_ref()) {
                    *best = Some((total, path.iter().map(|s| s.to_string()).collect()));
                }
                path.pop();
            }
        }
        if remaining < 2 {
            return;
        }
        for &end in cuts.iter().filter(|&&c| c > start) {
            let piece = &word[start..end];
            if let Some(lp) = self.log_prob(piece) {
                path.push(piece);
                self.search(word, end, cuts, score + lp, path, best);
                path.pop();
            }
        }
    }
}

/// Higher score wins; ties go to fewer segments, then to the smaller
/// segment list.
fn better(score: f64, path: &[&str], best: Option<&(f64, Vec<String>)>) -> bool {
    let Some((bs, bp)) = best else { return true };
    match score.total_cmp(bs) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => match path.len().cmp(&bp.len()) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => path.iter().copied().lt(bp.iter().map(String::as_str)),
        },
    }
}
