//! Segmentation normalization: mine (compound, ngram) pairs and join split
//! ngrams back into their compound form.
//!
//! Mining segments every distinct word with a [`SegmenterModel`], then
//! keeps a split only if the compound's pronunciation equals the
//! concatenated pronunciations of its segments, its translation does not
//! contradict the translation of the spaced ngram, and the configured
//! [`RuleSet`] passes.

mod rules;
mod segmenter;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub use rules::{ForbiddenInitial, RuleSet};
pub use segmenter::{train_segmenter, SegMethod, SegmenterModel, SegmenterParams};

use crate::corpus::{extract_vocabulary, Corpus, VocabSource};
use crate::evidence::{Evidence, PhoneSequence};
use crate::review::{self, ReviewDecision, ReviewError};
use crate::spell::UnigramTable;

/// Upper bound on passes of [`SegPairTable::apply`] before giving up.
pub const MAX_APPLY_PASSES: usize = 5;

/// Upper bound on segment pronunciation combinations tried per split.
const MAX_PRON_COMBINATIONS: usize = 256;

#[derive(Debug, Error)]
pub enum SegError {
    #[error("cannot train a segmenter on an empty vocabulary")]
    EmptyVocabulary,
    #[error("max_segments must be at least 2, got {0}")]
    MaxSegments(usize),
    #[error("forbidden-initial rule file line {line}: {reason}")]
    RuleFile { line: usize, reason: String },
    #[error("ngram replacement did not reach a fixpoint in {MAX_APPLY_PASSES} passes; still matching: {}", format_pairs(.0))]
    NoFixpoint(Vec<(Vec<String>, String)>),
    #[error(transparent)]
    Review(#[from] ReviewError),
}

fn format_pairs(pairs: &[(Vec<String>, String)]) -> String {
    pairs
        .iter()
        .map(|(k, c)| format!("[{}] -> {c}", k.join(" ")))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckOutcome {
    Pass,
    Fail,
    Unavailable,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckOutcome::Pass => "pass",
            CheckOutcome::Fail => "fail",
            CheckOutcome::Unavailable => "unavailable",
        })
    }
}

impl FromStr for CheckOutcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "pass" => Ok(CheckOutcome::Pass),
            "fail" => Ok(CheckOutcome::Fail),
            "unavailable" => Ok(CheckOutcome::Unavailable),
            other => Err(format!("unknown check outcome {other:?}")),
        }
    }
}

/// Which validation outcomes a split needs in order to be kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegPolicy {
    /// Pronunciation must pass. When false it must merely not fail.
    pub require_pronunciation: bool,
    /// Translation must pass. When false it must merely not fail.
    pub require_translation: bool,
}

impl Default for SegPolicy {
    fn default() -> Self {
        Self {
            require_pronunciation: true,
            require_translation: false,
        }
    }
}

impl SegPolicy {
    pub fn accepts(&self, pron: CheckOutcome, trans: CheckOutcome, rules: bool) -> bool {
        let ok = |outcome: CheckOutcome, required: bool| match outcome {
            CheckOutcome::Pass => true,
            CheckOutcome::Fail => false,
            CheckOutcome::Unavailable => !required,
        };
        rules && ok(pron, self.require_pronunciation) && ok(trans, self.require_translation)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegPair {
    pub compound: String,
    pub segments: Vec<String>,
    pub pronunciation: CheckOutcome,
    pub translation: CheckOutcome,
    pub rules: bool,
    pub accepted: bool,
}

fn pronunciation_check(compound: &str, segments: &[String], evidence: &Evidence) -> CheckOutcome {
    let whole = evidence.relaxed_pronunciations(compound);
    if whole.is_empty() {
        return CheckOutcome::Unavailable;
    }
    let mut joined: Vec<PhoneSequence> = vec![PhoneSequence::default()];
    for seg in segments {
        let prons = evidence.relaxed_pronunciations(seg);
        if prons.is_empty() {
            return CheckOutcome::Unavailable;
        }
        let mut next = Vec::new();
        'outer: for prefix in &joined {
            for p in &prons {
                next.push(PhoneSequence::concat([prefix, p]));
                if next.len() >= MAX_PRON_COMBINATIONS {
                    break 'outer;
                }
            }
        }
        joined = next;
    }
    if joined.iter().any(|j| whole.contains(j)) {
        CheckOutcome::Pass
    } else {
        CheckOutcome::Fail
    }
}

fn translation_check(compound: &str, segments: &[String], evidence: &Evidence) -> CheckOutcome {
    let phrase = segments.join(" ");
    match (evidence.translate(compound), evidence.translate(&phrase)) {
        (Some(a), Some(b)) if a == b => CheckOutcome::Pass,
        (Some(_), Some(_)) => CheckOutcome::Fail,
        _ => CheckOutcome::Unavailable,
    }
}

/// Runs every validation on one candidate split. A split whose segments do
/// not concatenate to the compound fails the rule check.
pub fn validate_split(
    compound: &str,
    segments: &[String],
    evidence: &Evidence,
    rules: &RuleSet,
    policy: &SegPolicy,
) -> SegPair {
    let well_formed = segments.len() >= 2 && segments.concat() == compound;
    let pronunciation = pronunciation_check(compound, segments, evidence);
    let translation = translation_check(compound, segments, evidence);
    let rules_ok = well_formed && rules.check(segments);
    SegPair {
        compound: compound.to_owned(),
        segments: segments.to_vec(),
        pronunciation,
        translation,
        rules: rules_ok,
        accepted: policy.accepts(pronunciation, translation, rules_ok),
    }
}

/// Ngram → compound replacement table.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegPairTable {
    pairs: BTreeMap<Vec<String>, String>,
    max_len: usize,
}

impl SegPairTable {
    /// Builds a table from accepted pairs. When two compounds claim the
    /// same ngram, the one with the higher unigram weight wins, then the
    /// smaller by code point.
    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = &'a SegPair>,
        unigrams: &UnigramTable,
    ) -> Self {
        let mut by_key: BTreeMap<Vec<String>, BTreeSet<String>> = BTreeMap::new();
        for p in pairs {
            if p.segments.len() >= 2 {
                by_key
                    .entry(p.segments.clone())
                    .or_default()
                    .insert(p.compound.clone());
            }
        }
        let mut table = SegPairTable::default();
        for (key, compounds) in by_key {
            let winner = compounds
                .iter()
                .max_by(|x, y| {
                    unigrams
                        .weight(x)
                        .total_cmp(&unigrams.weight(y))
                        .then_with(|| y.cmp(x))
                })
                .cloned()
                .expect("non-empty");
            if compounds.len() > 1 {
                log::warn!(
                    "ngram [{}] claimed by {:?}; keeping {winner}",
                    key.join(" "),
                    compounds
                );
            }
            table.insert(key, winner);
        }
        table
    }

    fn insert(&mut self, key: Vec<String>, compound: String) {
        self.max_len = self.max_len.max(key.len());
        self.pairs.insert(key, compound);
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, ngram: &[String]) -> Option<&str> {
        self.pairs.get(ngram).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[String], &str)> {
        self.pairs.iter().map(|(k, v)| (k.as_slice(), v.as_str()))
    }

    /// One left-to-right longest-match pass; returns the replacements made.
    fn pass(&self, tokens: &[String], out: &mut Vec<String>) -> usize {
        out.clear();
        let mut replaced = 0;
        let mut i = 0;
        while i < tokens.len() {
            let longest = self.max_len.min(tokens.len() - i);
            let hit = (2..=longest)
                .rev()
                .find_map(|n| self.pairs.get(&tokens[i..i + n]).map(|c| (n, c)));
            match hit {
                Some((n, compound)) => {
                    out.push(compound.clone());
                    replaced += 1;
                    i += n;
                }
                None => {
                    out.push(tokens[i].clone());
                    i += 1;
                }
            }
        }
        replaced
    }

    /// Ngram occurrences still present in `tokens`.
    fn occurrences(&self, tokens: &[String]) -> Vec<(Vec<String>, String)> {
        let mut found = BTreeMap::new();
        for i in 0..tokens.len() {
            for n in 2..=self.max_len.min(tokens.len() - i) {
                if let Some(c) = self.pairs.get(&tokens[i..i + n]) {
                    found.insert(tokens[i..i + n].to_vec(), c.clone());
                }
            }
        }
        found.into_iter().collect()
    }

    /// Replaces ngrams until none remain. Returns the rewritten tokens and
    /// the total number of replacements.
    pub fn apply_counted(&self, tokens: &[String]) -> Result<(Vec<String>, usize), SegError> {
        if self.pairs.is_empty() {
            return Ok((tokens.to_vec(), 0));
        }
        let mut current = tokens.to_vec();
        let mut next = Vec::with_capacity(tokens.len());
        let mut total = 0;
        for _ in 0..MAX_APPLY_PASSES {
            let n = self.pass(&current, &mut next);
            if n == 0 {
                return Ok((current, total));
            }
            total += n;
            std::mem::swap(&mut current, &mut next);
        }
        let left = self.occurrences(&current);
        if left.is_empty() {
            Ok((current, total))
        } else {
            Err(SegError::NoFixpoint(left))
        }
    }

    pub fn apply(&self, tokens: &[String]) -> Result<Vec<String>, SegError> {
        self.apply_counted(tokens).map(|(t, _)| t)
    }
}

pub fn apply_seg_table(tokens: &[String], table: &SegPairTable) -> Result<Vec<String>, SegError> {
    table.apply(tokens)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SegMineOptions {
    /// Also segment words that only occur on the hypothesis side.
    pub include_hypothesis: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SegMining {
    /// Every validated split, sorted by compound.
    pub candidates: Vec<SegPair>,
    pub table: SegPairTable,
}

impl SegMining {
    pub fn accepted(&self) -> impl Iterator<Item = &SegPair> {
        self.candidates.iter().filter(|p| p.accepted)
    }
}

pub fn mine_seg_pairs(
    corpus: &Corpus,
    model: &SegmenterModel,
    evidence: &Evidence,
    rules: &RuleSet,
    policy: &SegPolicy,
    options: SegMineOptions,
) -> SegMining {
    let source = if options.include_hypothesis {
        VocabSource::Both
    } else {
        VocabSource::Reference
    };
    let vocab = extract_vocabulary(corpus, source);
    let splits: Vec<(&str, Vec<String>)> = vocab
        .words()
        .filter_map(|w| model.split_word(w).map(|s| (w, s)))
        .collect();

    evidence.prefetch(
        splits
            .iter()
            .flat_map(|(w, s)| std::iter::once(*w).chain(s.iter().map(String::as_str))),
    );
    let phrases: Vec<String> = splits.iter().map(|(_, s)| s.join(" ")).collect();
    evidence.prefetch(phrases.iter().map(String::as_str));

    let candidates: Vec<SegPair> = splits
        .par_iter()
        .map(|(w, s)| validate_split(w, s, evidence, rules, policy))
        .collect();
    let unigrams = UnigramTable::from_corpus(corpus);
    let table = SegPairTable::from_pairs(candidates.iter().filter(|p| p.accepted), &unigrams);
    SegMining { candidates, table }
}

pub const SEG_REVIEW_HEADER: &str =
    "compound\tsegments\tpron_outcome\ttrans_outcome\trules_outcome\taccepted";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReviewedSegPair {
    pub pair: SegPair,
    pub review: Option<ReviewDecision>,
}

impl ReviewedSegPair {
    pub fn included(&self) -> bool {
        review::included(self.pair.accepted, self.review)
    }
}

pub fn write_seg_review<'a>(
    pairs: impl IntoIterator<Item = &'a SegPair>,
    mut out: impl Write,
) -> io::Result<usize> {
    writeln!(out, "{SEG_REVIEW_HEADER}")?;
    let mut rows = 0;
    for p in pairs {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            p.compound,
            p.segments.join(" "),
            p.pronunciation,
            p.translation,
            if p.rules { "pass" } else { "fail" },
            p.accepted
        )?;
        rows += 1;
    }
    Ok(rows)
}

pub fn read_seg_review(reader: impl BufRead) -> Result<Vec<ReviewedSegPair>, ReviewError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() || (lineno == 1 && line.starts_with("compound\t")) {
            continue;
        }
        let (f, review) = review::split_fields(&line, 6, lineno)?;
        let check = |s: &str| -> Result<CheckOutcome, ReviewError> {
            s.parse().map_err(|e| ReviewError::malformed(lineno, e))
        };
        let compound: String = f[0].trim().nfc().collect();
        let segments: Vec<String> = f[1].split_whitespace().map(|s| s.nfc().collect()).collect();
        if segments.len() < 2 || segments.concat() != compound {
            return Err(ReviewError::malformed(
                lineno,
                format!("segments {:?} do not concatenate to {compound:?}", f[1]),
            ));
        }
        let rules = match f[4].trim() {
            "pass" => true,
            "fail" => false,
            other => {
                return Err(ReviewError::malformed(
                    lineno,
                    format!("rules outcome must be pass or fail, got {other:?}"),
                ))
            }
        };
        out.push(ReviewedSegPair {
            pair: SegPair {
                compound,
                segments,
                pronunciation: check(f[2])?,
                translation: check(f[3])?,
                rules,
                accepted: review::parse_bool(f[5], lineno)?,
            },
            review,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Utterance;
    use crate::evidence::{PivotDictionary, PronunciationLexicon};
    use proptest::prelude::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    fn fixture() -> Evidence {
        let lex = PronunciationLexicon::from_reader(
            "subscription\ts ah b s k r ih p sh ah n\nsubscript\ts ah b s k r ih p t\n\
             ion\tay ah n\nNehruji\tn ey r uw jh iy\nNehru\tn ey r uw\nji\tjh iy\n\
             ऑलवेज़\tao l w ey z\nऑल\tao l\nवेज़\tw ey z\n"
                .as_bytes(),
        )
        .unwrap();
        Evidence::new()
            .with_pronunciation(lex)
            .with_translation(PivotDictionary::from_pairs([
                ("ऑलवेज़", "always"),
                ("ऑल वेज़", "all ways"),
            ]))
    }

    #[test]
    fn subscription_fails_pronunciation() {
        let p = validate_split(
            "subscription",
            &s(&["subscript", "ion"]),
            &fixture(),
            &RuleSet::default(),
            &SegPolicy::default(),
        );
        assert_eq!(p.pronunciation, CheckOutcome::Fail);
        assert!(!p.accepted);
    }

    #[test]
    fn nehruji_passes() {
        let p = validate_split(
            "Nehruji",
            &s(&["Nehru", "ji"]),
            &fixture(),
            &RuleSet::default(),
            &SegPolicy::default(),
        );
        assert_eq!(p.pronunciation, CheckOutcome::Pass);
        assert_eq!(p.translation, CheckOutcome::Unavailable);
        assert!(p.rules);
        assert!(p.accepted);
    }

    #[test]
    fn always_fails_translation() {
        let p = validate_split(
            "ऑलवेज़",
            &s(&["ऑल", "वेज़"]),
            &fixture(),
            &RuleSet::default(),
            &SegPolicy::default(),
        );
        assert_eq!(p.pronunciation, CheckOutcome::Pass);
        assert_eq!(p.translation, CheckOutcome::Fail);
        assert!(!p.accepted);
    }

    #[test]
    fn rules_and_malformed_splits() {
        let ev = Evidence::new();
        let policy = SegPolicy {
            require_pronunciation: false,
            require_translation: false,
        };
        let p = validate_split("कमाल", &s(&["कम", "ाल"]), &ev, &RuleSet::default(), &policy);
        assert!(!p.rules && !p.accepted);
        let p = validate_split("abc", &s(&["ab", "x"]), &ev, &RuleSet::default(), &policy);
        assert!(!p.rules);
        let p = validate_split("abc", &s(&["ab", "c"]), &ev, &RuleSet::default(), &policy);
        assert!(p.accepted);
    }

    #[test]
    fn policy_combinations() {
        use CheckOutcome::*;
        let d = SegPolicy::default();
        assert!(d.accepts(Pass, Unavailable, true));
        assert!(!d.accepts(Unavailable, Pass, true));
        assert!(!d.accepts(Pass, Fail, true));
        assert!(!d.accepts(Pass, Pass, false));
        let strict = SegPolicy {
            require_translation: true,
            ..d
        };
        assert!(!strict.accepts(Pass, Unavailable, true));
    }

    #[test]
    fn multi_pronunciation_segments() {
        let lex =
            PronunciationLexicon::from_reader("ab\tx y\na\tq\na\tx\nb\ty\n".as_bytes()).unwrap();
        let ev = Evidence::new().with_pronunciation(lex);
        let p = validate_split(
            "ab",
            &s(&["a", "b"]),
            &ev,
            &RuleSet::default(),
            &SegPolicy::default(),
        );
        assert_eq!(p.pronunciation, CheckOutcome::Pass);
    }

    fn table(pairs: &[(&str, &[&str])]) -> SegPairTable {
        let pairs: Vec<SegPair> = pairs
            .iter()
            .map(|(c, segs)| SegPair {
                compound: c.to_string(),
                segments: s(segs),
                pronunciation: CheckOutcome::Pass,
                translation: CheckOutcome::Pass,
                rules: true,
                accepted: true,
            })
            .collect();
        SegPairTable::from_pairs(&pairs, &UnigramTable::default())
    }

    #[test]
    fn apply_joins_ngrams() {
        let t = table(&[("आईवडील", &["आई", "वडील"])]);
        assert_eq!(t.apply(&s(&["आई", "वडील"])).unwrap(), s(&["आईवडील"]));
        assert_eq!(
            SegPairTable::default().apply(&s(&["आई", "वडील"])).unwrap(),
            s(&["आई", "वडील"])
        );
    }

    #[test]
    fn longest_match_wins() {
        let t = table(&[("ab", &["a", "b"]), ("abc", &["a", "b", "c"])]);
        assert_eq!(t.apply(&s(&["a", "b", "c"])).unwrap(), s(&["abc"]));
        assert_eq!(t.apply(&s(&["a", "b", "d"])).unwrap(), s(&["ab", "d"]));
    }

    #[test]
    fn chained_pairs_need_several_passes() {
        let t = table(&[("ab", &["a", "b"]), ("abc", &["ab", "c"])]);
        let (out, n) = t.apply_counted(&s(&["a", "b", "c"])).unwrap();
        assert_eq!(out, s(&["abc"]));
        assert_eq!(n, 2);
    }

    #[test]
    fn deep_chain_reports_no_fixpoint() {
        let words = ["a", "b", "c", "d", "e", "f", "g", "h"];
        let mut pairs = Vec::new();
        let mut acc = words[0].to_string();
        for w in &words[1..] {
            let compound = format!("{acc}{w}");
            pairs.push((compound.clone(), vec![acc.clone(), w.to_string()]));
            acc = compound;
        }
        let seg_pairs: Vec<SegPair> = pairs
            .iter()
            .map(|(c, segs)| SegPair {
                compound: c.clone(),
                segments: segs.clone(),
                pronunciation: CheckOutcome::Pass,
                translation: CheckOutcome::Pass,
                rules: true,
                accepted: true,
            })
            .collect();
        let t = SegPairTable::from_pairs(&seg_pairs, &UnigramTable::default());
        let err = t.apply(&s(&words)).unwrap_err();
        assert!(matches!(err, SegError::NoFixpoint(ref left) if !left.is_empty()));
        assert!(err.to_string().contains("abcdef"));
    }

    #[test]
    fn collisions_prefer_heavier_compound() {
        let mk = |c: &str| SegPair {
            compound: c.into(),
            segments: s(&["x", "y"]),
            pronunciation: CheckOutcome::Pass,
            translation: CheckOutcome::Pass,
            rules: true,
            accepted: true,
        };
        let pairs = vec![mk("xy"), mk("x‌y")];
        let w = UnigramTable::from_weights([("x‌y", 3.0), ("xy", 1.0)]);
        let t = SegPairTable::from_pairs(&pairs, &w);
        assert_eq!(t.get(&s(&["x", "y"])), Some("x‌y"));
        let t = SegPairTable::from_pairs(&pairs, &UnigramTable::default());
        assert_eq!(t.get(&s(&["x", "y"])), Some("xy"));
    }

    #[test]
    fn mining_finds_compound() {
        let corpus = Corpus::new(
            "mr",
            vec![
                Utterance::from_text("1", "आईवडील घरी आहेत", "आई वडील घरी आहेत"),
                Utterance::from_text("2", "आई आली", "आई आली"),
                Utterance::from_text("3", "वडील गेले", "वडील गेले"),
            ],
        )
        .unwrap();
        let lex = PronunciationLexicon::from_reader(
            "आईवडील\taa ii w a d ii l\nआई\taa ii\nवडील\tw a d ii l\n".as_bytes(),
        )
        .unwrap();
        let ev = Evidence::new().with_pronunciation(lex);
        let vocab = extract_vocabulary(&corpus, VocabSource::Both);
        let model = train_segmenter(&vocab, SegMethod::UnigramViterbi, Default::default()).unwrap();
        let mined = mine_seg_pairs(
            &corpus,
            &model,
            &ev,
            &RuleSet::default(),
            &SegPolicy::default(),
            SegMineOptions::default(),
        );
        assert_eq!(mined.table.len(), 1);
        assert_eq!(mined.table.get(&s(&["आई", "वडील"])), Some("आईवडील"));

        let plain = Corpus::new("mr", vec![Utterance::from_text("1", "घरी आहेत", "घरी")]).unwrap();
        let model = train_segmenter(
            &extract_vocabulary(&plain, VocabSource::Both),
            SegMethod::UnigramViterbi,
            Default::default(),
        )
        .unwrap();
        let mined = mine_seg_pairs(
            &plain,
            &model,
            &ev,
            &RuleSet::default(),
            &SegPolicy::default(),
            SegMineOptions::default(),
        );
        assert!(mined.table.is_empty());
    }

    #[test]
    fn review_file_round_trip() {
        let ev = fixture();
        let pairs = vec![
            validate_split(
                "Nehruji",
                &s(&["Nehru", "ji"]),
                &ev,
                &RuleSet::default(),
                &SegPolicy::default(),
            ),
            validate_split(
                "ऑलवेज़",
                &s(&["ऑल", "वेज़"]),
                &ev,
                &RuleSet::default(),
                &SegPolicy::default(),
            ),
        ];
        let mut buf = Vec::new();
        write_seg_review(&pairs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(SEG_REVIEW_HEADER));
        assert!(text.contains("Nehruji\tNehru ji\tpass\tunavailable\tpass\ttrue"));
        let back = read_seg_review(text.as_bytes()).unwrap();
        assert_eq!(
            back.iter().map(|r| r.pair.clone()).collect::<Vec<_>>(),
            pairs
        );

        let edited = text.replacen("\ttrue\n", "\ttrue\treject\n", 1);
        let back = read_seg_review(edited.as_bytes()).unwrap();
        assert!(!back[0].included());
        assert!(read_seg_review("ab\ta c\tpass\tpass\tpass\ttrue\n".as_bytes()).is_err());
    }

    fn arb_table() -> impl Strategy<Value = SegPairTable> {
        prop::collection::vec(prop::collection::vec("[a-d]", 2..=3), 0..6).prop_map(|keys| {
            let pairs: Vec<SegPair> = keys
                .into_iter()
                .map(|k| SegPair {
                    compound: k.concat(),
                    segments: k,
                    pronunciation: CheckOutcome::Pass,
                    translation: CheckOutcome::Pass,
                    rules: true,
                    accepted: true,
                })
                .collect();
            SegPairTable::from_pairs(&pairs, &UnigramTable::default())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn replacement_reaches_clean_fixpoint(
            t in arb_table(),
            tokens in prop::collection::vec("[a-e]", 0..12),
        ) {
            match t.apply(&tokens) {
                Ok(out) => {
                    prop_assert!(t.occurrences(&out).is_empty());
                    prop_assert_eq!(t.apply(&out).unwrap(), out.clone());
                    prop_assert_eq!(out.concat(), tokens.concat());
                }
                Err(SegError::NoFixpoint(_)) => {}
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }

        #[test]
        fn table_order_does_not_matter(
            keys in prop::collection::vec(prop::collection::vec("[a-d]", 2..=3), 0..6),
            tokens in prop::collection::vec("[a-e]", 0..12),
        ) {
            let mk = |keys: &[Vec<String>]| -> Vec<SegPair> {
                keys.iter().map(|k| SegPair {
                    compound: k.concat(),
                    segments: k.clone(),
                    pronunciation: CheckOutcome::Pass,
                    translation: CheckOutcome::Pass,
                    rules: true,
                    accepted: true,
                }).collect()
            };
            let forward = SegPairTable::from_pairs(&mk(&keys), &UnigramTable::default());
            let mut rev = keys.clone();
            rev.reverse();
            let backward = SegPairTable::from_pairs(&mk(&rev), &UnigramTable::default());
            prop_assert_eq!(&forward, &backward);
            prop_assert_eq!(forward.apply(&tokens).ok(), backward.apply(&tokens).ok());
        }
    }
}
