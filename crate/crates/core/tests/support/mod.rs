//! Synthetic 200-utterance corpus with planted spelling variants, compounds
//! and look-alike traps, plus the files the pipeline needs to mine them.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use wernorm::corpus::{Corpus, Utterance};

const CONSONANTS: [char; 12] = ['b', 'd', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't', 'v'];
const VOWELS: [char; 5] = ['a', 'e', 'i', 'o', 'u'];

pub const VARIANT_CLASSES: usize = 30;
pub const COMPOUNDS: usize = 20;
pub const HOMOPHONE_TRAPS: usize = 3;
pub const FALSE_FRIEND_TRAPS: usize = 3;
pub const SYNONYM_TRAPS: usize = 2;
pub const SPLIT_TRAPS: usize = 2;
pub const UTTERANCES: usize = 200;

pub struct Fixture {
    pub corpus: Corpus,
    /// (canonical spelling, variant spelling)
    pub variants: Vec<(String, String)>,
    /// (compound, [left, right])
    pub compounds: Vec<(String, [String; 2])>,
    /// Word pairs sharing some but not all evidence.
    pub traps: Vec<(String, String)>,
    /// Words that split into vocabulary units but do not sound like them.
    pub split_traps: Vec<(String, [String; 2])>,
    lexicon: BTreeMap<String, String>,
    translit: BTreeMap<String, String>,
    trans: BTreeMap<String, String>,
}

fn word(n: usize) -> String {
    let c = CONSONANTS.len();
    let v = VOWELS.len();
    let (a, n) = (n % c, n / c);
    let (b, n) = (n % v, n / v);
    let (d, n) = (n % c, n / c);
    let e = n % v;
    [CONSONANTS[a], VOWELS[b], CONSONANTS[d], VOWELS[e]]
        .iter()
        .collect()
}

fn phones(w: &str) -> String {
    w.chars().map(String::from).collect::<Vec<_>>().join(" ")
}

/// Stretches the final vowel: "kala" becomes "kalaa" with final phone "a:".
fn lengthen(w: &str) -> (String, String) {
    let last = w.chars().last().unwrap();
    let spelled = format!("{w}{last}");
    let mut ph: Vec<String> = w.chars().map(String::from).collect();
    let tail = ph.last_mut().unwrap();
    tail.push(':');
    (spelled, ph.join(" "))
}

impl Fixture {
    pub fn build() -> Self {
        let mut next = 0usize;
        let mut fresh = || {
            // stride co-prime with 3600 spreads words over the alphabet
            next += 1;
            word((next * 7919) % 3600)
        };

        let mut lexicon = BTreeMap::new();
        let mut translit = BTreeMap::new();
        let mut trans = BTreeMap::new();
        let plain = |w: &str,
                     lex: &mut BTreeMap<String, String>,
                     tl: &mut BTreeMap<String, String>,
                     tr: &mut BTreeMap<String, String>| {
            lex.insert(w.to_owned(), phones(w));
            tl.insert(w.to_owned(), w.to_owned());
            tr.insert(w.to_owned(), format!("gloss {w}"));
        };

        let mut variants = Vec::new();
        for _ in 0..VARIANT_CLASSES {
            let canon = fresh();
            plain(&canon, &mut lexicon, &mut translit, &mut trans);
            let (variant, ph) = lengthen(&canon);
            lexicon.insert(variant.clone(), ph);
            translit.insert(variant.clone(), canon.clone());
            trans.insert(variant.clone(), format!("gloss {canon}"));
            variants.push((canon, variant));
        }

        let mut compounds = Vec::new();
        for _ in 0..COMPOUNDS {
            let left = fresh();
            let right = fresh();
            plain(&left, &mut lexicon, &mut translit, &mut trans);
            plain(&right, &mut lexicon, &mut translit, &mut trans);
            let compound = format!("{left}{right}");
            lexicon.insert(compound.clone(), phones(&compound));
            translit.insert(compound.clone(), compound.clone());
            let gloss = format!("gloss {compound}");
            trans.insert(compound.clone(), gloss.clone());
            trans.insert(format!("{left} {right}"), gloss);
            compounds.push((compound, [left, right]));
        }

        let mut traps = Vec::new();
        for _ in 0..HOMOPHONE_TRAPS {
            // same sound and romanization, different meaning
            let a = fresh();
            let b = format!("{a}h");
            plain(&a, &mut lexicon, &mut translit, &mut trans);
            lexicon.insert(b.clone(), phones(&a));
            translit.insert(b.clone(), a.clone());
            trans.insert(b.clone(), format!("gloss {b}"));
            traps.push((a, b));
        }
        for _ in 0..FALSE_FRIEND_TRAPS {
            // same romanization, different sound and meaning
            let a = fresh();
            let b = fresh();
            plain(&a, &mut lexicon, &mut translit, &mut trans);
            plain(&b, &mut lexicon, &mut translit, &mut trans);
            translit.insert(b.clone(), a.clone());
            traps.push((a, b));
        }
        for _ in 0..SYNONYM_TRAPS {
            // same meaning, unrelated form
            let a = fresh();
            let b = fresh();
            plain(&a, &mut lexicon, &mut translit, &mut trans);
            plain(&b, &mut lexicon, &mut translit, &mut trans);
            trans.insert(b.clone(), format!("gloss {a}"));
            traps.push((a, b));
        }

        let mut split_traps = Vec::new();
        for _ in 0..SPLIT_TRAPS {
            let left = fresh();
            let right = fresh();
            plain(&left, &mut lexicon, &mut translit, &mut trans);
            plain(&right, &mut lexicon, &mut translit, &mut trans);
            let whole = format!("{left}{right}");
            lexicon.insert(whole.clone(), format!("{} x", phones(&whole)));
            translit.insert(whole.clone(), whole.clone());
            trans.insert(whole.clone(), format!("gloss {whole}"));
            split_traps.push((whole, [left, right]));
        }

        let fillers: Vec<String> = (0..60).map(|_| fresh()).collect();
        for f in &fillers {
            plain(f, &mut lexicon, &mut translit, &mut trans);
        }

        let mut utterances = Vec::with_capacity(UTTERANCES);
        for i in 0..UTTERANCES {
            let filler = |k: usize| fillers[(i * 7 + k * 13) % fillers.len()].clone();
            let mut r: Vec<String> = (0..5).map(filler).collect();
            let mut h = r.clone();
            match i {
                0..=59 => {
                    let (canon, var) = &variants[i % VARIANT_CLASSES];
                    let (rw, hw) = if i < 30 { (canon, var) } else { (var, canon) };
                    r.insert(2, rw.clone());
                    h.insert(2, hw.clone());
                }
                60..=99 => {
                    let (compound, [left, right]) = &compounds[i % COMPOUNDS];
                    r.insert(1, compound.clone());
                    h.insert(1, left.clone());
                    h.insert(2, right.clone());
                }
                100..=119 => {
                    let (a, b) = &traps[i % traps.len()];
                    r.insert(3, a.clone());
                    h.insert(3, b.clone());
                }
                120..=129 => {
                    h[1] = fillers[(i + 31) % fillers.len()].clone();
                }
                130..=139 => {
                    h.remove(4);
                }
                140..=149 => {
                    h.insert(0, fillers[(i + 5) % fillers.len()].clone());
                }
                150..=169 => {
                    // variant, compound and a genuine substitution together
                    let (canon, var) = &variants[i % VARIANT_CLASSES];
                    let (compound, [left, right]) = &compounds[i % COMPOUNDS];
                    r.push(canon.clone());
                    h.push(var.clone());
                    r.insert(0, compound.clone());
                    h.insert(0, left.clone());
                    h.insert(1, right.clone());
                    h[3] = fillers[(i + 17) % fillers.len()].clone();
                }
                170..=179 => {
                    let (whole, [left, right]) = &split_traps[i % SPLIT_TRAPS];
                    r.insert(2, whole.clone());
                    h.insert(2, left.clone());
                    h.insert(3, right.clone());
                }
                _ => {}
            }
            utterances.push(Utterance::new(format!("utt{i:03}"), r, h));
        }
        let corpus = Corpus::new("syn", utterances).expect("unique ids");

        Self {
            corpus,
            variants,
            compounds,
            traps,
            split_traps,
            lexicon,
            translit,
            trans,
        }
    }

    pub fn true_spell_pairs(&self) -> BTreeSet<(String, String)> {
        self.variants
            .iter()
            .map(|(a, b)| {
                if a < b {
                    (a.clone(), b.clone())
                } else {
                    (b.clone(), a.clone())
                }
            })
            .collect()
    }

    pub fn true_seg_pairs(&self) -> BTreeSet<(String, Vec<String>)> {
        self.compounds
            .iter()
            .map(|(c, s)| (c.clone(), s.to_vec()))
            .collect()
    }

    pub fn write_files(&self, dir: &Path) -> FixtureFiles {
        let dump = |name: &str, map: &BTreeMap<String, String>| {
            let mut s = String::new();
            for (k, v) in map {
                let _ = writeln!(s, "{k}\t{v}");
            }
            let p = dir.join(name);
            fs::write(&p, s).unwrap();
            p
        };
        let corpus = dir.join("corpus.tsv");
        let mut buf = Vec::new();
        self.corpus.write_tsv(&mut buf).unwrap();
        fs::write(&corpus, buf).unwrap();
        let relax = dir.join("relax.txt");
        let mut r = String::from("# long vowels\n");
        for v in VOWELS {
            let _ = writeln!(r, "{v} {v}:");
        }
        fs::write(&relax, r).unwrap();
        FixtureFiles {
            corpus,
            lexicon: dump("lexicon.tsv", &self.lexicon),
            translit: dump("translit.tsv", &self.translit),
            trans: dump("trans.tsv", &self.trans),
            relax,
        }
    }

    /// Hand-applied ground truth: join every planted split back into its
    /// compound.
    pub fn oracle_seg(&self, tokens: &[String]) -> Vec<String> {
        let joins: BTreeMap<(&str, &str), &str> = self
            .compounds
            .iter()
            .map(|(c, [l, r])| ((l.as_str(), r.as_str()), c.as_str()))
            .collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            if i + 1 < tokens.len() {
                if let Some(c) = joins.get(&(tokens[i].as_str(), tokens[i + 1].as_str())) {
                    out.push(c.to_string());
                    i += 2;
                    continue;
                }
            }
            out.push(tokens[i].clone());
            i += 1;
        }
        out
    }

    /// Hand-applied ground truth: every variant spelled as its canonical.
    pub fn oracle_spell(&self, tokens: &[String]) -> Vec<String> {
        let to: BTreeMap<&str, &str> = self
            .variants
            .iter()
            .map(|(c, v)| (v.as_str(), c.as_str()))
            .collect();
        tokens
            .iter()
            .map(|t| {
                to.get(t.as_str())
                    .map_or_else(|| t.clone(), |c| c.to_string())
            })
            .collect()
    }
}

pub struct FixtureFiles {
    pub corpus: PathBuf,
    pub lexicon: PathBuf,
    pub translit: PathBuf,
    pub trans: PathBuf,
    pub relax: PathBuf,
}

/// Plain Levenshtein distance over tokens.
pub fn edit_distance(a: &[String], b: &[String]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(x != y))
                .min(prev[j + 1] + 1)
                .min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Corpus WER in percent after applying `f` to both sides.
pub fn oracle_wer(corpus: &Corpus, f: impl Fn(&[String]) -> Vec<String>) -> f64 {
    let (mut errors, mut len) = (0usize, 0usize);
    for u in &corpus.utterances {
        let r = f(&u.reference);
        let h = f(&u.hypothesis);
        errors += edit_distance(&r, &h);
        len += r.len();
    }
    errors as f64 / len as f64 * 100.0
}
