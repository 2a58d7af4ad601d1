//! Word-level Levenshtein alignment and WER / WERR arithmetic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;

#[derive(Debug, Error, PartialEq)]
pub enum WerError {
    #[error("WER is undefined: the corpus has no reference words")]
    EmptyReference,
    #[error("WERR is undefined for a base WER of {0}")]
    ZeroBase(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum EditOp {
    Match {
        reference: String,
        hypothesis: String,
    },
    Sub {
        reference: String,
        hypothesis: String,
    },
    Del {
        reference: String,
    },
    Ins {
        hypothesis: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub matches: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_len: usize,
    pub ops: Vec<EditOp>,
}

impl AlignmentResult {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    pub fn hyp_len(&self) -> usize {
        self.matches + self.substitutions + self.insertions
    }
}

/// Exact string equality, the default word comparison.
pub fn exact(a: &str, b: &str) -> bool {
    a == b
}

/// Minimum-edit alignment with unit costs.
///
/// Backtracking prefers match, then substitution, then deletion, then
/// insertion, so the returned script is stable for a given input.
pub fn align<R, H, F>(reference: &[R], hypothesis: &[H], equal: F) -> AlignmentResult
where
    R: AsRef<str>,
    H: AsRef<str>,
    F: Fn(&str, &str) -> bool,
{
    let n = reference.len();
    let m = hypothesis.len();
    let width = m + 1;
    let mut cost = vec![0usize; (n + 1) * width];
    for (j, c) in cost.iter_mut().take(width).enumerate() {
        *c = j;
    }
    for i in 1..=n {
        cost[i * width] = i;
        for j in 1..=m {
            let same = equal(reference[i - 1].as_ref(), hypothesis[j - 1].as_ref());
            let diag = cost[(i - 1) * width + j - 1] + usize::from(!same);
            let del = cost[(i - 1) * width + j] + 1;
            let ins = cost[i * width + j - 1] + 1;
            cost[i * width + j] = diag.min(del).min(ins);
        }
    }

    let mut out = AlignmentResult {
        ref_len: n,
        ..Default::default()
    };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost[i * width + j];
        if i > 0 && j > 0 {
            let r = reference[i - 1].as_ref();
            let h = hypothesis[j - 1].as_ref();
            let same = equal(r, h);
            let prev = cost[(i - 1) * width + j - 1];
            if same && here == prev {
                out.matches += 1;
                out.ops.push(EditOp::Match {
                    reference: r.to_owned(),
                    hypothesis: h.to_owned(),
                });
                i -= 1;
                j -= 1;
                continue;
            }
            if !same && here == prev + 1 {
                out.substitutions += 1;
                out.ops.push(EditOp::Sub {
                    reference: r.to_owned(),
                    hypothesis: h.to_owned(),
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == cost[(i - 1) * width + j] + 1 {
            out.deletions += 1;
            out.ops.push(EditOp::Del {
                reference: reference[i - 1].as_ref().to_owned(),
            });
            i -= 1;
        } else {
            out.insertions += 1;
            out.ops.push(EditOp::Ins {
                hypothesis: hypothesis[j - 1].as_ref().to_owned(),
            });
            j -= 1;
        }
    }
    out.ops.reverse();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WerScore {
    pub errors: usize,
    pub ref_len: usize,
    /// Percentage, `errors / ref_len * 100`.
    pub wer: f64,
}

/// Corpus-level WER: errors and reference lengths are summed over all
/// utterances before dividing.
pub fn wer<F>(corpus: &Corpus, equal: F) -> Result<WerScore, WerError>
where
    F: Fn(&str, &str) -> bool + Sync,
{
    use rayon::prelude::*;

    let (errors, ref_len) = corpus
        .utterances
        .par_iter()
        .map(|u| {
            let a = align(&u.reference, &u.hypothesis, &equal);
            (a.errors(), a.ref_len)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    if ref_len == 0 {
        return Err(WerError::EmptyReference);
    }
    Ok(WerScore {
        errors,
        ref_len,
        wer: errors as f64 / ref_len as f64 * 100.0,
    })
}

/// Relative WER reduction in percent; positive when `norm_wer` is lower.
pub fn werr(base_wer: f64, norm_wer: f64) -> Result<f64, WerError> {
    if base_wer <= 0.0 || !base_wer.is_finite() {
        return Err(WerError::ZeroBase(base_wer));
    }
    Ok((base_wer - norm_wer) / base_wer * 100.0)
}
