//! Unsupervised, language-agnostic standardization of ASR references and
//! hypotheses prior to WER scoring.
//!
//! Two miners find interchangeable surface forms in an evaluation corpus:
//!
//! - [`spell`] groups spelling variants whose pronunciation, transliteration
//!   and translation agree, then rewrites each group to one display form.
//! - [`seg`] splits words with a subword segmenter, keeps splits whose
//!   pronunciation and translation survive the split, and joins the split
//!   ngrams back into compounds.
//!
//! [`pipeline`] runs them (alone or cascaded) and reports base WER,
//! normalized WER and relative WER reduction.

pub mod corpus;
pub mod disjoint;
pub mod evidence;
pub mod pipeline;
pub mod review;
pub mod seg;
pub mod spell;
pub mod wer;
