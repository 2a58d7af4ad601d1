//! End-to-end evaluation: base WER, spelling and segmentation
//! normalization (alone or cascaded), reports and review exports.

mod report;

use std::fmt;
use std::fs;
use std::io::{self, BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use report::{
    render_summary, render_table, summarize, summarize_werrs, EvaluationReport, PairCounts, Summary,
};

use crate::corpus::{
    extract_vocabulary, load_corpus, Corpus, CorpusError, CorpusFormat, Tokenizer, VocabSource,
};
use crate::evidence::{
    Evidence, EvidenceError, GraphemeRules, PivotDictionary, PivotTask, PronunciationLexicon,
    RelaxationTable, RemoteConfig, RemotePivotProvider,
};
use crate::review::ReviewError;
use crate::seg::{
    mine_seg_pairs, read_seg_review, train_segmenter, write_seg_review, ForbiddenInitial, RuleSet,
    SegError, SegMethod, SegMineOptions, SegPair, SegPairTable, SegPolicy, SegmenterParams,
};
use crate::spell::{
    build_spell_map, build_unigram_table, mine_spell_pairs, read_spell_review, write_spell_review,
    AggregationPolicy, SpellError, SpellMap, UnigramTable, VariantVerdict,
};
use crate::wer::{exact, wer, WerError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("loading corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("the corpus has no utterances")]
    EmptyCorpus,
    #[error("loading providers: {0}")]
    Evidence(#[from] EvidenceError),
    #[error("spelling normalization: {0}")]
    Spell(#[from] SpellError),
    #[error("{stage}: {source}")]
    Seg {
        stage: &'static str,
        #[source]
        source: SegError,
    },
    #[error("{stage}: {source}")]
    Wer {
        stage: &'static str,
        #[source]
        source: WerError,
    },
    #[error("{}: {source}", path.display())]
    Review {
        path: PathBuf,
        #[source]
        source: ReviewError,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_owned(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationOrder {
    SpellOnly,
    SegOnly,
    #[default]
    SegThenSpell,
}

impl NormalizationOrder {
    pub fn runs_spell(self) -> bool {
        matches!(self, Self::SpellOnly | Self::SegThenSpell)
    }

    pub fn runs_seg(self) -> bool {
        matches!(self, Self::SegOnly | Self::SegThenSpell)
    }
}

impl FromStr for NormalizationOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spell-only" => Ok(Self::SpellOnly),
            "seg-only" => Ok(Self::SegOnly),
            "seg-then-spell" => Ok(Self::SegThenSpell),
            other => Err(format!(
                "unknown order {other:?} (expected spell-only, seg-only or seg-then-spell)"
            )),
        }
    }
}

impl fmt::Display for NormalizationOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SpellOnly => "spell-only",
            Self::SegOnly => "seg-only",
            Self::SegThenSpell => "seg-then-spell",
        })
    }
}

/// In-memory knobs for [`evaluate`].
#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub order: NormalizationOrder,
    pub spell_policy: AggregationPolicy,
    pub seg_method: SegMethod,
    pub seg_params: SegmenterParams,
    pub seg_policy: SegPolicy,
    pub rules: RuleSet,
    pub seg_options: SegMineOptions,
    /// Rewrite class members to their canonical form. When false, spell
    /// classes are used as an alignment equality instead.
    pub canonicalize: bool,
    /// Overrides reference-side counts for canonical selection.
    pub unigrams: Option<UnigramTable>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            order: NormalizationOrder::default(),
            spell_policy: AggregationPolicy::default(),
            seg_method: SegMethod::default(),
            seg_params: SegmenterParams::default(),
            seg_policy: SegPolicy::default(),
            rules: RuleSet::default(),
            seg_options: SegMineOptions::default(),
            canonicalize: true,
            unigrams: None,
        }
    }
}

/// Reviewed pair files that replace mining for a stage.
#[derive(Debug, Clone, Default)]
pub struct ImportedPairs {
    pub spell: Option<Vec<VariantVerdict>>,
    pub seg: Option<Vec<SegPair>>,
}

#[derive(Debug, Clone)]
pub struct SpellStage {
    pub verdicts: Vec<VariantVerdict>,
    pub map: SpellMap,
    pub corpus: Corpus,
    pub wer: f64,
    pub counts: PairCounts,
}

#[derive(Debug, Clone)]
pub struct SegStage {
    pub pairs: Vec<SegPair>,
    pub table: SegPairTable,
    pub corpus: Corpus,
    pub wer: f64,
    pub counts: PairCounts,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvaluationReport,
    pub spell: Option<SpellStage>,
    pub seg: Option<SegStage>,
    pub cascade: Option<SpellStage>,
}

impl Evaluation {
    /// The corpus after every requested normalization.
    pub fn normalized(&self) -> Option<&Corpus> {
        match self.report.order {
            NormalizationOrder::SpellOnly => self.spell.as_ref().map(|s| &s.corpus),
            NormalizationOrder::SegOnly => self.seg.as_ref().map(|s| &s.corpus),
            NormalizationOrder::SegThenSpell => self.cascade.as_ref().map(|s| &s.corpus),
        }
    }
}

fn corpus_wer(
    corpus: &Corpus,
    map: Option<&SpellMap>,
    stage: &'static str,
) -> Result<f64, PipelineError> {
    let score = match map {
        Some(m) => wer(corpus, |a, b| m.equivalent(a, b)),
        None => wer(corpus, exact),
    };
    score
        .map(|s| s.wer)
        .map_err(|source| PipelineError::Wer { stage, source })
}

fn apply_spell(corpus: &Corpus, map: &SpellMap) -> (Corpus, usize) {
    let mut applied = 0;
    let out = corpus
        .map_tokens(|t| {
            let (rewritten, n) = map.apply_counted(t);
            applied += n;
            Ok::<_, std::convert::Infallible>(rewritten)
        })
        .unwrap_or_else(|e| match e {});
    (out, applied)
}

pub fn apply_seg(corpus: &Corpus, table: &SegPairTable) -> Result<(Corpus, usize), SegError> {
    let mut applied = 0;
    let out = corpus.map_tokens(|t| {
        let (rewritten, n) = table.apply_counted(t)?;
        applied += n;
        Ok::<_, SegError>(rewritten)
    })?;
    Ok((out, applied))
}

/// Applies segmentation then spelling normalization to both sides.
pub fn normalize_corpus(
    corpus: &Corpus,
    seg: Option<&SegPairTable>,
    spell: Option<&SpellMap>,
) -> Result<Corpus, SegError> {
    let mut out = match seg {
        Some(t) => apply_seg(corpus, t)?.0,
        None => corpus.clone(),
    };
    if let Some(m) = spell {
        out = apply_spell(&out, m).0;
    }
    Ok(out)
}

fn spell_stage(
    corpus: &Corpus,
    evidence: &Evidence,
    settings: &EvalSettings,
    imported: Option<&[VariantVerdict]>,
    stage: &'static str,
) -> Result<SpellStage, PipelineError> {
    let verdicts = match imported {
        Some(v) => v.to_vec(),
        None => {
            let vocab = extract_vocabulary(corpus, VocabSource::Both);
            mine_spell_pairs(&vocab, evidence, &settings.spell_policy).verdicts
        }
    };
    let unigrams = match &settings.unigrams {
        Some(u) => u.clone(),
        None => UnigramTable::from_corpus(corpus),
    };
    let accepted: Vec<&VariantVerdict> = verdicts.iter().filter(|v| v.accepted).collect();
    let map = build_spell_map(
        accepted
            .iter()
            .map(|v| (v.word_a.as_str(), v.word_b.as_str())),
        &unigrams,
    );
    let (normalized, applied) = apply_spell(corpus, &map);
    let wer = if settings.canonicalize {
        corpus_wer(&normalized, None, stage)?
    } else {
        corpus_wer(corpus, Some(&map), stage)?
    };
    Ok(SpellStage {
        counts: PairCounts {
            mined: verdicts.len(),
            accepted: accepted.len(),
            applied,
        },
        verdicts,
        map,
        corpus: normalized,
        wer,
    })
}

fn seg_stage(
    corpus: &Corpus,
    evidence: &Evidence,
    settings: &EvalSettings,
    imported: Option<&[SegPair]>,
) -> Result<SegStage, PipelineError> {
    let seg_err = |source| PipelineError::Seg {
        stage: "segmentation normalization",
        source,
    };
    let (pairs, table) = match imported {
        Some(p) => {
            let unigrams = settings
                .unigrams
                .clone()
                .unwrap_or_else(|| UnigramTable::from_corpus(corpus));
            let table = SegPairTable::from_pairs(p.iter().filter(|x| x.accepted), &unigrams);
            (p.to_vec(), table)
        }
        None => {
            let vocab = extract_vocabulary(corpus, VocabSource::Both);
            let model = train_segmenter(&vocab, settings.seg_method, settings.seg_params)
                .map_err(seg_err)?;
            let mined = mine_seg_pairs(
                corpus,
                &model,
                evidence,
                &settings.rules,
                &settings.seg_policy,
                settings.seg_options,
            );
            (mined.candidates, mined.table)
        }
    };
    let (normalized, applied) = apply_seg(corpus, &table).map_err(seg_err)?;
    let wer = corpus_wer(&normalized, None, "segmentation normalization")?;
    Ok(SegStage {
        counts: PairCounts {
            mined: pairs.len(),
            accepted: table.len(),
            applied,
        },
        pairs,
        table,
        corpus: normalized,
        wer,
    })
}

/// Runs every stage requested by `settings.order` on an in-memory corpus.
///
/// Spell and seg stages each start from the original corpus. The cascade
/// re-mines spelling variants on the segmentation-normalized corpus unless
/// reviewed spell pairs were imported.
pub fn evaluate(
    corpus: &Corpus,
    evidence: &Evidence,
    settings: &EvalSettings,
    imported: &ImportedPairs,
) -> Result<Evaluation, PipelineError> {
    if corpus.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    let base_wer = corpus_wer(corpus, None, "base WER")?;
    let mut report = EvaluationReport::new(&corpus.locale, corpus.len(), settings.order, base_wer);

    let spell = if settings.order.runs_spell() {
        Some(spell_stage(
            corpus,
            evidence,
            settings,
            imported.spell.as_deref(),
            "spelling normalization",
        )?)
    } else {
        None
    };
    let seg = if settings.order.runs_seg() {
        Some(seg_stage(
            corpus,
            evidence,
            settings,
            imported.seg.as_deref(),
        )?)
    } else {
        None
    };
    let cascade = match (&seg, settings.order) {
        (Some(seg), NormalizationOrder::SegThenSpell) => Some(spell_stage(
            &seg.corpus,
            evidence,
            settings,
            imported.spell.as_deref(),
            "cascade normalization",
        )?),
        _ => None,
    };

    report.spell_wer = spell.as_ref().map(|s| s.wer);
    report.spell_pairs = spell.as_ref().map(|s| s.counts);
    report.seg_wer = seg.as_ref().map(|s| s.wer);
    report.seg_pairs = seg.as_ref().map(|s| s.counts);
    report.cascade_wer = cascade.as_ref().map(|s| s.wer);
    report.cascade_spell_pairs = cascade.as_ref().map(|s| s.counts);
    report.fill_werr();

    Ok(Evaluation {
        report,
        spell,
        seg,
        cascade,
    })
}

/// File-level configuration for [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub format: CorpusFormat,
    pub locale: String,
    pub strip_chars: Vec<char>,
    pub lexicon: PathBuf,
    pub grapheme_rules: Option<PathBuf>,
    pub translit_dict: Option<PathBuf>,
    pub trans_dict: Option<PathBuf>,
    pub relax_table: Option<PathBuf>,
    pub unigrams: Option<PathBuf>,
    pub forbidden_initial: Option<PathBuf>,
    pub spell_review: Option<PathBuf>,
    pub seg_review: Option<PathBuf>,
    /// Use `WERNORM_PIVOT_ENDPOINT` for any pivot signal without a dictionary.
    pub remote_pivot: bool,
    pub pivot_language: String,
    pub settings: EvalSettings,
    pub jobs: Option<usize>,
    pub out_dir: PathBuf,
}

impl PipelineConfig {
    pub fn new(
        corpus: impl Into<PathBuf>,
        lexicon: impl Into<PathBuf>,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            corpus: corpus.into(),
            format: CorpusFormat::Tsv,
            locale: "und".into(),
            strip_chars: Vec::new(),
            lexicon: lexicon.into(),
            grapheme_rules: None,
            translit_dict: None,
            trans_dict: None,
            relax_table: None,
            unigrams: None,
            forbidden_initial: None,
            spell_review: None,
            seg_review: None,
            remote_pivot: true,
            pivot_language: "en".into(),
            settings: EvalSettings::default(),
            jobs: None,
            out_dir: out_dir.into(),
        }
    }

    /// Every referenced input file must exist.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let required = [Some(&self.corpus), Some(&self.lexicon)];
        let optional = [
            self.grapheme_rules.as_ref(),
            self.translit_dict.as_ref(),
            self.trans_dict.as_ref(),
            self.relax_table.as_ref(),
            self.unigrams.as_ref(),
            self.forbidden_initial.as_ref(),
            self.spell_review.as_ref(),
            self.seg_review.as_ref(),
        ];
        for path in required.into_iter().chain(optional).flatten() {
            if !path.is_file() {
                return Err(PipelineError::Config(format!(
                    "{} does not exist or is not a file",
                    path.display()
                )));
            }
        }
        if self.jobs == Some(0) {
            return Err(PipelineError::Config("--jobs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn load_corpus(&self) -> Result<Corpus, PipelineError> {
        let tok = Tokenizer::with_strip_set(self.strip_chars.iter().copied());
        Ok(load_corpus(&self.corpus, &self.locale, self.format, &tok)?)
    }

    pub fn build_evidence(&self) -> Result<Evidence, PipelineError> {
        let mut lexicon = PronunciationLexicon::open(&self.lexicon)?;
        if let Some(p) = &self.grapheme_rules {
            lexicon = lexicon.with_rules(GraphemeRules::open(p)?);
        }
        let mut ev = Evidence::new().with_pronunciation(lexicon);
        if let Some(p) = &self.relax_table {
            ev = ev.with_relaxation(RelaxationTable::open(p)?);
        }
        let remote = if self.remote_pivot {
            RemoteConfig::from_env().map(|mut c| {
                c.source_locale = self.locale.clone();
                c.pivot_language = self.pivot_language.clone();
                c
            })
        } else {
            None
        };
        match (&self.translit_dict, &remote) {
            (Some(p), _) => ev = ev.with_transliteration(PivotDictionary::open(p)?),
            (None, Some(c)) => {
                ev = ev.with_transliteration(RemotePivotProvider::new(
                    PivotTask::Transliterate,
                    c.clone(),
                ))
            }
            _ => {}
        }
        match (&self.trans_dict, &remote) {
            (Some(p), _) => ev = ev.with_translation(PivotDictionary::open(p)?),
            (None, Some(c)) => {
                ev = ev.with_translation(RemotePivotProvider::new(PivotTask::Translate, c.clone()))
            }
            _ => {}
        }
        Ok(ev)
    }

    /// Settings with file-backed overrides (unigrams, rule class) resolved.
    pub fn resolved_settings(&self) -> Result<EvalSettings, PipelineError> {
        let mut settings = self.settings.clone();
        if let Some(p) = &self.unigrams {
            settings.unigrams = Some(build_unigram_table(None, Some(p))?);
        }
        if let Some(p) = &self.forbidden_initial {
            settings.rules.forbidden_initial =
                ForbiddenInitial::open(p).map_err(|source| PipelineError::Seg {
                    stage: "loading rule file",
                    source,
                })?;
        }
        Ok(settings)
    }

    pub fn imported_pairs(&self) -> Result<ImportedPairs, PipelineError> {
        Ok(ImportedPairs {
            spell: self
                .spell_review
                .as_deref()
                .map(load_spell_review)
                .transpose()?,
            seg: self
                .seg_review
                .as_deref()
                .map(load_seg_review)
                .transpose()?,
        })
    }
}

/// Reads a spell review file, keeping only pairs that survive review.
/// Incoming `accepted` reflects the final include decision.
pub fn load_spell_review(path: &Path) -> Result<Vec<VariantVerdict>, PipelineError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let rows = read_spell_review(BufReader::new(file)).map_err(|source| PipelineError::Review {
        path: path.to_owned(),
        source,
    })?;
    Ok(rows
        .into_iter()
        .filter(|r| r.included())
        .map(|r| VariantVerdict {
            accepted: true,
            ..r.verdict
        })
        .collect())
}

pub fn load_seg_review(path: &Path) -> Result<Vec<SegPair>, PipelineError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let rows = read_seg_review(BufReader::new(file)).map_err(|source| PipelineError::Review {
        path: path.to_owned(),
        source,
    })?;
    Ok(rows
        .into_iter()
        .filter(|r| r.included())
        .map(|r| SegPair {
            accepted: true,
            ..r.pair
        })
        .collect())
}

pub const SPELL_REVIEW_FILE: &str = "spell_pairs.tsv";
pub const SEG_REVIEW_FILE: &str = "seg_pairs.tsv";
pub const CASCADE_SPELL_REVIEW_FILE: &str = "cascade_spell_pairs.tsv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";

fn ensure_dir(dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Writes the accepted spell pairs for expert review.
pub fn export_spell_review(
    verdicts: &[VariantVerdict],
    path: &Path,
) -> Result<usize, PipelineError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    write_spell_review(verdicts.iter().filter(|v| v.accepted), BufWriter::new(file))
        .map_err(io_err(path))
}

/// Writes the accepted seg pairs for expert review.
pub fn export_seg_review(pairs: &[SegPair], path: &Path) -> Result<usize, PipelineError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    write_seg_review(pairs.iter().filter(|p| p.accepted), BufWriter::new(file))
        .map_err(io_err(path))
}

/// Writes one review file per mining stage that ran and returns the paths.
pub fn export_review_files(
    evaluation: &Evaluation,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, PipelineError> {
    ensure_dir(out_dir)?;
    let mut written = Vec::new();
    if let Some(s) = &evaluation.spell {
        let p = out_dir.join(SPELL_REVIEW_FILE);
        export_spell_review(&s.verdicts, &p)?;
        written.push(p);
    }
    if let Some(s) = &evaluation.seg {
        let p = out_dir.join(SEG_REVIEW_FILE);
        export_seg_review(&s.pairs, &p)?;
        written.push(p);
    }
    if let Some(s) = &evaluation.cascade {
        let p = out_dir.join(CASCADE_SPELL_REVIEW_FILE);
        export_spell_review(&s.verdicts, &p)?;
        written.push(p);
    }
    Ok(written)
}

pub fn write_report(
    report: &EvaluationReport,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf), PipelineError> {
    ensure_dir(out_dir)?;
    let json = out_dir.join(REPORT_JSON);
    fs::write(&json, report.to_json() + "\n").map_err(io_err(&json))?;
    let txt = out_dir.join(REPORT_TXT);
    fs::write(&txt, render_table(std::slice::from_ref(report))).map_err(io_err(&txt))?;
    Ok((json, txt))
}

/// Runs `f` on a rayon pool of `jobs` threads, or the global pool.
pub fn with_jobs<T: Send>(
    jobs: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, PipelineError> {
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| PipelineError::Config(format!("cannot start worker pool: {e}"))),
        None => Ok(f()),
    }
}

/// Loads inputs, evaluates, and writes the report plus review files to
/// `config.out_dir`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<EvaluationReport, PipelineError> {
    config.validate()?;
    let corpus = config.load_corpus()?;
    let evidence = config.build_evidence()?;
    let settings = config.resolved_settings()?;
    let imported = config.imported_pairs()?;
    let evaluation = with_jobs(config.jobs, || {
        evaluate(&corpus, &evidence, &settings, &imported)
    })??;
    export_review_files(&evaluation, &config.out_dir)?;
    write_report(&evaluation.report, &config.out_dir)?;
    Ok(evaluation.report)
}
