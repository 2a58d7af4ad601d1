use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use wernorm::corpus::{extract_vocabulary, CorpusFormat, VocabSource};
use wernorm::pipeline::{
    self, load_seg_review, load_spell_review, render_summary, render_table, summarize, with_jobs,
    EvaluationReport, NormalizationOrder, PipelineConfig, SEG_REVIEW_FILE, SPELL_REVIEW_FILE,
};
use wernorm::seg::{mine_seg_pairs, train_segmenter, SegMethod, SegPairTable, SegmenterParams};
use wernorm::spell::{
    build_spell_map, build_unigram_table, mine_spell_pairs, AggregationPolicy, UnigramTable,
};

#[derive(Parser)]
#[command(
    name = "wernorm",
    version,
    about = "Normalize ASR transcripts before scoring WER"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine spelling-variant pairs and write them for review.
    MineSpell(MineSpellArgs),
    /// Mine compound/segment pairs and write them for review.
    MineSeg(MineSegArgs),
    /// Apply reviewed pair files to a corpus and write the result.
    Normalize(NormalizeArgs),
    /// Compute base, per-stage and cascade WER.
    Evaluate(EvaluateArgs),
    /// Tabulate saved reports and average their WERR.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct CorpusArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    locale: String,
    /// tsv or jsonl
    #[arg(long, default_value = "tsv")]
    format: CorpusFormat,
    /// Characters removed before tokenization.
    #[arg(long, default_value = "")]
    strip: String,
}

#[derive(Args, Clone)]
struct EvidenceArgs {
    #[arg(long)]
    lexicon: PathBuf,
    /// Fallback grapheme-to-phone rules for words missing from the lexicon.
    #[arg(long)]
    grapheme_rules: Option<PathBuf>,
    #[arg(long)]
    translit_dict: Option<PathBuf>,
    #[arg(long)]
    trans_dict: Option<PathBuf>,
    #[arg(long)]
    relax_table: Option<PathBuf>,
    /// Never contact the remote pivot endpoint.
    #[arg(long)]
    offline: bool,
    #[arg(long, default_value = "en")]
    pivot_language: String,
}

#[derive(Args, Clone)]
struct SpellArgs {
    #[arg(long, default_value_t = 2)]
    min_agree: usize,
    /// Require all three signals to agree.
    #[arg(long, conflicts_with = "min_agree")]
    strict: bool,
}

#[derive(Args, Clone)]
struct SegArgs {
    #[arg(long, default_value = "unigram")]
    seg_method: SegMethod,
    #[arg(long, default_value_t = 3)]
    max_segments: usize,
    #[arg(long, default_value_t = 2000)]
    num_merges: usize,
    /// Code points that may not begin a segment, one per line.
    #[arg(long)]
    forbidden_initial: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    min_segment_chars: usize,
    /// Reject splits whose translation check could not run.
    #[arg(long)]
    require_translation: bool,
    /// Also mine compounds from the hypothesis side.
    #[arg(long)]
    mine_hypothesis: bool,
}

#[derive(Args)]
struct MineSpellArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    evidence: EvidenceArgs,
    #[command(flatten)]
    spell: SpellArgs,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MineSegArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    evidence: EvidenceArgs,
    #[command(flatten)]
    seg: SegArgs,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NormalizeArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Reviewed spell pair file.
    #[arg(long)]
    spell_pairs: Option<PathBuf>,
    /// Reviewed seg pair file.
    #[arg(long)]
    seg_pairs: Option<PathBuf>,
    /// word<TAB>weight file for canonical selection.
    #[arg(long)]
    unigrams: Option<PathBuf>,
    /// Output corpus (TSV).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    evidence: EvidenceArgs,
    #[command(flatten)]
    spell: SpellArgs,
    #[command(flatten)]
    seg: SegArgs,
    #[arg(long, default_value = "seg-then-spell")]
    order: NormalizationOrder,
    #[arg(long)]
    unigrams: Option<PathBuf>,
    /// Score with class-aware equality instead of rewriting to canonical forms.
    #[arg(long)]
    no_canonical: bool,
    /// Use this reviewed spell pair file instead of mining.
    #[arg(long)]
    spell_pairs: Option<PathBuf>,
    /// Use this reviewed seg pair file instead of mining.
    #[arg(long)]
    seg_pairs: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// report.json files, or directories containing one.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn base_config(corpus: &CorpusArgs, evidence: &EvidenceArgs, out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(&corpus.corpus, &evidence.lexicon, out);
    cfg.format = corpus.format;
    cfg.locale = corpus.locale.clone();
    cfg.strip_chars = corpus.strip.chars().collect();
    cfg.grapheme_rules = evidence.grapheme_rules.clone();
    cfg.translit_dict = evidence.translit_dict.clone();
    cfg.trans_dict = evidence.trans_dict.clone();
    cfg.relax_table = evidence.relax_table.clone();
    cfg.remote_pivot = !evidence.offline;
    cfg.pivot_language = evidence.pivot_language.clone();
    cfg
}

fn spell_policy(args: &SpellArgs) -> Result<AggregationPolicy> {
    if args.strict {
        Ok(AggregationPolicy::strict())
    } else {
        Ok(AggregationPolicy::new(args.min_agree)?)
    }
}

fn apply_seg_args(cfg: &mut PipelineConfig, args: &SegArgs) {
    let s = &mut cfg.settings;
    s.seg_method = args.seg_method;
    s.seg_params = SegmenterParams {
        max_segments: args.max_segments,
        num_merges: args.num_merges,
    };
    s.rules.min_segment_chars = args.min_segment_chars;
    s.seg_policy.require_translation = args.require_translation;
    s.seg_options.include_hypothesis = args.mine_hypothesis;
    cfg.forbidden_initial = args.forbidden_initial.clone();
}

fn mine_spell(args: MineSpellArgs) -> Result<()> {
    let mut cfg = base_config(&args.corpus, &args.evidence, &args.out);
    cfg.settings.spell_policy = spell_policy(&args.spell)?;
    cfg.jobs = args.jobs;
    cfg.validate()?;
    let corpus = cfg.load_corpus()?;
    let evidence = cfg.build_evidence()?;
    let vocab = extract_vocabulary(&corpus, VocabSource::Both);
    let mining = with_jobs(cfg.jobs, || {
        mine_spell_pairs(&vocab, &evidence, &cfg.settings.spell_policy)
    })?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let path = args.out.join(SPELL_REVIEW_FILE);
    let rows = pipeline::export_spell_review(&mining.verdicts, &path)?;
    println!(
        "{} candidates judged, {rows} accepted, written to {}",
        mining.verdicts.len(),
        path.display()
    );
    Ok(())
}

fn mine_seg(args: MineSegArgs) -> Result<()> {
    let mut cfg = base_config(&args.corpus, &args.evidence, &args.out);
    apply_seg_args(&mut cfg, &args.seg);
    cfg.jobs = args.jobs;
    cfg.validate()?;
    let corpus = cfg.load_corpus()?;
    let evidence = cfg.build_evidence()?;
    let settings = cfg.resolved_settings()?;
    let vocab = extract_vocabulary(&corpus, VocabSource::Both);
    let model = train_segmenter(&vocab, settings.seg_method, settings.seg_params)?;
    let mining = with_jobs(cfg.jobs, || {
        mine_seg_pairs(
            &corpus,
            &model,
            &evidence,
            &settings.rules,
            &settings.seg_policy,
            settings.seg_options,
        )
    })?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let path = args.out.join(SEG_REVIEW_FILE);
    let rows = pipeline::export_seg_review(&mining.candidates, &path)?;
    println!(
        "{} candidates validated, {rows} accepted, written to {}",
        mining.candidates.len(),
        path.display()
    );
    Ok(())
}

fn normalize(args: NormalizeArgs) -> Result<()> {
    if args.spell_pairs.is_none() && args.seg_pairs.is_none() {
        bail!("nothing to apply: pass --spell-pairs and/or --seg-pairs");
    }
    let tok = wernorm::corpus::Tokenizer::with_strip_set(args.corpus.strip.chars());
    let corpus = wernorm::corpus::load_corpus(
        &args.corpus.corpus,
        &args.corpus.locale,
        args.corpus.format,
        &tok,
    )?;
    let unigrams = match &args.unigrams {
        Some(p) => build_unigram_table(None, Some(p))?,
        None => UnigramTable::from_corpus(&corpus),
    };
    let seg = match &args.seg_pairs {
        Some(p) => Some(SegPairTable::from_pairs(&load_seg_review(p)?, &unigrams)),
        None => None,
    };
    let spell = match &args.spell_pairs {
        Some(p) => {
            let pairs = load_spell_review(p)?;
            Some(build_spell_map(
                pairs.iter().map(|v| (v.word_a.as_str(), v.word_b.as_str())),
                &unigrams,
            ))
        }
        None => None,
    };
    let out = pipeline::normalize_corpus(&corpus, seg.as_ref(), spell.as_ref())?;
    let file =
        fs::File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut w = BufWriter::new(file);
    out.write_tsv(&mut w)?;
    w.flush()?;
    info!("wrote {} utterances to {}", out.len(), args.out.display());
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let mut cfg = base_config(&args.corpus, &args.evidence, &args.out);
    cfg.settings.order = args.order;
    cfg.settings.spell_policy = spell_policy(&args.spell)?;
    cfg.settings.canonicalize = !args.no_canonical;
    apply_seg_args(&mut cfg, &args.seg);
    cfg.unigrams = args.unigrams;
    cfg.spell_review = args.spell_pairs;
    cfg.seg_review = args.seg_pairs;
    cfg.jobs = args.jobs;
    let report = pipeline::run_pipeline(&cfg)?;
    print!("{}", render_table(std::slice::from_ref(&report)));
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let mut reports = Vec::new();
    for p in &args.reports {
        let path = if p.is_dir() {
            p.join(pipeline::REPORT_JSON)
        } else {
            p.clone()
        };
        let text =
            fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let r = EvaluationReport::from_json(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        if !r.is_consistent() {
            bail!("{}: stored WERR does not match its WERs", path.display());
        }
        reports.push(r);
    }
    let summary = summarize(&reports)?;
    let text = render_summary(&reports, &summary);
    match &args.out {
        Some(p) => fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::MineSpell(a) => mine_spell(a),
        Command::MineSeg(a) => mine_seg(a),
        Command::Normalize(a) => normalize(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Report(a) => report(a),
    }
}
