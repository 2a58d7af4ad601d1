use std::fs;

use wernorm::corpus::{load_corpus, CorpusError, CorpusFormat, Tokenizer};
use wernorm::evidence::{Evidence, PronunciationLexicon, RelaxationTable};
use wernorm::wer::{exact, wer};

#[test]
fn tsv_and_jsonl_load_the_same_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("c.tsv");
    let jsonl = dir.path().join("c.jsonl");
    fs::write(&tsv, "a\tगाँव में\tगांव में\n\nb\tone two\tone  two three\n").unwrap();
    fs::write(
        &jsonl,
        "{\"id\": \"a\", \"ref\": \"गाँव में\", \"hyp\": \"गांव में\"}\n\
         {\"id\": \"b\", \"ref\": \"one two\", \"hyp\": \"one  two three\"}\n",
    )
    .unwrap();
    let tok = Tokenizer::default();
    let a = load_corpus(&tsv, "hi", CorpusFormat::Tsv, &tok).unwrap();
    let b = load_corpus(&jsonl, "hi", CorpusFormat::Jsonl, &tok).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 2);
    assert_eq!(a.utterances[1].hypothesis, vec!["one", "two", "three"]);
    let score = wer(&a, exact).unwrap();
    assert_eq!((score.errors, score.ref_len), (2, 4));
}

#[test]
fn decomposed_input_is_composed_before_scoring() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.tsv");
    // precomposed vs base letter plus combining acute
    fs::write(&p, "1\tcaf\u{e9}\tcafe\u{301}\n").unwrap();
    let c = load_corpus(&p, "fr", CorpusFormat::Tsv, &Tokenizer::default()).unwrap();
    assert_eq!(wer(&c, exact).unwrap().errors, 0);
}

#[test]
fn strip_set_removes_punctuation() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.tsv");
    fs::write(&p, "1\thello, world.\thello world\n").unwrap();
    let tok = Tokenizer::with_strip_set([',', '.']);
    let c = load_corpus(&p, "en", CorpusFormat::Tsv, &tok).unwrap();
    assert_eq!(wer(&c, exact).unwrap().errors, 0);
}

#[test]
fn corpus_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.tsv");
    fs::write(&p, "1\ta\tb\n2\tonly two\n").unwrap();
    let err = load_corpus(&p, "xx", CorpusFormat::Tsv, &Tokenizer::default()).unwrap_err();
    assert!(
        matches!(err, CorpusError::Malformed { line: 2, .. }),
        "{err}"
    );

    fs::write(&p, "1\ta\tb\n1\tc\td\n").unwrap();
    let err = load_corpus(&p, "xx", CorpusFormat::Tsv, &Tokenizer::default()).unwrap_err();
    assert!(
        matches!(err, CorpusError::DuplicateId { line: 2, .. }),
        "{err}"
    );

    let missing = dir.path().join("missing.tsv");
    let err = load_corpus(&missing, "xx", CorpusFormat::Tsv, &Tokenizer::default()).unwrap_err();
    assert!(matches!(err, CorpusError::Io { .. }));
}

#[test]
fn relaxation_and_lexicon_files() {
    let dir = tempfile::tempdir().unwrap();
    let lex = dir.path().join("lex.tsv");
    let relax = dir.path().join("relax.txt");
    fs::write(&lex, "zara\tz a r a\njara\tj a r a\njara\tdʒ a r a\n").unwrap();
    fs::write(&relax, "# z and j are heard alike\nz j\n").unwrap();
    let ev = Evidence::new()
        .with_pronunciation(PronunciationLexicon::open(&lex).unwrap())
        .with_relaxation(RelaxationTable::open(&relax).unwrap());
    assert_eq!(ev.pronounce("jara").len(), 2);
    let shared: Vec<_> = ev
        .relaxed_pronunciations("zara")
        .into_iter()
        .filter(|p| ev.relaxed_pronunciations("jara").contains(p))
        .collect();
    assert_eq!(shared.len(), 1);

    fs::write(&relax, "z\n").unwrap();
    assert!(RelaxationTable::open(&relax).is_err());
}
