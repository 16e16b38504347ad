use sentrep::baselines::{TfidfModel, DEFAULT_MAX_FEATURES};
use sentrep::{Corpus, SentenceEncoder};

#[test]
fn tfidf_keeps_most_frequent_features() {
    // 300k types; lower ids are more frequent.
    let n_types = 300_000;
    let sentences: Vec<String> = (0..n_types / 10)
        .map(|i| {
            let mut words: Vec<String> = (0..10).map(|j| format!("t{}", i * 10 + j)).collect();
            words.extend((0..5).map(|j| format!("t{}", (i * 7 + j) % 1000)));
            words.join(" ")
        })
        .collect();
    let corpus = Corpus::from_sentences(sentences);
    let vocab = corpus.build_vocab(1, DEFAULT_MAX_FEATURES).unwrap();
    assert_eq!(vocab.len(), DEFAULT_MAX_FEATURES);
    let idx = corpus.index(&vocab);
    let m = TfidfModel::fit(&idx, vocab, DEFAULT_MAX_FEATURES).unwrap();
    assert_eq!(m.n_features(), 200_000);
    assert_eq!(m.dim(), 200_000);
    assert!(m.vocab.id("t5").is_some());
    let e = m.encode("t5 t5 unseen");
    assert!(!e.empty);
    assert_eq!(e.repr.dim(), 200_000);
}
