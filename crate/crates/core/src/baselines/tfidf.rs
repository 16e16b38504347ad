//! Non-distributed TFIDF bag-of-words baseline.

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, IndexedCorpus, Vocabulary};
use crate::encoder::{Encoding, SentenceEncoder};
use crate::error::{Error, Result};
use crate::numeric::{SentenceRepresentation, SparseVector};

pub const DEFAULT_MAX_FEATURES: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfidfConfig {
    pub max_features: usize,
    pub n_sentences: u64,
}

/// Feature words are the first `idf.len()` vocabulary ids, i.e. the most
/// frequent words. A sentence counts as one document for `df`.
#[derive(Clone, Debug, PartialEq)]
pub struct TfidfModel {
    pub vocab: Vocabulary,
    pub idf: Vec<f32>,
    pub config: TfidfConfig,
}

impl TfidfModel {
    /// `idf(w) = ln(N / df(w))` with raw counts as term frequency. Feature
    /// words that never occur in `corpus` get weight 0.
    pub fn fit(corpus: &IndexedCorpus, vocab: Vocabulary, max_features: usize) -> Result<Self> {
        if max_features == 0 {
            return Err(Error::InvalidArgument("max_features must be at least 1".into()));
        }
        let n_features = vocab.len().min(max_features);
        let mut df = vec![0u64; n_features];
        let mut n_sentences = 0u64;
        let mut seen = vec![u64::MAX; n_features];
        for (i, s) in corpus.sentences().enumerate() {
            n_sentences += 1;
            for &id in &s.ids {
                let id = id as usize;
                if id < n_features && seen[id] != i as u64 {
                    seen[id] = i as u64;
                    df[id] += 1;
                }
            }
        }
        if n_sentences == 0 {
            return Err(Error::EmptyCorpus);
        }
        let idf = df
            .iter()
            .map(|&d| if d == 0 { 0.0 } else { (n_sentences as f64 / d as f64).ln() as f32 })
            .collect();
        Ok(TfidfModel {
            vocab,
            idf,
            config: TfidfConfig {
                max_features,
                n_sentences,
            },
        })
    }

    pub fn n_features(&self) -> usize {
        self.idf.len()
    }

    /// `count(w in S) · idf(w)` for every feature word of the sentence.
    pub fn encode_ids(&self, ids: &[u32]) -> (SparseVector, bool) {
        let entries: Vec<(u32, f32)> = ids
            .iter()
            .filter(|&&id| (id as usize) < self.idf.len())
            .map(|&id| (id, self.idf[id as usize]))
            .collect();
        let v = SparseVector::from_entries(self.idf.len(), entries);
        let empty = v.nnz() == 0;
        (v, empty)
    }
}

impl SentenceEncoder for TfidfModel {
    fn dim(&self) -> usize {
        self.idf.len()
    }

    fn encode(&self, text: &str) -> Encoding {
        let (v, empty) = self.encode_ids(&self.vocab.ids(&tokenize(text)));
        Encoding {
            repr: SentenceRepresentation::Sparse(v),
            empty,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Corpus;
    use crate::numeric::cosine;

    fn fit(text: &str, max: usize) -> TfidfModel {
        let c = Corpus::from_reader(text.as_bytes()).unwrap();
        let v = c.build_vocab(1, usize::MAX).unwrap();
        TfidfModel::fit(&c.index(&v), v, max).unwrap()
    }

    #[test]
    fn idf_values() {
        let m = fit("the cat\nthe dog\nthe cow\n", 100);
        let the = m.vocab.id("the").unwrap() as usize;
        let cat = m.vocab.id("cat").unwrap() as usize;
        assert_eq!(m.idf[the], 0.0);
        assert!((m.idf[cat] as f64 - 3f64.ln()).abs() < 1e-6);
        let (v, _) = m.encode_ids(&[the as u32, the as u32]);
        assert!(v.entries.iter().all(|e| e.1 == 0.0));
    }

    #[test]
    fn counts_times_idf() {
        let mut m = fit("w x\ny\nz\n", 100);
        let w = m.vocab.id("w").unwrap();
        m.idf[w as usize] = 2.0;
        let (v, empty) = m.encode_ids(&[w, w]);
        assert!(!empty);
        assert_eq!(v.entries, vec![(w, 4.0)]);
    }

    #[test]
    fn non_features_ignored_and_empty_flagged() {
        let m = fit("a a a\na a b\nc\n", 1);
        assert_eq!(m.n_features(), 1);
        let e = m.encode("b c unknown");
        assert!(e.empty);
        let e = m.encode("a b");
        assert!(!e.empty);
        assert_eq!(e.repr.dim(), 1);
    }

    #[test]
    fn self_cosine_is_one() {
        let m = fit("a b\nb c\nc d\nd e\n", 100);
        let e = m.encode("a b c").repr;
        assert!((cosine(&e, &e).unwrap().value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_corpus_rejected() {
        let v = Vocabulary::from_counts(vec![("a".into(), 1)]).unwrap();
        assert!(matches!(
            TfidfModel::fit(&IndexedCorpus::default(), v, 10),
            Err(Error::EmptyCorpus)
        ));
    }
}
