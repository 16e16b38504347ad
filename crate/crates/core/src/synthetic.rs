//! Generated corpora with known structure, used by tests and benches.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::corpus::Corpus;
use crate::encoder::SentenceEncoder;
use crate::error::Result;
use crate::numeric::{cosine, seeded_rng};

fn word(id: usize) -> String {
    format!("w{id:04}")
}

/// Documents drawn from one of two topics.
#[derive(Clone, Debug)]
pub struct TopicCorpus {
    pub corpus: Corpus,
    /// Topic of each document.
    pub topics: Vec<usize>,
}

impl TopicCorpus {
    /// Every sentence with the topic of its document, in corpus order.
    pub fn labeled_sentences(&self) -> Vec<(String, usize)> {
        self.corpus
            .documents
            .iter()
            .zip(&self.topics)
            .flat_map(|(doc, &t)| doc.iter().map(move |s| (s.clone(), t)))
            .collect()
    }

    /// The same sentences as single-sentence documents in random order.
    pub fn shuffled_sentences(&self, seed: u64) -> Corpus {
        let mut all: Vec<String> = self.corpus.sentences().map(str::to_string).collect();
        all.shuffle(&mut seeded_rng(seed));
        Corpus::from_sentences(all)
    }
}

/// A tenth of the vocabulary is shared; the rest is split evenly between two
/// topics. Sentences have 6 to 12 tokens, 80% from the document's topic.
pub fn two_topic_corpus(seed: u64, documents: usize, sentences_per_doc: usize, vocab: usize) -> TopicCorpus {
    assert!(vocab >= 20, "vocabulary too small for two topics");
    let mut rng = seeded_rng(seed);
    let shared = vocab / 10;
    let per_topic = (vocab - shared) / 2;
    let mut docs = Vec::with_capacity(documents);
    let mut topics = Vec::with_capacity(documents);
    for _ in 0..documents {
        let topic = rng.gen_range(0..2);
        let doc = (0..sentences_per_doc)
            .map(|_| {
                let len = rng.gen_range(6..=12);
                (0..len)
                    .map(|_| {
                        if rng.gen_bool(0.8) {
                            word(shared + topic * per_topic + rng.gen_range(0..per_topic))
                        } else {
                            word(rng.gen_range(0..shared))
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        docs.push(doc);
        topics.push(topic);
    }
    TopicCorpus {
        corpus: Corpus { documents: docs },
        topics,
    }
}

/// Mean cosine between encodings of `pairs` random sentence pairs from the
/// same topic, and from different topics. Empty encodings are skipped.
pub fn topic_separation<E: SentenceEncoder + ?Sized>(
    encoder: &E,
    corpus: &TopicCorpus,
    pairs: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let labeled = corpus.labeled_sentences();
    let texts: Vec<String> = labeled.iter().map(|(s, _)| s.clone()).collect();
    let enc = encoder.encode_batch(&texts);
    let by_topic: [Vec<usize>; 2] = [0, 1].map(|t| {
        (0..labeled.len())
            .filter(|&i| labeled[i].1 == t && !enc[i].empty)
            .collect()
    });
    if by_topic.iter().any(Vec::is_empty) {
        return Err(crate::Error::Eval("a topic has no encodable sentences".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut pick = |t: usize| by_topic[t][rng.gen_range(0..by_topic[t].len())];
    let (mut within, mut cross) = (0.0, 0.0);
    for k in 0..pairs {
        let t = k % 2;
        let (a, b) = (pick(t), pick(t));
        within += cosine(&enc[a].repr, &enc[b].repr)?.value;
        let (a, b) = (pick(t), pick(1 - t));
        cross += cosine(&enc[a].repr, &enc[b].repr)?.value;
    }
    Ok((within / pairs as f64, cross / pairs as f64))
}

/// `n` sentences of 5 to 10 tokens over `vocab` word types. Types that
/// were never drawn are appended round-robin, so every type occurs.
pub fn random_sentences(seed: u64, n: usize, vocab: usize) -> Vec<String> {
    let mut rng = seeded_rng(seed);
    let mut sentences: Vec<Vec<String>> = (0..n)
        .map(|_| {
            let len = rng.gen_range(5..=10);
            (0..len).map(|_| word(rng.gen_range(0..vocab))).collect()
        })
        .collect();
    if n > 0 {
        let mut seen = vec![false; vocab];
        for t in sentences.iter().flatten() {
            seen[t[1..].parse::<usize>().expect("generated token")] = true;
        }
        let missing = (0..vocab).filter(|&id| !seen[id]);
        for (slot, id) in missing.enumerate() {
            sentences[slot % n].push(word(id));
        }
    }
    sentences.into_iter().map(|s| s.join(" ")).collect()
}

/// Sentences of 8 to 14 tokens drawn uniformly from `vocab` types, for
/// throughput measurements.
pub fn throughput_sentences(seed: u64, n: usize, vocab: usize) -> Vec<String> {
    let mut rng = seeded_rng(seed);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(8..=14);
            (0..len).map(|_| word(rng.gen_range(0..vocab))).collect::<Vec<_>>().join(" ")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topic_corpus_shape() {
        let c = two_topic_corpus(1, 40, 5, 1000);
        assert_eq!(c.corpus.documents.len(), 40);
        assert_eq!(c.corpus.num_sentences(), 200);
        assert!(c.topics.contains(&0) && c.topics.contains(&1));
        let shuffled = c.shuffled_sentences(2);
        assert_eq!(shuffled.num_sentences(), 200);
        let mut a: Vec<_> = c.corpus.sentences().collect();
        let mut b: Vec<_> = shuffled.sentences().collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn random_sentences_cover_vocab() {
        let s = random_sentences(3, 50, 100);
        let c = Corpus::from_sentences(s);
        assert_eq!(c.build_vocab(1, usize::MAX).unwrap().len(), 100);
    }
}
