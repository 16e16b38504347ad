//! Corpus ingestion: tokenization, vocabularies and ordered sentence windows.
//!
//! Corpus files hold one sentence per line; a blank line ends a document.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::numeric::Rng;

/// Lowercases, splits on whitespace and emits every punctuation or symbol
/// character as its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
            continue;
        }
        if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
        if !ch.is_whitespace() && !ch.is_control() {
            tokens.push(ch.to_lowercase().collect());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Token ↔ id map. Ids are dense and ordered by descending corpus
/// frequency, ties broken lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds from `(token, count)` pairs, which must already be in canonical
    /// order with distinct tokens.
    pub fn from_counts(entries: Vec<(String, u64)>) -> Result<Self> {
        for w in entries.windows(2) {
            let ordered = w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0);
            if !ordered {
                return Err(Error::InvalidArgument(format!(
                    "vocabulary not in canonical order at {:?} / {:?}",
                    w[0].0, w[1].0
                )));
            }
        }
        let mut index = HashMap::with_capacity(entries.len());
        let mut tokens = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        for (i, (tok, count)) in entries.into_iter().enumerate() {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::InvalidArgument(format!("invalid vocabulary token {tok:?}")));
            }
            index.insert(tok.clone(), i as u32);
            tokens.push(tok);
            counts.push(count);
        }
        Ok(Vocabulary { tokens, counts, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Maps tokens to ids, silently dropping out-of-vocabulary tokens.
    pub fn ids<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().filter_map(|t| self.id(t.as_ref())).collect()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for (tok, count) in self.tokens.iter().zip(&self.counts) {
            writeln!(w, "{tok}\t{count}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (tok, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(format!("vocab line {}", lineno + 1), "expected token<TAB>count"))?;
            let count = count
                .trim()
                .parse::<u64>()
                .map_err(|e| Error::parse(format!("vocab line {}", lineno + 1), e.to_string()))?;
            entries.push((tok.to_string(), count));
        }
        Vocabulary::from_counts(entries)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Vocabulary::read_from(BufReader::new(f))
    }
}

/// Counts tokens over a stream of tokenized sentences and keeps the
/// `max_size` most frequent tokens seen at least `min_count` times.
pub fn build_vocab<I, S, T>(sentences: I, min_count: u64, max_size: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    if min_count == 0 || max_size == 0 {
        return Err(Error::InvalidArgument(
            "min_count and max_size must be at least 1".into(),
        ));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for sentence in sentences {
        for tok in sentence {
            let tok = tok.as_ref();
            match counts.get_mut(tok) {
                Some(c) => *c += 1,
                None => {
                    counts.insert(tok.to_string(), 1);
                }
            }
        }
    }
    if counts.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut entries: Vec<(String, u64)> = counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
    entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(max_size);
    Vocabulary::from_counts(entries)
}

/// A sentence after vocabulary lookup. `ids` may be empty when every token
/// was out of vocabulary; such sentences keep their slot in the document so
/// adjacency is preserved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub ids: Vec<u32>,
    pub raw: String,
}

impl Sentence {
    pub fn new(raw: &str, vocab: &Vocabulary) -> Self {
        Sentence {
            ids: vocab.ids(&tokenize(raw)),
            raw: raw.to_string(),
        }
    }
}

/// Three consecutive sentences of one document.
#[derive(Clone, Copy, Debug)]
pub struct SentenceTriple<'a> {
    pub prev: &'a Sentence,
    pub mid: &'a Sentence,
    pub next: &'a Sentence,
}

/// One triple per interior sentence of `doc`.
pub fn iter_triples(doc: &[Sentence]) -> impl Iterator<Item = SentenceTriple<'_>> {
    doc.windows(3).map(|w| SentenceTriple {
        prev: &w[0],
        mid: &w[1],
        next: &w[2],
    })
}

/// Streams documents (groups of non-blank lines) from a corpus reader.
pub struct DocumentReader<R> {
    lines: std::io::Lines<R>,
    done: bool,
}

impl<R: BufRead> DocumentReader<R> {
    pub fn new(reader: R) -> Self {
        DocumentReader {
            lines: reader.lines(),
            done: false,
        }
    }
}

impl<R: BufRead> Iterator for DocumentReader<R> {
    type Item = Result<Vec<String>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut doc = Vec::new();
        loop {
            match self.lines.next() {
                None => {
                    self.done = true;
                    return if doc.is_empty() { None } else { Some(Ok(doc)) };
                }
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
                Some(Ok(line)) => {
                    let line = line.trim();
                    if line.is_empty() {
                        if !doc.is_empty() {
                            return Some(Ok(doc));
                        }
                    } else {
                        doc.push(line.to_string());
                    }
                }
            }
        }
    }
}

/// Raw corpus held in memory as documents of sentence strings.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Vec<String>>,
}

impl Corpus {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let documents = DocumentReader::new(reader).collect::<Result<Vec<_>>>()?;
        Ok(Corpus { documents })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Corpus::from_reader(BufReader::new(f))
    }

    /// Treats every sentence as its own single-sentence document.
    pub fn from_sentences<S: Into<String>>(sentences: impl IntoIterator<Item = S>) -> Self {
        Corpus {
            documents: sentences.into_iter().map(|s| vec![s.into()]).collect(),
        }
    }

    pub fn sentences(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().flatten().map(String::as_str)
    }

    pub fn num_sentences(&self) -> usize {
        self.documents.iter().map(Vec::len).sum()
    }

    pub fn build_vocab(&self, min_count: u64, max_size: usize) -> Result<Vocabulary> {
        build_vocab(self.sentences().map(tokenize), min_count, max_size)
    }

    pub fn index(&self, vocab: &Vocabulary) -> IndexedCorpus {
        IndexedCorpus {
            documents: self
                .documents
                .iter()
                .map(|doc| doc.iter().map(|s| Sentence::new(s, vocab)).collect())
                .collect(),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, doc) in self.documents.iter().enumerate() {
            if i > 0 {
                writeln!(w)?;
            }
            for s in doc {
                writeln!(w, "{s}")?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Corpus after vocabulary lookup.
#[derive(Clone, Debug, Default)]
pub struct IndexedCorpus {
    pub documents: Vec<Vec<Sentence>>,
}

impl IndexedCorpus {
    pub fn triples(&self) -> impl Iterator<Item = SentenceTriple<'_>> {
        self.documents.iter().flat_map(|d| iter_triples(d))
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.documents.iter().flatten()
    }
}

/// Frequent-word subsampling: token `w` with relative frequency `f` is kept
/// with probability `min(1, (sqrt(f/t) + 1) · t/f)`.
#[derive(Clone, Debug)]
pub struct Subsampler {
    keep: Vec<f64>,
}

impl Subsampler {
    pub fn new(counts: &[u64], threshold: f64) -> Self {
        let total: u64 = counts.iter().sum();
        let keep = counts
            .iter()
            .map(|&c| {
                if threshold <= 0.0 || c == 0 {
                    return 1.0;
                }
                let f = c as f64 / total as f64;
                (((f / threshold).sqrt() + 1.0) * threshold / f).min(1.0)
            })
            .collect();
        Subsampler { keep }
    }

    pub fn keep_probability(&self, id: u32) -> f64 {
        self.keep[id as usize]
    }

    pub fn filter(&self, ids: &[u32], rng: &mut Rng) -> Vec<u32> {
        ids.iter()
            .copied()
            .filter(|&id| {
                let p = self.keep[id as usize];
                p >= 1.0 || rng.gen::<f64>() < p
            })
            .collect()
    }
}
