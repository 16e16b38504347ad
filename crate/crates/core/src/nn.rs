//! Exact cosine nearest-neighbour search over encoded sentences.

use rayon::prelude::*;

use crate::encoder::SentenceEncoder;
use crate::error::{Error, Result};
use crate::numeric::{SentenceRepresentation, SparseVector};

#[derive(Clone, Debug, PartialEq)]
pub struct Neighbour {
    pub index: usize,
    pub sentence: String,
    pub cosine: f64,
}

/// Unit-length rows aligned with their sentences. Sentences that encode to
/// the zero vector are left out.
#[derive(Clone, Debug)]
pub struct NnIndex {
    rows: Vec<SentenceRepresentation>,
    sentences: Vec<String>,
    pub excluded: usize,
}

fn normalized(repr: SentenceRepresentation) -> Option<SentenceRepresentation> {
    match repr {
        SentenceRepresentation::Dense(mut v) => {
            let n = v.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
            (n > 0.0).then(|| {
                v.iter_mut().for_each(|x| *x = (*x as f64 / n) as f32);
                SentenceRepresentation::Dense(v)
            })
        }
        SentenceRepresentation::Sparse(mut s) => {
            let n = s.entries.iter().map(|e| e.1 as f64 * e.1 as f64).sum::<f64>().sqrt();
            (n > 0.0).then(|| {
                s.entries.iter_mut().for_each(|e| e.1 = (e.1 as f64 / n) as f32);
                SentenceRepresentation::Sparse(s)
            })
        }
    }
}

fn sparse_dot(a: &SparseVector, b: &SparseVector) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.entries.len() && j < b.entries.len() {
        let (ia, va) = a.entries[i];
        let (ib, vb) = b.entries[j];
        match ia.cmp(&ib) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += va as f64 * vb as f64;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

fn dot(a: &SentenceRepresentation, b: &SentenceRepresentation) -> f64 {
    match (a, b) {
        (SentenceRepresentation::Dense(x), SentenceRepresentation::Dense(y)) => {
            x.iter().zip(y).map(|(&p, &q)| p as f64 * q as f64).sum()
        }
        (SentenceRepresentation::Sparse(x), SentenceRepresentation::Sparse(y)) => sparse_dot(x, y),
        _ => 0.0,
    }
}

impl NnIndex {
    pub fn build<E: SentenceEncoder + ?Sized>(encoder: &E, sentences: Vec<String>) -> Self {
        let encoded = encoder.encode_batch(&sentences);
        let mut rows = Vec::with_capacity(sentences.len());
        let mut kept = Vec::with_capacity(sentences.len());
        let mut excluded = 0;
        for (s, e) in sentences.into_iter().zip(encoded) {
            match normalized(e.repr) {
                Some(r) => {
                    rows.push(r);
                    kept.push(s);
                }
                None => excluded += 1,
            }
        }
        if excluded > 0 {
            log::info!("{excluded} sentences encode to the zero vector and were left out of the index");
        }
        NnIndex {
            rows,
            sentences: kept,
            excluded,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// The `k` most similar indexed sentences, best first; equal cosines keep
    /// index order.
    pub fn query<E: SentenceEncoder + ?Sized>(&self, encoder: &E, text: &str, k: usize) -> Result<Vec<Neighbour>> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.is_empty() {
            return Err(Error::Eval("nearest-neighbour index is empty".into()));
        }
        let e = encoder.encode(text);
        let q = match e.empty {
            true => None,
            false => normalized(e.repr),
        }
        .ok_or_else(|| Error::Eval("query not encodable".into()))?;
        if q.dim() != self.rows[0].dim() {
            return Err(Error::DimensionMismatch {
                expected: self.rows[0].dim(),
                actual: q.dim(),
            });
        }
        let scores: Vec<f64> = self.rows.par_iter().map(|r| dot(&q, r)).collect();
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Ok(order
            .into_iter()
            .take(k)
            .map(|i| Neighbour {
                index: i,
                sentence: self.sentences[i].clone(),
                cosine: scores[i].clamp(-1.0, 1.0),
            })
            .collect())
    }
}
