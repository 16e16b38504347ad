use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse vector with strictly increasing indices.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub dim: usize,
    pub entries: Vec<(u32, f32)>,
}

impl SparseVector {
    /// Builds a sparse vector, sorting and merging duplicate indices.
    pub fn from_entries(dim: usize, mut entries: Vec<(u32, f32)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(u32, f32)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        SparseVector { dim, entries: merged }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    fn norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, v)| (v as f64) * (v as f64))
            .sum::<f64>()
            .sqrt()
    }

    fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 as f64 * b[j].1 as f64;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// A sentence encoding: dense for distributed models, sparse for TFIDF.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SentenceRepresentation {
    Dense(Vec<f32>),
    Sparse(SparseVector),
}

impl SentenceRepresentation {
    pub fn dim(&self) -> usize {
        match self {
            SentenceRepresentation::Dense(v) => v.len(),
            SentenceRepresentation::Sparse(s) => s.dim,
        }
    }

    pub fn as_dense(&self) -> Option<&[f32]> {
        match self {
            SentenceRepresentation::Dense(v) => Some(v),
            SentenceRepresentation::Sparse(_) => None,
        }
    }

    /// Dense copy; sparse vectors are scattered into `dim` slots.
    pub fn to_dense(&self) -> Vec<f32> {
        match self {
            SentenceRepresentation::Dense(v) => v.clone(),
            SentenceRepresentation::Sparse(s) => {
                let mut out = vec![0.0; s.dim];
                for &(i, v) in &s.entries {
                    out[i as usize] = v;
                }
                out
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cosine {
    pub value: f64,
    /// Set when either vector has zero norm; `value` is then 0.
    pub degenerate: bool,
}

pub fn cosine(a: &SentenceRepresentation, b: &SentenceRepresentation) -> Result<Cosine> {
    use SentenceRepresentation::*;
    let (dot, na, nb) = match (a, b) {
        (Dense(x), Dense(y)) => {
            if x.len() != y.len() {
                return Err(Error::DimensionMismatch {
                    expected: x.len(),
                    actual: y.len(),
                });
            }
            let (mut d, mut nx, mut ny) = (0.0f64, 0.0f64, 0.0f64);
            for (&p, &q) in x.iter().zip(y) {
                let (p, q) = (p as f64, q as f64);
                d += p * q;
                nx += p * p;
                ny += q * q;
            }
            (d, nx.sqrt(), ny.sqrt())
        }
        (Sparse(x), Sparse(y)) => {
            if x.dim != y.dim {
                return Err(Error::DimensionMismatch {
                    expected: x.dim,
                    actual: y.dim,
                });
            }
            (x.dot(y), x.norm(), y.norm())
        }
        _ => {
            return Err(Error::InvalidArgument(
                "cannot compare dense and sparse representations".into(),
            ))
        }
    };
    if na == 0.0 || nb == 0.0 {
        return Ok(Cosine {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(Cosine {
        value: (dot / (na * nb)).clamp(-1.0, 1.0),
        degenerate: false,
    })
}

/// Cosine of two equal-length dense slices; 0 when either is the zero vector.
pub fn cosine_dense(a: &[f32], b: &[f32]) -> f64 {
    let (mut d, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&p, &q) in a.iter().zip(b) {
        let (p, q) = (p as f64, q as f64);
        d += p * q;
        na += p * p;
        nb += q * q;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (d / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
    }
}
