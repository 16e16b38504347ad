use std::time::Instant;

use serde::Serialize;

use crate::encoder::{Encoding, SentenceEncoder};
use crate::numeric::SentenceRepresentation;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThroughputReport {
    pub sentences: usize,
    pub wall_seconds: f64,
    pub sentences_per_second: f64,
    /// Input text plus encoded vectors held at once.
    pub peak_memory_bytes: usize,
}

/// Encodes every sentence in parallel and times it.
pub fn benchmark_encode<E: SentenceEncoder + ?Sized>(encoder: &E, sentences: &[String]) -> (Vec<Encoding>, ThroughputReport) {
    let start = Instant::now();
    let out = encoder.encode_batch(sentences);
    let wall = start.elapsed().as_secs_f64();
    let vectors: usize = out
        .iter()
        .map(|e| match &e.repr {
            SentenceRepresentation::Dense(v) => v.len() * 4,
            SentenceRepresentation::Sparse(s) => s.nnz() * 8,
        })
        .sum();
    let text: usize = sentences.iter().map(String::len).sum();
    let report = ThroughputReport {
        sentences: out.len(),
        wall_seconds: wall,
        sentences_per_second: out.len() as f64 / wall.max(1e-9),
        peak_memory_bytes: text + vectors,
    };
    (out, report)
}
