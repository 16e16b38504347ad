use rayon::prelude::*;
use serde::Serialize;

use super::correlation::{pearson, spearman};
use super::data::EvalPair;
use crate::encoder::SentenceEncoder;
use crate::error::{Error, Result};
use crate::numeric::cosine;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelatednessResult {
    pub spearman: f64,
    pub pearson: f64,
    pub pairs: usize,
    /// Sentences with no in-vocabulary token; they score cosine 0.
    pub empty_encodings: usize,
}

/// Correlates `cos(encode(s1), encode(s2))` with the gold ratings. Nothing
/// is trained.
pub fn relatedness_eval<E: SentenceEncoder + ?Sized>(encoder: &E, pairs: &[EvalPair]) -> Result<RelatednessResult> {
    if pairs.len() < 3 {
        return Err(Error::Eval(format!("relatedness needs at least 3 pairs, got {}", pairs.len())));
    }
    let scored: Vec<(f64, usize)> = pairs
        .par_iter()
        .map(|p| {
            let (a, b) = (encoder.encode(&p.s1), encoder.encode(&p.s2));
            let empty = usize::from(a.empty) + usize::from(b.empty);
            cosine(&a.repr, &b.repr).map(|c| (c.value, empty))
        })
        .collect::<Result<_>>()?;
    let predicted: Vec<f64> = scored.iter().map(|s| s.0).collect();
    let gold: Vec<f64> = pairs.iter().map(|p| p.gold).collect();
    Ok(RelatednessResult {
        spearman: spearman(&predicted, &gold)?,
        pearson: pearson(&predicted, &gold)?,
        pairs: pairs.len(),
        empty_encodings: scored.iter().map(|s| s.1).sum(),
    })
}
