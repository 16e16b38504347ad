//! CBOW and SkipGram word embeddings trained with negative sampling,
//! composed into sentence vectors by addition.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, IndexedCorpus, Subsampler, Vocabulary};
use crate::encoder::{Encoding, SentenceEncoder};
use crate::error::{Error, Result};
use crate::fastsent::sum_rows;
use crate::numeric::{
    lr_at, sampled_nll, seeded_rng, worker_rng, Matrix, NegativeSampler, ParamRows, Real, SentenceRepresentation,
    SharedMatrix, TrainConfig,
};
use crate::report::{LossTracker, TrainingReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingMode {
    Cbow,
    Skipgram,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordEmbeddingConfig {
    #[serde(flatten)]
    pub train: TrainConfig,
    pub mode: EmbeddingMode,
    pub window: usize,
}

impl WordEmbeddingConfig {
    pub fn new(mode: EmbeddingMode) -> Self {
        WordEmbeddingConfig {
            train: TrainConfig {
                dim: 500,
                negative_samples: 5,
                ..TrainConfig::default()
            },
            mode,
            window: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.window == 0 {
            return Err(Error::InvalidArgument("window must be at least 1".into()));
        }
        if self.train.negative_samples == 0 {
            return Err(Error::InvalidArgument(
                "word embedding training needs at least one negative sample".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WordEmbeddingModel<T: Real = f32> {
    pub input: Matrix<T>,
    pub output: Matrix<T>,
    pub vocab: Vocabulary,
    pub config: WordEmbeddingConfig,
}

/// One negative-sampling prediction step: the mean of the `sources` input
/// vectors scores `target` against the noise words.
#[derive(Clone, Debug)]
pub struct PredictionGradient<T> {
    pub loss: T,
    pub hidden: Vec<T>,
    /// `∂L/∂hidden`; each source row receives `hidden_grad / sources.len()`.
    pub hidden_grad: Vec<T>,
    pub sources: Vec<u32>,
    /// `∂L/∂z` per scored output row; output row gradient is `coef · hidden`.
    pub output_coefs: Vec<(u32, T)>,
}

impl<T: Real> PredictionGradient<T> {
    pub fn input_row_grads(&self) -> Vec<(u32, Vec<T>)> {
        let scale = T::one() / T::cast(self.sources.len() as f64);
        let mut out: Vec<(u32, Vec<T>)> = Vec::new();
        let mut ids = self.sources.clone();
        ids.sort_unstable();
        for id in ids {
            let g: Vec<T> = self.hidden_grad.iter().map(|&v| v * scale).collect();
            match out.last_mut() {
                Some(last) if last.0 == id => crate::numeric::axpy(T::one(), &g, &mut last.1),
                _ => out.push((id, g)),
            }
        }
        out
    }

    pub fn output_row_grads(&self) -> Vec<(u32, Vec<T>)> {
        let mut coefs = self.output_coefs.clone();
        coefs.sort_by_key(|c| c.0);
        let mut out: Vec<(u32, Vec<T>)> = Vec::new();
        for (id, c) in coefs {
            let g: Vec<T> = self.hidden.iter().map(|&h| h * c).collect();
            match out.last_mut() {
                Some(last) if last.0 == id => crate::numeric::axpy(T::one(), &g, &mut last.1),
                _ => out.push((id, g)),
            }
        }
        out
    }
}

pub fn prediction_gradient<T: Real, P: ParamRows<T>>(
    input: &P,
    output: &P,
    sources: &[u32],
    target: u32,
    negatives: &[usize],
) -> Result<Option<PredictionGradient<T>>> {
    if sources.is_empty() {
        return Ok(None);
    }
    let mut hidden = vec![T::zero(); input.dim()];
    sum_rows(input, sources, &mut hidden);
    let inv = T::one() / T::cast(sources.len() as f64);
    hidden.iter_mut().for_each(|h| *h *= inv);

    let zt = output.dot_row(target as usize, &hidden);
    let zn: Vec<T> = negatives.iter().map(|&n| output.dot_row(n, &hidden)).collect();
    let r = sampled_nll(zt, &zn);
    if !r.loss.is_finite() {
        return Err(Error::NonFinite("negative-sampling loss"));
    }
    let mut hidden_grad = vec![T::zero(); hidden.len()];
    let mut output_coefs = Vec::with_capacity(negatives.len() + 1);
    output.add_row_to(target as usize, r.target_grad, &mut hidden_grad);
    output_coefs.push((target, r.target_grad));
    for (&n, &g) in negatives.iter().zip(&r.negative_grads) {
        output.add_row_to(n, g, &mut hidden_grad);
        output_coefs.push((n as u32, g));
    }
    Ok(Some(PredictionGradient {
        loss: r.loss,
        hidden,
        hidden_grad,
        sources: sources.to_vec(),
        output_coefs,
    }))
}

/// `(sources, target)` prediction steps for one position of a sentence.
fn steps_at(ids: &[u32], pos: usize, reach: usize, mode: EmbeddingMode, out: &mut Vec<(Vec<u32>, u32)>) {
    out.clear();
    let lo = pos.saturating_sub(reach);
    let hi = (pos + reach).min(ids.len() - 1);
    let context = (lo..=hi).filter(|&j| j != pos).map(|j| ids[j]);
    match mode {
        EmbeddingMode::Cbow => {
            let ctx: Vec<u32> = context.collect();
            if !ctx.is_empty() {
                out.push((ctx, ids[pos]));
            }
        }
        EmbeddingMode::Skipgram => out.extend(context.map(|c| (vec![ids[pos]], c))),
    }
}

impl<T: Real> WordEmbeddingModel<T> {
    /// Input rows uniform in `[-0.5/d, 0.5/d]`, output rows zero.
    pub fn new(vocab: Vocabulary, config: WordEmbeddingConfig) -> Result<Self> {
        config.validate()?;
        if vocab.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let dim = config.train.dim;
        let mut rng = seeded_rng(config.train.seed);
        Ok(WordEmbeddingModel {
            input: Matrix::uniform(vocab.len(), dim, 0.5 / dim as f64, &mut rng),
            output: Matrix::zeros(vocab.len(), dim),
            vocab,
            config,
        })
    }

    pub fn from_parts(vocab: Vocabulary, config: WordEmbeddingConfig, input: Matrix<T>, output: Matrix<T>) -> Result<Self> {
        for m in [&input, &output] {
            if m.rows() != vocab.len() || m.cols() != config.train.dim {
                return Err(Error::DimensionMismatch {
                    expected: vocab.len() * config.train.dim,
                    actual: m.rows() * m.cols(),
                });
            }
        }
        Ok(WordEmbeddingModel {
            input,
            output,
            vocab,
            config,
        })
    }

    pub fn dim(&self) -> usize {
        self.input.cols()
    }

    /// Sentence vector as the sum of input embeddings; flagged when empty.
    pub fn compose_additive(&self, ids: &[u32]) -> (Vec<T>, bool) {
        let mut out = vec![T::zero(); self.dim()];
        sum_rows(&self.input, ids, &mut out);
        (out, ids.is_empty())
    }

    pub fn word_vector(&self, token: &str) -> Option<&[T]> {
        self.vocab.id(token).map(|id| self.input.row(id as usize))
    }

    pub fn cast<U: Real>(&self) -> WordEmbeddingModel<U> {
        WordEmbeddingModel {
            input: self.input.cast(),
            output: self.output.cast(),
            vocab: self.vocab.clone(),
            config: self.config.clone(),
        }
    }
}

impl WordEmbeddingModel<f32> {
    /// Negative-sampling SGD over every sentence of `corpus`. Context windows
    /// never cross sentence boundaries; the effective window at each position
    /// is drawn uniformly from `1..=window`.
    pub fn train(&mut self, corpus: &IndexedCorpus) -> Result<TrainingReport> {
        let cfg = self.config.clone();
        cfg.validate()?;
        let sentences: Vec<&[u32]> = corpus
            .sentences()
            .map(|s| s.ids.as_slice())
            .filter(|s| !s.is_empty())
            .collect();
        if sentences.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let k = cfg.train.negative_samples;
        if k >= self.vocab.len() {
            return Err(Error::TooManyNegatives {
                k,
                vocab: self.vocab.len(),
            });
        }
        let sampler = NegativeSampler::new(self.vocab.counts())?;
        let subsampler =
            (cfg.train.subsample > 0.0).then(|| Subsampler::new(self.vocab.counts(), cfg.train.subsample));

        let started = Instant::now();
        let dim = self.dim();
        let input = SharedMatrix::new(std::mem::replace(&mut self.input, Matrix::zeros(0, dim)));
        let output = SharedMatrix::new(std::mem::replace(&mut self.output, Matrix::zeros(0, dim)));
        let words: u64 = sentences.iter().map(|s| s.len() as u64).sum();
        let total = words * cfg.train.epochs as u64;
        let processed = AtomicU64::new(0);
        let workers = cfg.train.workers.min(sentences.len()).max(1);
        let chunk = sentences.len().div_ceil(workers);

        let run_worker = |w: usize| -> Result<LossTracker> {
            let shard = &sentences[(w * chunk).min(sentences.len())..((w + 1) * chunk).min(sentences.len())];
            let shard_words: u64 = shard.iter().map(|s| s.len() as u64).sum();
            let mut tracker = LossTracker::new(shard_words * cfg.train.epochs as u64);
            let mut rng = worker_rng(cfg.train.seed, w as u64);
            let mut steps = Vec::new();
            let mut negs = Vec::new();
            for _ in 0..cfg.train.epochs {
                for &sentence in shard {
                    let done = processed.fetch_add(sentence.len() as u64, Ordering::Relaxed);
                    let lr = lr_at(done as f64 / total as f64, &cfg.train) as f32;
                    let ids = match &subsampler {
                        Some(s) => s.filter(sentence, &mut rng),
                        None => sentence.to_vec(),
                    };
                    for _ in ids.len()..sentence.len() {
                        tracker.skip();
                    }
                    for pos in 0..ids.len() {
                        let reach = cfg.window - rng.gen_range(0..cfg.window);
                        steps_at(&ids, pos, reach, cfg.mode, &mut steps);
                        if steps.is_empty() {
                            tracker.skip();
                            continue;
                        }
                        let mut loss = 0.0;
                        for (sources, target) in &steps {
                            sampler.sample_into(&mut rng, k, *target as usize, &mut negs)?;
                            let Some(g) = prediction_gradient(&input, &output, sources, *target, &negs)? else {
                                continue;
                            };
                            loss += g.loss as f64;
                            let scale = -lr / sources.len() as f32;
                            for &id in sources {
                                input.update_row(id as usize, scale, &g.hidden_grad);
                            }
                            for &(id, c) in &g.output_coefs {
                                output.update_row(id as usize, -lr * c, &g.hidden);
                            }
                        }
                        tracker.record(loss);
                    }
                }
            }
            Ok(tracker)
        };

        let trackers: Result<Vec<LossTracker>> = if workers == 1 {
            run_worker(0).map(|t| vec![t])
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = (0..workers).map(|w| scope.spawn(move || run_worker(w))).collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .collect()
            })
        };
        self.input = input.into_matrix();
        self.output = output.into_matrix();
        let trackers = trackers?;
        if !self.input.is_finite() || !self.output.is_finite() {
            return Err(Error::NonFinite("word embedding parameters"));
        }
        Ok(LossTracker::finish(trackers, started.elapsed()))
    }
}

impl SentenceEncoder for WordEmbeddingModel<f32> {
    fn dim(&self) -> usize {
        self.input.cols()
    }

    fn encode(&self, text: &str) -> Encoding {
        let ids = self.vocab.ids(&tokenize(text));
        let (v, empty) = self.compose_additive(&ids);
        Encoding {
            repr: SentenceRepresentation::Dense(v),
            empty,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_steps() {
        let mut out = Vec::new();
        steps_at(&[10, 11, 12, 13], 1, 1, EmbeddingMode::Cbow, &mut out);
        assert_eq!(out, vec![(vec![10, 12], 11)]);
        steps_at(&[10, 11, 12, 13], 0, 2, EmbeddingMode::Skipgram, &mut out);
        assert_eq!(out, vec![(vec![10], 11), (vec![10], 12)]);
        steps_at(&[10], 0, 5, EmbeddingMode::Cbow, &mut out);
        assert!(out.is_empty());
    }

    #[test]
    fn compose_is_additive_and_flags_empty() {
        let v = Vocabulary::from_counts(vec![("a".into(), 2), ("b".into(), 1)]).unwrap();
        let mut cfg = WordEmbeddingConfig::new(EmbeddingMode::Cbow);
        cfg.train.dim = 2;
        cfg.train.negative_samples = 1;
        let input = Matrix::from_vec(2, 2, vec![0.5f32, -1.25, 2.0, 0.125]).unwrap();
        let m = WordEmbeddingModel::from_parts(v, cfg, input, Matrix::zeros(2, 2)).unwrap();
        assert_eq!(m.compose_additive(&[0, 1]).0, vec![2.5, -1.125]);
        let e = m.encode("nothing here");
        assert!(e.empty);
        assert_eq!(m.encode("b a").repr, m.encode("a b").repr);
    }

    #[test]
    fn config_validation() {
        let mut cfg = WordEmbeddingConfig::new(EmbeddingMode::Skipgram);
        assert!(cfg.validate().is_ok());
        cfg.window = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = WordEmbeddingConfig::new(EmbeddingMode::Skipgram);
        cfg.train.negative_samples = 0;
        assert!(cfg.validate().is_err());
    }
}
