//! FastSent: a log-linear bag-of-words sentence model.
//!
//! A sentence is the sum of its words' source embeddings. Training makes that
//! sum predict, through a softmax over target embeddings, every word of the
//! neighbouring sentences (and, with `autoencode`, its own words too).

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, IndexedCorpus, SentenceTriple, Subsampler, Vocabulary};
use crate::encoder::{Encoding, SentenceEncoder};
use crate::error::{Error, Result};
use crate::numeric::{
    lr_at, sampled_nll, seeded_rng, softmax_nll_counts, worker_rng, Matrix, NegativeSampler, ParamRows, Real,
    SentenceRepresentation, SharedMatrix, TrainConfig,
};
use crate::report::{LossTracker, TrainingReport};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FastSentConfig {
    #[serde(flatten)]
    pub train: TrainConfig,
    /// Also predict the words of the encoded sentence itself.
    pub autoencode: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FastSentModel<T: Real = f32> {
    /// Source embeddings `u_w`, summed to encode a sentence.
    pub source: Matrix<T>,
    /// Target embeddings `v_w`, scored against the sentence sum.
    pub target: Matrix<T>,
    pub vocab: Vocabulary,
    pub config: FastSentConfig,
}

/// Loss of one training example with its gradient kept in factored form.
#[derive(Clone, Debug)]
pub struct FastSentGradient<T> {
    pub loss: T,
    /// Encoded middle sentence `s`.
    pub sentence: Vec<T>,
    /// `∂L/∂s`; every occurrence of a word in the middle sentence receives it.
    pub source_grad: Vec<T>,
    /// Middle-sentence word ids with multiplicities.
    pub source_rows: Vec<(u32, u32)>,
    /// `∂L/∂z_j` for every scored target row `j` (possibly repeated); the
    /// gradient of target row `j` is `coef · s`.
    pub target_coefs: Vec<(u32, T)>,
}

impl<T: Real> FastSentGradient<T> {
    pub fn source_row_grads(&self) -> Vec<(u32, Vec<T>)> {
        self.source_rows
            .iter()
            .map(|&(id, m)| {
                let m = T::cast(m as f64);
                (id, self.source_grad.iter().map(|&g| g * m).collect())
            })
            .collect()
    }

    /// Per-row target gradients, merged and sorted by row id.
    pub fn target_row_grads(&self) -> Vec<(u32, Vec<T>)> {
        let mut coefs = self.target_coefs.clone();
        coefs.sort_by_key(|c| c.0);
        let mut merged: Vec<(u32, T)> = Vec::new();
        for (id, c) in coefs {
            match merged.last_mut() {
                Some(last) if last.0 == id => last.1 += c,
                _ => merged.push((id, c)),
            }
        }
        merged
            .into_iter()
            .map(|(id, c)| (id, self.sentence.iter().map(|&s| s * c).collect()))
            .collect()
    }
}

fn multiset(ids: &[u32]) -> Vec<(u32, u32)> {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    let mut out: Vec<(u32, u32)> = Vec::new();
    for id in sorted {
        match out.last_mut() {
            Some(last) if last.0 == id => last.1 += 1,
            _ => out.push((id, 1)),
        }
    }
    out
}

/// Sum of source rows, accumulated in id order so the result does not depend
/// on token order.
pub(crate) fn sum_rows<T: Real, P: ParamRows<T> + ?Sized>(rows: &P, ids: &[u32], out: &mut [T]) {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    out.iter_mut().for_each(|v| *v = T::zero());
    for id in sorted {
        rows.add_row_to(id as usize, T::one(), out);
    }
}

/// Loss and gradient of one example.
///
/// `targets` is a multiset of word ids. With `negatives == None` the exact
/// softmax over all target rows is used; otherwise `negatives` holds `k`
/// noise ids per target occurrence, in target order, and the loss is the
/// negative-sampling objective. Returns `None` when `mid` or `targets` is empty.
pub fn example_gradient<T: Real, P: ParamRows<T>>(
    source: &P,
    target: &P,
    mid: &[u32],
    targets: &[u32],
    negatives: Option<&[usize]>,
) -> Result<Option<FastSentGradient<T>>> {
    if mid.is_empty() || targets.is_empty() {
        return Ok(None);
    }
    let dim = source.dim();
    let mut s = vec![T::zero(); dim];
    sum_rows(source, mid, &mut s);
    let mut source_grad = vec![T::zero(); dim];
    let mut target_coefs = Vec::new();
    let loss = match negatives {
        None => {
            let scores: Vec<T> = (0..target.n_rows()).map(|j| target.dot_row(j, &s)).collect();
            let counts: Vec<(usize, u32)> = multiset(targets).into_iter().map(|(id, c)| (id as usize, c)).collect();
            let (loss, grad) = softmax_nll_counts(&scores, &counts)?;
            target_coefs.reserve(grad.len());
            for (j, g) in grad.into_iter().enumerate() {
                target.add_row_to(j, g, &mut source_grad);
                target_coefs.push((j as u32, g));
            }
            loss
        }
        Some(noise) => {
            if targets.is_empty() || noise.len() % targets.len() != 0 {
                return Err(Error::InvalidArgument(format!(
                    "{} negatives cannot be split over {} targets",
                    noise.len(),
                    targets.len()
                )));
            }
            let k = noise.len() / targets.len();
            let mut loss = T::zero();
            let mut neg_scores = vec![T::zero(); k];
            for (i, &t) in targets.iter().enumerate() {
                let negs = &noise[i * k..(i + 1) * k];
                let zt = target.dot_row(t as usize, &s);
                for (z, &n) in neg_scores.iter_mut().zip(negs) {
                    *z = target.dot_row(n, &s);
                }
                let r = sampled_nll(zt, &neg_scores);
                if !r.loss.is_finite() {
                    return Err(Error::NonFinite("negative-sampling loss"));
                }
                loss += r.loss;
                target.add_row_to(t as usize, r.target_grad, &mut source_grad);
                target_coefs.push((t, r.target_grad));
                for (&n, &g) in negs.iter().zip(&r.negative_grads) {
                    target.add_row_to(n, g, &mut source_grad);
                    target_coefs.push((n as u32, g));
                }
            }
            loss
        }
    };
    Ok(Some(FastSentGradient {
        loss,
        sentence: s,
        source_grad,
        source_rows: multiset(mid),
        target_coefs,
    }))
}

/// Prediction targets of a triple: words of the neighbouring sentences, plus
/// the middle sentence's own words when `autoencode` is set.
pub fn triple_targets(triple: &SentenceTriple<'_>, autoencode: bool) -> Vec<u32> {
    let mut t = Vec::with_capacity(
        triple.prev.ids.len() + triple.next.ids.len() + if autoencode { triple.mid.ids.len() } else { 0 },
    );
    t.extend_from_slice(&triple.prev.ids);
    if autoencode {
        t.extend_from_slice(&triple.mid.ids);
    }
    t.extend_from_slice(&triple.next.ids);
    t
}

impl<T: Real> FastSentModel<T> {
    /// Source rows uniform in `[-0.5/d, 0.5/d]`; target rows zero.
    pub fn new(vocab: Vocabulary, config: FastSentConfig) -> Result<Self> {
        config.train.validate()?;
        if vocab.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let dim = config.train.dim;
        let mut rng = seeded_rng(config.train.seed);
        let source = Matrix::uniform(vocab.len(), dim, 0.5 / dim as f64, &mut rng);
        let target = Matrix::zeros(vocab.len(), dim);
        Ok(FastSentModel {
            source,
            target,
            vocab,
            config,
        })
    }

    pub fn from_parts(vocab: Vocabulary, config: FastSentConfig, source: Matrix<T>, target: Matrix<T>) -> Result<Self> {
        for m in [&source, &target] {
            if m.rows() != vocab.len() || m.cols() != config.train.dim {
                return Err(Error::DimensionMismatch {
                    expected: vocab.len() * config.train.dim,
                    actual: m.rows() * m.cols(),
                });
            }
        }
        Ok(FastSentModel {
            source,
            target,
            vocab,
            config,
        })
    }

    pub fn dim(&self) -> usize {
        self.source.cols()
    }

    /// `s = Σ u_w` over in-vocabulary ids; the flag is set when `ids` is empty.
    pub fn encode_ids(&self, ids: &[u32]) -> (Vec<T>, bool) {
        let mut out = vec![T::zero(); self.dim()];
        sum_rows(&self.source, ids, &mut out);
        (out, ids.is_empty())
    }

    /// Exact-softmax loss and gradient for one triple.
    pub fn example_loss(&self, triple: &SentenceTriple<'_>) -> Result<Option<FastSentGradient<T>>> {
        let targets = triple_targets(triple, self.config.autoencode);
        example_gradient(&self.source, &self.target, &triple.mid.ids, &targets, None)
    }

    pub fn cast<U: Real>(&self) -> FastSentModel<U> {
        FastSentModel {
            source: self.source.cast(),
            target: self.target.cast(),
            vocab: self.vocab.clone(),
            config: self.config.clone(),
        }
    }
}

impl FastSentModel<f32> {
    /// SGD over every ordered triple of `corpus` for `epochs` passes with a
    /// linearly decaying learning rate. With `workers > 1` the triples are
    /// sharded and parameters are updated without locking.
    pub fn train(&mut self, corpus: &IndexedCorpus) -> Result<TrainingReport> {
        let cfg = self.config.train.clone();
        cfg.validate()?;
        let triples: Vec<SentenceTriple<'_>> = corpus.triples().collect();
        if triples.is_empty() {
            return Err(Error::NoTriples);
        }
        let negatives = cfg.effective_negatives(self.vocab.len());
        let sampler = if negatives > 0 {
            if negatives >= self.vocab.len() {
                return Err(Error::TooManyNegatives {
                    k: negatives,
                    vocab: self.vocab.len(),
                });
            }
            Some(NegativeSampler::new(self.vocab.counts())?)
        } else {
            None
        };
        let subsampler = (cfg.subsample > 0.0).then(|| Subsampler::new(self.vocab.counts(), cfg.subsample));

        let started = Instant::now();
        let dim = self.dim();
        let source = SharedMatrix::new(std::mem::replace(&mut self.source, Matrix::zeros(0, dim)));
        let target = SharedMatrix::new(std::mem::replace(&mut self.target, Matrix::zeros(0, dim)));
        let total = (triples.len() * cfg.epochs) as u64;
        let processed = AtomicU64::new(0);
        let workers = cfg.workers.min(triples.len()).max(1);
        let chunk = triples.len().div_ceil(workers);
        let autoencode = self.config.autoencode;

        let run_worker = |w: usize| -> Result<LossTracker> {
            let shard = &triples[(w * chunk).min(triples.len())..((w + 1) * chunk).min(triples.len())];
            let mut tracker = LossTracker::new((shard.len() * cfg.epochs) as u64);
            let mut rng = worker_rng(cfg.seed, w as u64);
            let mut noise = Vec::new();
            let mut draw = Vec::new();
            for _ in 0..cfg.epochs {
                for triple in shard {
                    let done = processed.fetch_add(1, Ordering::Relaxed);
                    let lr = lr_at(done as f64 / total as f64, &cfg) as f32;
                    let (mid, targets) = match &subsampler {
                        Some(sub) => (
                            sub.filter(&triple.mid.ids, &mut rng),
                            sub.filter(&triple_targets(triple, autoencode), &mut rng),
                        ),
                        None => (triple.mid.ids.clone(), triple_targets(triple, autoencode)),
                    };
                    let neg = match &sampler {
                        Some(s) => {
                            noise.clear();
                            for &t in &targets {
                                s.sample_into(&mut rng, negatives, t as usize, &mut draw)?;
                                noise.extend_from_slice(&draw);
                            }
                            Some(noise.as_slice())
                        }
                        None => None,
                    };
                    match example_gradient(&source, &target, &mid, &targets, neg)? {
                        None => tracker.skip(),
                        Some(g) => {
                            tracker.record(g.loss as f64);
                            for &(id, m) in &g.source_rows {
                                source.update_row(id as usize, -lr * m as f32, &g.source_grad);
                            }
                            for &(id, c) in &g.target_coefs {
                                if c != 0.0 {
                                    target.update_row(id as usize, -lr * c, &g.sentence);
                                }
                            }
                        }
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
        self.source = source.into_matrix();
        self.target = target.into_matrix();
        let trackers = trackers?;
        if !self.source.is_finite() || !self.target.is_finite() {
            return Err(Error::NonFinite("FastSent parameters"));
        }
        Ok(LossTracker::finish(trackers, started.elapsed()))
    }
}

impl SentenceEncoder for FastSentModel<f32> {
    fn dim(&self) -> usize {
        self.source.cols()
    }

    fn encode(&self, text: &str) -> Encoding {
        let ids = self.vocab.ids(&tokenize(text));
        let (v, empty) = self.encode_ids(&ids);
        Encoding {
            repr: SentenceRepresentation::Dense(v),
            empty,
        }
    }
}
