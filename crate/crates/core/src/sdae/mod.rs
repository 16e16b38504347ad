//! Sequential (denoising) autoencoder: an LSTM encoder–decoder trained to
//! reconstruct a sentence from a corrupted copy of it.
//!
//! The input embedding table has one extra row for the begin-of-sentence
//! pseudo-input and the output softmax has one extra class for
//! end-of-sentence, both at index `vocab.len()`.

pub mod lstm;
pub mod noise;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use lstm::{LstmParams, LstmStep};
pub use noise::{corrupt, corrupt_with_stats, CorruptionStats, NoiseParams};

use crate::corpus::{tokenize, IndexedCorpus, Vocabulary};
use crate::encoder::{Encoding, SentenceEncoder};
use crate::error::{Error, Result};
use crate::numeric::{axpy, linear_decay, seeded_rng, softmax_nll, Matrix, Real, SentenceRepresentation};
use crate::report::{LossTracker, TrainingReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdaeConfig {
    pub word_dim: usize,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub lr0: f64,
    pub lr_min: f64,
    pub seed: u64,
    pub noise: NoiseParams,
    /// Global gradient-norm clipping threshold.
    pub clip_norm: f64,
    /// Parameters are initialised uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
    pub frozen_embeddings: bool,
}

impl Default for SdaeConfig {
    fn default() -> Self {
        SdaeConfig {
            word_dim: 64,
            hidden_dim: 128,
            epochs: 1,
            lr0: 0.1,
            lr_min: 1e-3,
            seed: 1,
            noise: NoiseParams::default(),
            clip_norm: 5.0,
            init_scale: 0.1,
            frozen_embeddings: false,
        }
    }
}

impl SdaeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.word_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::InvalidArgument("SDAE dimensions must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if !(self.lr_min > 0.0 && self.lr_min <= self.lr0) {
            return Err(Error::InvalidArgument("learning rates must satisfy 0 < lr_min <= lr0".into()));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::InvalidArgument("clip_norm must be positive".into()));
        }
        self.noise.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Seq2SeqModel<T: Real = f32> {
    /// `(vocab + 1) × word_dim`; the last row is the begin-of-sentence input.
    pub embeddings: Matrix<T>,
    pub encoder: LstmParams<T>,
    pub decoder: LstmParams<T>,
    /// `(vocab + 1) × hidden_dim`; the last row scores end-of-sentence.
    pub output: Matrix<T>,
    pub output_bias: Vec<T>,
    pub vocab: Vocabulary,
    pub config: SdaeConfig,
}

/// Gradients of every parameter block. Embedding gradients are sparse.
#[derive(Clone, Debug)]
pub struct Seq2SeqGrads<T: Real> {
    pub embeddings: BTreeMap<u32, Vec<T>>,
    pub encoder: LstmParams<T>,
    pub decoder: LstmParams<T>,
    pub output: Matrix<T>,
    pub output_bias: Vec<T>,
}

impl<T: Real> Seq2SeqGrads<T> {
    fn zeros_like(m: &Seq2SeqModel<T>) -> Self {
        Seq2SeqGrads {
            embeddings: BTreeMap::new(),
            encoder: LstmParams::zeros(m.encoder.input, m.encoder.hidden),
            decoder: LstmParams::zeros(m.decoder.input, m.decoder.hidden),
            output: Matrix::zeros(m.output.rows(), m.output.cols()),
            output_bias: vec![T::zero(); m.output_bias.len()],
        }
    }

    fn reset(&mut self) {
        self.embeddings.clear();
        self.encoder.fill_zero();
        self.decoder.fill_zero();
        self.output.fill(T::zero());
        self.output_bias.iter_mut().for_each(|b| *b = T::zero());
    }

    fn add_embedding(&mut self, row: u32, g: &[T]) {
        let e = self
            .embeddings
            .entry(row)
            .or_insert_with(|| vec![T::zero(); g.len()]);
        axpy(T::one(), g, e);
    }

    pub fn norm(&self, include_embeddings: bool) -> f64 {
        let mut sq = self.encoder.sq_norm() + self.decoder.sq_norm();
        sq += self
            .output
            .as_slice()
            .iter()
            .chain(&self.output_bias)
            .map(|v| v.to_f64c() * v.to_f64c())
            .sum::<f64>();
        if include_embeddings {
            sq += self
                .embeddings
                .values()
                .flatten()
                .map(|v| v.to_f64c() * v.to_f64c())
                .sum::<f64>();
        }
        sq.sqrt()
    }
}

impl<T: Real> Seq2SeqModel<T> {
    pub fn new(vocab: Vocabulary, config: SdaeConfig) -> Result<Self> {
        config.validate()?;
        if vocab.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut rng = seeded_rng(config.seed);
        let rows = vocab.len() + 1;
        let (dw, dh, s) = (config.word_dim, config.hidden_dim, config.init_scale);
        Ok(Seq2SeqModel {
            embeddings: Matrix::uniform(rows, dw, s, &mut rng),
            encoder: LstmParams::init(dw, dh, s, &mut rng),
            decoder: LstmParams::init(dw, dh, s, &mut rng),
            output: Matrix::uniform(rows, dh, s, &mut rng),
            output_bias: vec![T::zero(); rows],
            vocab,
            config,
        })
    }

    /// Replaces embedding rows of words found in `pretrained` (a token list
    /// aligned with matrix rows). `word_dim` must equal the matrix width.
    pub fn load_pretrained(&mut self, tokens: &[String], vectors: &Matrix<f32>) -> Result<usize> {
        if vectors.cols() != self.config.word_dim {
            return Err(Error::DimensionMismatch {
                expected: self.config.word_dim,
                actual: vectors.cols(),
            });
        }
        let mut found = 0;
        for (i, tok) in tokens.iter().enumerate() {
            if let Some(id) = self.vocab.id(tok) {
                for (dst, &src) in self.embeddings.row_mut(id as usize).iter_mut().zip(vectors.row(i)) {
                    *dst = T::cast(src as f64);
                }
                found += 1;
            }
        }
        Ok(found)
    }

    pub fn bos(&self) -> usize {
        self.vocab.len()
    }

    pub fn eos(&self) -> usize {
        self.vocab.len()
    }

    pub fn hidden_dim(&self) -> usize {
        self.encoder.hidden
    }

    pub fn cast<U: Real>(&self) -> Seq2SeqModel<U> {
        Seq2SeqModel {
            embeddings: self.embeddings.cast(),
            encoder: self.encoder.cast(),
            decoder: self.decoder.cast(),
            output: self.output.cast(),
            output_bias: self.output_bias.iter().map(|&b| U::cast(b.to_f64c())).collect(),
            vocab: self.vocab.clone(),
            config: self.config.clone(),
        }
    }

    fn run_encoder(&self, ids: &[u32]) -> Vec<LstmStep<T>> {
        let hd = self.hidden_dim();
        let zero = vec![T::zero(); hd];
        let mut steps: Vec<LstmStep<T>> = Vec::with_capacity(ids.len());
        for &id in ids {
            let (h, c) = match steps.last() {
                Some(s) => (s.h.as_slice(), s.c()),
                None => (zero.as_slice(), zero.as_slice()),
            };
            let step = self.encoder.forward(self.embeddings.row(id as usize), h, c);
            steps.push(step);
        }
        steps
    }

    /// Final encoder hidden state; `None` for an empty sentence.
    pub fn encode_ids(&self, ids: &[u32]) -> Option<Vec<T>> {
        if ids.is_empty() {
            return None;
        }
        let hd = self.hidden_dim();
        let mut h = vec![T::zero(); hd];
        let mut c = vec![T::zero(); hd];
        let mut scratch = Vec::with_capacity(4 * hd);
        for &id in ids {
            self.encoder
                .step_in_place(self.embeddings.row(id as usize), &mut h, &mut c, &mut scratch);
        }
        Some(h)
    }

    fn logits(&self, h: &[T]) -> Vec<T> {
        let mut z = self.output_bias.clone();
        for (j, zj) in z.iter_mut().enumerate() {
            *zj += crate::numeric::dot(self.output.row(j), h);
        }
        z
    }

    /// Teacher-forced reconstruction loss of `target` given `source`, summed
    /// over the `target.len() + 1` decoder steps (the last predicts
    /// end-of-sentence), and the gradient of every parameter block.
    pub fn reconstruction_loss(&self, source: &[u32], target: &[u32]) -> Result<(T, Seq2SeqGrads<T>)> {
        let mut grads = Seq2SeqGrads::zeros_like(self);
        let loss = self.accumulate_gradients(source, target, &mut grads)?;
        Ok((loss, grads))
    }

    fn accumulate_gradients(&self, source: &[u32], target: &[u32], grads: &mut Seq2SeqGrads<T>) -> Result<T> {
        if target.is_empty() {
            return Err(Error::InvalidArgument("reconstruction target is empty".into()));
        }
        let hd = self.hidden_dim();
        let enc = self.run_encoder(source);
        let (h0, c0) = match enc.last() {
            Some(s) => (s.h.clone(), s.c().to_vec()),
            None => (vec![T::zero(); hd], vec![T::zero(); hd]),
        };

        let mut inputs = Vec::with_capacity(target.len() + 1);
        inputs.push(self.bos() as u32);
        inputs.extend_from_slice(target);
        let mut outputs: Vec<usize> = target.iter().map(|&t| t as usize).collect();
        outputs.push(self.eos());

        let mut dec: Vec<LstmStep<T>> = Vec::with_capacity(inputs.len());
        let mut dlogits: Vec<Vec<T>> = Vec::with_capacity(inputs.len());
        let mut loss = T::zero();
        for (t, &inp) in inputs.iter().enumerate() {
            let (h, c) = match dec.last() {
                Some(s) => (s.h.as_slice(), s.c()),
                None => (h0.as_slice(), c0.as_slice()),
            };
            let step = self.decoder.forward(self.embeddings.row(inp as usize), h, c);
            let (l, g) = softmax_nll(&self.logits(&step.h), outputs[t])?;
            loss += l;
            dlogits.push(g);
            dec.push(step);
        }

        let mut dh = vec![T::zero(); hd];
        let mut dc = vec![T::zero(); hd];
        for t in (0..dec.len()).rev() {
            let g = &dlogits[t];
            grads.output.rank1_acc(T::one(), g, &dec[t].h);
            axpy(T::one(), g, &mut grads.output_bias);
            self.output.matvec_t_acc(g, &mut dh);
            let dx = self.decoder.backward(&dec[t], &mut dh, &mut dc, &mut grads.decoder);
            grads.add_embedding(inputs[t], &dx);
        }
        for t in (0..enc.len()).rev() {
            let dx = self.encoder.backward(&enc[t], &mut dh, &mut dc, &mut grads.encoder);
            grads.add_embedding(source[t], &dx);
        }
        Ok(loss)
    }

    /// Greedy decoding from the encoding of `source`, stopping at
    /// end-of-sentence or after `max_len` tokens.
    pub fn greedy_decode(&self, source: &[u32], max_len: usize) -> Vec<u32> {
        let hd = self.hidden_dim();
        let enc = self.run_encoder(source);
        let (mut h, mut c) = match enc.last() {
            Some(s) => (s.h.clone(), s.c().to_vec()),
            None => (vec![T::zero(); hd], vec![T::zero(); hd]),
        };
        let mut inp = self.bos();
        let mut out = Vec::new();
        while out.len() < max_len {
            let step = self.decoder.forward(self.embeddings.row(inp), &h, &c);
            let z = self.logits(&step.h);
            let best = z
                .iter()
                .enumerate()
                .fold((0, T::neg_infinity()), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc })
                .0;
            if best == self.eos() {
                break;
            }
            out.push(best as u32);
            inp = best;
            h = step.h;
            c = step.c;
        }
        out
    }

    /// Fraction of tokens that greedy decoding of each uncorrupted sentence
    /// reproduces at the same position.
    pub fn reconstruction_accuracy(&self, corpus: &IndexedCorpus) -> f64 {
        let (mut hit, mut total) = (0usize, 0usize);
        for s in corpus.sentences() {
            let decoded = self.greedy_decode(&s.ids, 2 * s.ids.len() + 5);
            total += s.ids.len();
            hit += s.ids.iter().zip(&decoded).filter(|(a, b)| a == b).count();
        }
        if total == 0 {
            0.0
        } else {
            hit as f64 / total as f64
        }
    }

    fn apply(&mut self, grads: &Seq2SeqGrads<T>, lr: f64) {
        let norm = grads.norm(!self.config.frozen_embeddings);
        let clip = if norm > self.config.clip_norm { self.config.clip_norm / norm } else { 1.0 };
        let step = T::cast(-lr * clip);
        self.encoder.add_scaled(step, &grads.encoder);
        self.decoder.add_scaled(step, &grads.decoder);
        axpy(step, grads.output.as_slice(), self.output.as_mut_slice());
        axpy(step, &grads.output_bias, &mut self.output_bias);
        if !self.config.frozen_embeddings {
            for (&row, g) in &grads.embeddings {
                axpy(step, g, self.embeddings.row_mut(row as usize));
            }
        }
    }

    /// SGD over `(corrupt(S), S)` pairs for every sentence of `corpus`, in
    /// corpus order. Document structure is ignored and fresh noise is drawn
    /// for every example.
    pub fn train(&mut self, corpus: &IndexedCorpus) -> Result<TrainingReport> {
        self.config.validate()?;
        let sentences: Vec<&[u32]> = corpus.sentences().map(|s| s.ids.as_slice()).collect();
        if sentences.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let started = Instant::now();
        let cfg = self.config.clone();
        let total = (sentences.len() * cfg.epochs) as u64;
        let mut tracker = LossTracker::new(total);
        let mut rng = crate::numeric::worker_rng(cfg.seed, 0);
        let mut grads = Seq2SeqGrads::zeros_like(self);
        let mut done = 0u64;
        for _ in 0..cfg.epochs {
            for &target in &sentences {
                let lr = linear_decay(done as f64 / total as f64, cfg.lr0, cfg.lr_min);
                done += 1;
                if target.is_empty() {
                    tracker.skip();
                    continue;
                }
                let source = corrupt(target, cfg.noise, &mut rng);
                grads.reset();
                let loss = self.accumulate_gradients(&source, target, &mut grads)?;
                if !loss.is_finite() {
                    return Err(Error::NonFinite("SDAE loss"));
                }
                tracker.record(loss.to_f64c());
                self.apply(&grads, lr);
            }
        }
        if !self.encoder.is_finite() || !self.decoder.is_finite() || !self.output.is_finite() {
            return Err(Error::NonFinite("SDAE parameters"));
        }
        Ok(LossTracker::finish(vec![tracker], started.elapsed()))
    }
}

impl SentenceEncoder for Seq2SeqModel<f32> {
    fn dim(&self) -> usize {
        self.hidden_dim()
    }

    fn encode(&self, text: &str) -> Encoding {
        let ids = self.vocab.ids(&tokenize(text));
        match self.encode_ids(&ids) {
            Some(h) => Encoding {
                repr: SentenceRepresentation::Dense(h),
                empty: false,
            },
            None => Encoding {
                repr: SentenceRepresentation::Dense(vec![0.0; self.hidden_dim()]),
                empty: true,
            },
        }
    }
}
