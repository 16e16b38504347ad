//! Unsupervised distributed sentence representations.
//!
//! Two sentence-level objectives, [`fastsent`] (log-linear prediction of
//! neighbouring sentences) and [`sdae`] (sequential denoising autoencoder),
//! sit next to raw-text [`baselines`] and an [`eval`] harness covering
//! relatedness correlation, supervised classification and cross-benchmark
//! consistency.

pub mod baselines;
pub mod corpus;
pub mod encoder;
pub mod eval;
pub mod error;
pub mod fastsent;
pub mod gradcheck;
pub mod model_io;
pub mod nn;
pub mod numeric;
pub mod report;
pub mod sdae;
pub mod synthetic;
pub mod throughput;

pub use baselines::{EmbeddingMode, TfidfModel, WordEmbeddingConfig, WordEmbeddingModel};
pub use corpus::{build_vocab, tokenize, Corpus, IndexedCorpus, Sentence, SentenceTriple, Vocabulary};
pub use encoder::{Encoding, SentenceEncoder};
pub use error::{Error, ModelFileError, Result};
pub use fastsent::{FastSentConfig, FastSentModel};
pub use model_io::{AnyModel, ModelKind};
pub use numeric::{cosine, Matrix, SentenceRepresentation, SparseVector, TrainConfig};
pub use report::TrainingReport;
pub use sdae::{NoiseParams, SdaeConfig, Seq2SeqModel};
