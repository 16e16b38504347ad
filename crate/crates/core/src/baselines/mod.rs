//! Raw-text baselines: additive composition of CBOW/SkipGram word vectors
//! and sparse TFIDF bag-of-words vectors.

pub mod tfidf;
pub mod word2vec;

pub use tfidf::{TfidfConfig, TfidfModel, DEFAULT_MAX_FEATURES};
pub use word2vec::{prediction_gradient, EmbeddingMode, PredictionGradient, WordEmbeddingConfig, WordEmbeddingModel};
