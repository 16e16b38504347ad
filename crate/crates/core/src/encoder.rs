use rayon::prelude::*;

use crate::numeric::SentenceRepresentation;

/// Output of encoding one sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoding {
    pub repr: SentenceRepresentation,
    /// No in-vocabulary token was found; `repr` is the zero vector.
    pub empty: bool,
}

/// Common contract for everything that maps raw sentences to vectors.
pub trait SentenceEncoder: Sync {
    /// Dimension of produced representations.
    fn dim(&self) -> usize;

    fn encode(&self, text: &str) -> Encoding;

    fn encode_batch(&self, texts: &[String]) -> Vec<Encoding> {
        texts.par_iter().map(|t| self.encode(t)).collect()
    }
}

impl<E: SentenceEncoder + ?Sized> SentenceEncoder for &E {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn encode(&self, text: &str) -> Encoding {
        (**self).encode(text)
    }
}

impl<E: SentenceEncoder + ?Sized> SentenceEncoder for Box<E> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn encode(&self, text: &str) -> Encoding {
        (**self).encode(text)
    }
}
