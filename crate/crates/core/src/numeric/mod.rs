//! Shared numeric kernel: parameter matrices, softmax losses, learning-rate
//! schedule, seeded randomness and cosine similarity.

mod matrix;
mod real;
mod rng;
mod schedule;
mod similarity;
mod softmax;

pub use matrix::{init_matrix, Matrix, ParamRows, SharedMatrix};
pub use real::Real;
pub use rng::{seeded_rng, worker_rng, Rng};
pub use schedule::{linear_decay, lr_at, TrainConfig, EXACT_SOFTMAX_MAX_VOCAB};
pub use similarity::{cosine, cosine_dense, Cosine, SentenceRepresentation, SparseVector};
pub use softmax::{
    log_sigmoid, sampled_nll, softmax_in_place, softmax_nll, softmax_nll_counts, NegativeSampler,
    SampledNll, UNIGRAM_POWER,
};

/// Dot product accumulated in the element type.
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

pub fn l2_norm<T: Real>(x: &[T]) -> f64 {
    x.iter()
        .map(|v| {
            let v = v.to_f64c();
            v * v
        })
        .sum::<f64>()
        .sqrt()
}
