use rand::distributions::{Distribution, WeightedIndex};

use super::{Real, Rng};
use crate::error::{Error, Result};

/// Exponent applied to unigram counts for the negative-sampling noise distribution.
pub const UNIGRAM_POWER: f64 = 0.75;

/// Replaces `scores` by `softmax(scores)` and returns `log Σ exp(scores)`.
pub fn softmax_in_place<T: Real>(scores: &mut [T]) -> T {
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
    max + sum.ln()
}

/// Negative log softmax probability of `target` and its gradient with
/// respect to the scores, `softmax(scores) - onehot(target)`.
pub fn softmax_nll<T: Real>(scores: &[T], target: usize) -> Result<(T, Vec<T>)> {
    softmax_nll_counts(scores, &[(target, 1)])
}

/// Sum of negative log softmax probabilities over a multiset of targets given
/// as `(index, multiplicity)` pairs. All targets share one score vector, so
/// the softmax is computed once.
pub fn softmax_nll_counts<T: Real>(scores: &[T], targets: &[(usize, u32)]) -> Result<(T, Vec<T>)> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("softmax scores"));
    }
    let mut grad = scores.to_vec();
    let lse = softmax_in_place(&mut grad);
    let total: u32 = targets.iter().map(|&(_, c)| c).sum();
    let total = T::cast(total as f64);
    for g in grad.iter_mut() {
        *g *= total;
    }
    let mut loss = T::zero();
    for &(t, c) in targets {
        if t >= scores.len() {
            return Err(Error::InvalidArgument(format!(
                "target {t} out of range for {} scores",
                scores.len()
            )));
        }
        let c = T::cast(c as f64);
        loss += c * (lse - scores[t]);
        grad[t] -= c;
    }
    Ok((loss, grad))
}

/// `ln σ(x)`, stable for large |x|.
#[inline]
pub fn log_sigmoid<T: Real>(x: T) -> T {
    // ln σ(x) = -softplus(-x) = min(x, 0) - ln(1 + e^{-|x|})
    x.min(T::zero()) - (-x.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Negative-sampling logistic loss for one target.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledNll<T> {
    pub loss: T,
    /// Derivative of the loss with respect to the target score.
    pub target_grad: T,
    /// Derivatives with respect to each negative score, in input order.
    pub negative_grads: Vec<T>,
}

/// `-ln σ(target) - Σ ln σ(-negative)`.
pub fn sampled_nll<T: Real>(target_score: T, negative_scores: &[T]) -> SampledNll<T> {
    let mut loss = -log_sigmoid(target_score);
    let target_grad = sigmoid(target_score) - T::one();
    let negative_grads = negative_scores
        .iter()
        .map(|&z| {
            loss -= log_sigmoid(-z);
            sigmoid(z)
        })
        .collect();
    SampledNll {
        loss,
        target_grad,
        negative_grads,
    }
}

/// Draws noise words from the unigram distribution raised to [`UNIGRAM_POWER`].
#[derive(Clone, Debug)]
pub struct NegativeSampler {
    dist: WeightedIndex<f64>,
    vocab: usize,
}

impl NegativeSampler {
    pub fn new(counts: &[u64]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(UNIGRAM_POWER)).collect();
        let dist = WeightedIndex::new(weights)
            .map_err(|e| Error::InvalidArgument(format!("noise distribution: {e}")))?;
        Ok(NegativeSampler {
            dist,
            vocab: counts.len(),
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab
    }

    /// Fills `out` with `k` noise ids, none equal to `target`.
    pub fn sample_into(&self, rng: &mut Rng, k: usize, target: usize, out: &mut Vec<usize>) -> Result<()> {
        if k >= self.vocab {
            return Err(Error::TooManyNegatives { k, vocab: self.vocab });
        }
        out.clear();
        while out.len() < k {
            let id = self.dist.sample(rng);
            if id != target {
                out.push(id);
            }
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut Rng, k: usize, target: usize) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(k);
        self.sample_into(rng, k, target, &mut out)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::numeric::seeded_rng;

    #[test]
    fn uniform_two_way() {
        let (loss, grad) = softmax_nll(&[0.0f64, 0.0], 0).unwrap();
        assert_abs_diff_eq!(loss, std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(grad[0], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(grad[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn shifted_uniform_four_way() {
        let (loss, _) = softmax_nll(&[10.0f64; 4], 2).unwrap();
        assert_abs_diff_eq!(loss, 4f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn known_value() {
        // -ln(e^3 / (e + e^2 + e^3)), evaluated with mpmath at 30 digits.
        let (loss, _) = softmax_nll(&[1.0f64, 2.0, 3.0], 2).unwrap();
        assert_abs_diff_eq!(loss, 0.407_605_964_444_380_3, epsilon = 1e-14);
    }

    #[test]
    fn rejects_non_finite_and_bad_target() {
        assert!(matches!(
            softmax_nll(&[0.0f64, f64::NAN], 0),
            Err(Error::NonFinite(_))
        ));
        assert!(softmax_nll(&[0.0f64, 1.0], 2).is_err());
    }

    #[test]
    fn counts_equal_sum_of_singles() {
        let scores = [0.3f64, -1.2, 2.0, 0.0];
        let (multi, g) = softmax_nll_counts(&scores, &[(1, 2), (3, 1)]).unwrap();
        let (a, ga) = softmax_nll(&scores, 1).unwrap();
        let (b, gb) = softmax_nll(&scores, 3).unwrap();
        assert_abs_diff_eq!(multi, 2.0 * a + b, epsilon = 1e-12);
        for j in 0..4 {
            assert_abs_diff_eq!(g[j], 2.0 * ga[j] + gb[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn sampled_saturates() {
        let r = sampled_nll(30.0f64, &[-30.0, -30.0]);
        assert!(r.loss < 1e-12);
        assert!(r.target_grad.abs() < 1e-12);
    }

    #[test]
    fn sampled_gradient_matches_differences() {
        let z = [0.7f64, -0.4, 1.3];
        let r = sampled_nll(z[0], &z[1..]);
        let h = 1e-6;
        for i in 0..3 {
            let mut p = z;
            let mut m = z;
            p[i] += h;
            m[i] -= h;
            let fd = (sampled_nll(p[0], &p[1..]).loss - sampled_nll(m[0], &m[1..]).loss) / (2.0 * h);
            let an = if i == 0 { r.target_grad } else { r.negative_grads[i - 1] };
            assert_abs_diff_eq!(fd, an, epsilon = 1e-8);
        }
    }

    #[test]
    fn sampler_deterministic_and_excludes_target() {
        let counts: Vec<u64> = (1..=10).rev().collect();
        let s = NegativeSampler::new(&counts).unwrap();
        let a = s.sample(&mut seeded_rng(9), 2, 0).unwrap();
        let b = s.sample(&mut seeded_rng(9), 2, 0).unwrap();
        assert_eq!(a, b);
        let many = s.sample(&mut seeded_rng(1), 9, 3).unwrap();
        assert!(many.iter().all(|&n| n != 3 && n < 10));
    }

    #[test]
    fn sampler_rejects_k_at_vocab_size() {
        let s = NegativeSampler::new(&[3, 2, 1]).unwrap();
        assert!(matches!(
            s.sample(&mut seeded_rng(0), 3, 0),
            Err(Error::TooManyNegatives { k: 3, vocab: 3 })
        ));
    }

    fn central_difference(scores: &[f64], target: usize, i: usize, h: f64) -> f64 {
        let mut p = scores.to_vec();
        let mut m = scores.to_vec();
        p[i] += h;
        m[i] -= h;
        (softmax_nll(&p, target).unwrap().0 - softmax_nll(&m, target).unwrap().0) / (2.0 * h)
    }

    proptest! {
        #[test]
        fn gradient_matches_central_differences(
            scores in prop::collection::vec(-3.0f64..3.0, 10),
            target in 0usize..10,
        ) {
            let (_, grad) = softmax_nll(&scores, target).unwrap();
            let fd: Vec<f64> = (0..10).map(|i| central_difference(&scores, target, i, 1e-5)).collect();
            let diff = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale = grad.iter().map(|a| a * a).sum::<f64>().sqrt();
            prop_assert!(diff / scale < 1e-6, "relative error {}", diff / scale);
        }

        #[test]
        fn shift_invariant(
            scores in prop::collection::vec(-5.0f64..5.0, 1..12),
            c in -50.0f64..50.0,
            t in any::<prop::sample::Index>(),
        ) {
            let target = t.index(scores.len());
            let shifted: Vec<f64> = scores.iter().map(|s| s + c).collect();
            let a = softmax_nll(&scores, target).unwrap().0;
            let b = softmax_nll(&shifted, target).unwrap().0;
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
