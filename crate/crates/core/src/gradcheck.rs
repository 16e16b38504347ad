//! Central finite-difference checks of the hand-written gradients, run in
//! 64-bit on small random instances.

use rand::Rng as _;

use crate::baselines::prediction_gradient;
use crate::corpus::Vocabulary;
use crate::fastsent::example_gradient;
use crate::numeric::{seeded_rng, Matrix, Rng};
use crate::sdae::{NoiseParams, SdaeConfig, Seq2SeqModel};
use crate::error::Result;

pub const STEP: f64 = 1e-5;
/// Gradients smaller than this are compared on an absolute scale.
pub const MAGNITUDE_FLOOR: f64 = 1e-5;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(MAGNITUDE_FLOOR)
}

/// Worst relative error of one parameter block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockCheck {
    pub block: &'static str,
    pub coordinates: usize,
    pub max_relative_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub blocks: Vec<BlockCheck>,
}

impl GradCheck {
    pub fn max_relative_error(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_relative_error).fold(0.0, f64::max)
    }

    pub fn coordinates(&self) -> usize {
        self.blocks.iter().map(|b| b.coordinates).sum()
    }
}

/// Compares `analytic` with central differences of `loss` over every
/// coordinate of the block reached through `block`.
fn check_block<M>(
    name: &'static str,
    model: &mut M,
    block: impl Fn(&mut M) -> &mut [f64],
    analytic: &[f64],
    loss: impl Fn(&M) -> Result<f64>,
) -> Result<BlockCheck> {
    let n = block(model).len();
    assert_eq!(n, analytic.len(), "analytic gradient of {name} has the wrong size");
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = block(model)[i];
        block(model)[i] = orig + STEP;
        let plus = loss(model)?;
        block(model)[i] = orig - STEP;
        let minus = loss(model)?;
        block(model)[i] = orig;
        let numeric = (plus - minus) / (2.0 * STEP);
        worst = worst.max(relative_error(a, numeric));
    }
    Ok(BlockCheck {
        block: name,
        coordinates: n,
        max_relative_error: worst,
    })
}

fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut Rng) -> Matrix<f64> {
    Matrix::uniform(rows, cols, scale, rng)
}

fn random_ids(rng: &mut Rng, vocab: usize, min_len: usize, max_len: usize) -> Vec<u32> {
    let len = rng.gen_range(min_len..=max_len);
    (0..len).map(|_| rng.gen_range(0..vocab as u32)).collect()
}

fn dense_rows(rows: usize, cols: usize, sparse: Vec<(u32, Vec<f64>)>) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for (id, g) in sparse {
        for (o, v) in out[id as usize * cols..(id as usize + 1) * cols].iter_mut().zip(g) {
            *o += v;
        }
    }
    out
}

struct FastSentParams {
    source: Matrix<f64>,
    target: Matrix<f64>,
}

/// Random vocabulary, dimension and sentence triple; exact softmax objective.
/// With `autoencode` the middle sentence's own words are also predicted.
pub fn check_fastsent(seed: u64, autoencode: bool) -> Result<GradCheck> {
    let mut rng = seeded_rng(seed);
    let v = rng.gen_range(5..25);
    let d = rng.gen_range(2..6);
    check_fastsent_sized(rng.gen(), v, d, autoencode)
}

pub fn check_fastsent_sized(seed: u64, v: usize, d: usize, autoencode: bool) -> Result<GradCheck> {
    let mut rng = seeded_rng(seed);
    let mut p = FastSentParams {
        source: random_matrix(v, d, 0.8, &mut rng),
        target: random_matrix(v, d, 0.8, &mut rng),
    };
    let prev = random_ids(&mut rng, v, 1, 5);
    let mid = random_ids(&mut rng, v, 1, 5);
    let next = random_ids(&mut rng, v, 1, 5);
    let mut targets = prev.clone();
    if autoencode {
        targets.extend_from_slice(&mid);
    }
    targets.extend_from_slice(&next);

    let g = example_gradient(&p.source, &p.target, &mid, &targets, None)?.expect("non-empty example");
    let gs = dense_rows(v, d, g.source_row_grads());
    let gt = dense_rows(v, d, g.target_row_grads());
    let loss = |p: &FastSentParams| -> Result<f64> {
        Ok(example_gradient(&p.source, &p.target, &mid, &targets, None)?
            .expect("non-empty example")
            .loss)
    };
    Ok(GradCheck {
        blocks: vec![
            check_block("source", &mut p, |p| p.source.as_mut_slice(), &gs, loss)?,
            check_block("target", &mut p, |p| p.target.as_mut_slice(), &gt, loss)?,
        ],
    })
}

/// Mean of context input vectors predicts a centre word against fixed noise
/// words (repeats allowed in both).
pub fn check_cbow(seed: u64) -> Result<GradCheck> {
    let mut rng = seeded_rng(seed);
    let v = rng.gen_range(6..20);
    let d = rng.gen_range(2..6);
    check_cbow_sized(rng.gen(), v, d)
}

pub fn check_cbow_sized(seed: u64, v: usize, d: usize) -> Result<GradCheck> {
    let mut rng = seeded_rng(seed);
    let mut p = FastSentParams {
        source: random_matrix(v, d, 0.8, &mut rng),
        target: random_matrix(v, d, 0.8, &mut rng),
    };
    let context = random_ids(&mut rng, v, 1, 6);
    let centre = rng.gen_range(0..v as u32);
    let k = rng.gen_range(1..6);
    let negatives: Vec<usize> = (0..k)
        .map(|_| loop {
            let n = rng.gen_range(0..v);
            if n != centre as usize {
                break n;
            }
        })
        .collect();
    let g = prediction_gradient(&p.source, &p.target, &context, centre, &negatives)?.expect("non-empty context");
    let gi = dense_rows(v, d, g.input_row_grads());
    let go = dense_rows(v, d, g.output_row_grads());
    let loss = |p: &FastSentParams| -> Result<f64> {
        Ok(prediction_gradient(&p.source, &p.target, &context, centre, &negatives)?
            .expect("non-empty context")
            .loss)
    };
    Ok(GradCheck {
        blocks: vec![
            check_block("input", &mut p, |p| p.source.as_mut_slice(), &gi, loss)?,
            check_block("output", &mut p, |p| p.target.as_mut_slice(), &go, loss)?,
        ],
    })
}

/// Random small encoder-decoder; the target differs from the source as it
/// would after corruption.
pub fn check_sdae(seed: u64) -> Result<GradCheck> {
    let mut rng = seeded_rng(seed);
    let v = rng.gen_range(4..13);
    let (dw, dh) = (rng.gen_range(2..5), rng.gen_range(2..7));
    let len = rng.gen_range(0..6);
    check_sdae_sized(rng.gen(), v, dw, dh, len)
}

/// `len` is the source length; the target is a corrupted-looking sentence
/// of at least one token.
pub fn check_sdae_sized(seed: u64, v: usize, word_dim: usize, hidden_dim: usize, len: usize) -> Result<GradCheck> {
    let mut rng = seeded_rng(seed);
    let vocab = Vocabulary::from_counts((0..v).map(|i| (format!("w{i}"), (v - i) as u64)).collect())?;
    let config = SdaeConfig {
        word_dim,
        hidden_dim,
        seed: rng.gen(),
        init_scale: 0.5,
        noise: NoiseParams::NONE,
        ..SdaeConfig::default()
    };
    let mut m: Seq2SeqModel<f64> = Seq2SeqModel::<f32>::new(vocab, config)?.cast();
    let source = random_ids(&mut rng, v, len, len);
    let target = random_ids(&mut rng, v, len.max(1), len + 2);
    let (_, g) = m.reconstruction_loss(&source, &target)?;
    let (rows, dw) = (m.embeddings.rows(), m.embeddings.cols());
    let ge = dense_rows(rows, dw, g.embeddings.clone().into_iter().collect());
    let loss = |m: &Seq2SeqModel<f64>| -> Result<f64> { Ok(m.reconstruction_loss(&source, &target)?.0) };
    Ok(GradCheck {
        blocks: vec![
            check_block("embeddings", &mut m, |m| m.embeddings.as_mut_slice(), &ge, loss)?,
            check_block(
                "encoder.weights",
                &mut m,
                |m| m.encoder.weights.as_mut_slice(),
                g.encoder.weights.as_slice(),
                loss,
            )?,
            check_block("encoder.bias", &mut m, |m| &mut m.encoder.bias, &g.encoder.bias, loss)?,
            check_block(
                "decoder.weights",
                &mut m,
                |m| m.decoder.weights.as_mut_slice(),
                g.decoder.weights.as_slice(),
                loss,
            )?,
            check_block("decoder.bias", &mut m, |m| &mut m.decoder.bias, &g.decoder.bias, loss)?,
            check_block("output", &mut m, |m| m.output.as_mut_slice(), g.output.as_slice(), loss)?,
            check_block("output.bias", &mut m, |m| &mut m.output_bias, &g.output_bias, loss)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(1.0, 1.0), 0.0);
        assert!((relative_error(2.0, 1.0) - 0.5).abs() < 1e-15);
        assert!(relative_error(1e-12, 0.0) < 1e-6);
    }

    #[test]
    fn a_wrong_gradient_is_caught() {
        let mut x = vec![1.0, 2.0];
        let r = check_block("x", &mut x, |x| x.as_mut_slice(), &[2.0, 5.0], |x| Ok(x[0] * x[0] + x[1] * x[1])).unwrap();
        assert!(r.max_relative_error > 0.1);
        let r = check_block("x", &mut x, |x| x.as_mut_slice(), &[2.0, 4.0], |x| Ok(x[0] * x[0] + x[1] * x[1])).unwrap();
        assert!(r.max_relative_error < 1e-8);
    }

    #[test]
    fn one_instance_each() {
        assert!(check_fastsent(1, false).unwrap().max_relative_error() < 1e-4);
        assert!(check_fastsent(1, true).unwrap().max_relative_error() < 1e-4);
        assert!(check_cbow(1).unwrap().max_relative_error() < 1e-4);
        assert!(check_sdae(1).unwrap().max_relative_error() < 1e-4);
    }
}
